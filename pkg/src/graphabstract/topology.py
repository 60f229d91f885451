"""Generators for the six topology families.

Every generator takes a node count and a ``numpy`` Generator, plus optional
keyword overrides for the parameters it would otherwise sample. It returns
``(graph, params)``, where ``params`` records every draw and the number of
edges added by connectivity repair under ``"repairs"``.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph, ensure_connected

FAMILIES = ("cyclic", "geometric", "community", "hierarchical", "bottleneck", "multicore")
BRIDGE_FAMILIES = FAMILIES[1:]

MIN_NODES = {
    "cyclic": 4,
    "geometric": 4,
    "community": 9,
    "hierarchical": 6,
    "bottleneck": 8,
    "multicore": 10,
}


class InfeasibleSizeError(ValueError):
    pass


def _check_size(family: str, n: int) -> None:
    if n < MIN_NODES[family]:
        raise InfeasibleSizeError(f"{family} needs at least {MIN_NODES[family]} nodes, got {n}")


def _uniform(rng, lo, hi, override=None) -> float:
    return float(override) if override is not None else float(rng.uniform(lo, hi))


def _repaired(n: int, edges, rng) -> tuple[Graph, int]:
    g = Graph.from_edges(n, edges)
    fixed = ensure_connected(g, rng)
    return fixed, fixed.num_edges - g.num_edges


def balanced_sizes(n: int, k: int) -> list[int]:
    """Split ``n`` into ``k`` sizes differing by at most one, larger ones first."""
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def bernoulli_edges(nodes, p: float, rng) -> list[tuple[int, int]]:
    """Each pair within ``nodes`` independently with probability ``p``."""
    nodes = np.asarray(nodes)
    k = len(nodes)
    if k < 2 or p <= 0:
        return []
    iu, ju = np.triu_indices(k, 1)
    keep = rng.random(len(iu)) < p
    return list(zip(nodes[iu[keep]].tolist(), nodes[ju[keep]].tolist()))


def bipartite_bernoulli_edges(a, b, p: float, rng) -> list[tuple[int, int]]:
    a, b = np.asarray(a), np.asarray(b)
    if p <= 0 or not len(a) or not len(b):
        return []
    keep = rng.random((len(a), len(b))) < p
    ii, jj = np.nonzero(keep)
    return list(zip(a[ii].tolist(), b[jj].tolist()))


def geometric_edges(points: np.ndarray, radius: float) -> list[tuple[int, int]]:
    """Pairs whose Euclidean distance is at most ``radius``."""
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    iu, ju = np.triu_indices(len(points), 1)
    keep = dist[iu, ju] <= radius
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def annulus_points(n: int, r_inner: float, r_outer: float, rng) -> np.ndarray:
    """Uniform samples (by area) from the annulus ``r_inner <= |p| <= r_outer``."""
    r = np.sqrt(rng.uniform(r_inner**2, r_outer**2, size=n))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return pts


def gen_annular_geometric(n, rng, r_inner=None, thickness=None, radius=None):
    _check_size("cyclic", n)
    r_inner = _uniform(rng, 0.7, 1.2, r_inner)
    thickness = _uniform(rng, 0.05, 0.3, thickness)
    radius = _uniform(rng, 0.5, 0.8, radius)
    pts = annulus_points(n, r_inner, r_inner + thickness, rng)
    g, repairs = _repaired(n, geometric_edges(pts, radius), rng)
    return g, {
        "r_inner": r_inner,
        "r_outer": r_inner + thickness,
        "radius": radius,
        "repairs": repairs,
    }


def gen_random_geometric(n, rng, radius=None):
    _check_size("geometric", n)
    radius = _uniform(rng, 0.15, 0.25, radius)
    pts = rng.random((n, 2))
    g, repairs = _repaired(n, geometric_edges(pts, radius), rng)
    return g, {"radius": radius, "repairs": repairs}


def community_count(n: int) -> int:
    """3 groups below 50 nodes, 4 below 100, 5 from there on (never under 3 nodes each)."""
    return max(3, min(3 + n // 50, 5, n // 3))


def gen_community(n, rng, groups=None, p_in=None, p_out=None):
    _check_size("community", n)
    if groups is None:
        groups = community_count(n)
    p_in = _uniform(rng, 0.6, 0.8, p_in)
    p_out = _uniform(rng, 0.01, 0.05, p_out)
    sizes = balanced_sizes(n, groups)
    bounds = np.cumsum([0] + sizes)
    blocks = [np.arange(bounds[i], bounds[i + 1]) for i in range(groups)]
    edges = []
    for i, blk in enumerate(blocks):
        edges += bernoulli_edges(blk, p_in, rng)
        for other in blocks[i + 1:]:
            edges += bipartite_bernoulli_edges(blk, other, p_out, rng)
    g, repairs = _repaired(n, edges, rng)
    return g, {
        "groups": groups,
        "sizes": sizes,
        "p_in": p_in,
        "p_out": p_out,
        "repairs": repairs,
    }


def hierarchy_sizes(n: int, levels: int, ratio: float = 0.4) -> list[int]:
    """Level sizes from the top (index 0) down; each level ~``ratio`` of the one below."""
    weights = [ratio ** (levels - 1 - lvl) for lvl in range(levels)]
    total = sum(weights)
    sizes = [max(1, int(n * w / total)) for w in weights[:-1]]
    sizes.append(n - sum(sizes))
    if sizes[-1] < 1:
        raise InfeasibleSizeError(f"cannot fit {levels} levels into {n} nodes")
    return sizes


def gen_hierarchical(n, rng, levels=None):
    _check_size("hierarchical", n)
    if levels is None:
        levels = int(rng.integers(2, 5))
    sizes = hierarchy_sizes(n, levels)
    bounds = np.cumsum([0] + sizes)
    tiers = [np.arange(bounds[i], bounds[i + 1]) for i in range(levels)]
    edges = []
    level_p = []
    for lvl, tier in enumerate(tiers):
        p = 0.7 * (levels - lvl) / levels
        level_p.append(p)
        edges += bernoulli_edges(tier, p, rng)
        if lvl == 0:
            continue
        above = tiers[lvl - 1]
        for node in tier.tolist():
            k = min(int(rng.integers(1, 4)), len(above))
            for parent in rng.choice(above, size=k, replace=False).tolist():
                edges.append((parent, node))
    g, repairs = _repaired(n, edges, rng)
    return g, {"levels": levels, "sizes": sizes, "level_p": level_p, "repairs": repairs}


def _link_blocks(a, b, width: int, rng) -> list[tuple[int, int]]:
    """``width`` distinct edges with uniform endpoints in blocks ``a`` and ``b``."""
    width = min(width, len(a) * len(b))
    picks = rng.choice(len(a) * len(b), size=width, replace=False)
    return [(int(a[i // len(b)]), int(b[i % len(b)])) for i in picks.tolist()]


def gen_bottleneck(n, rng, blocks=None, p_intra=None, width=None):
    """Chain of dense blocks; consecutive blocks share ``width`` linking edges.

    Blocks are made internally connected before linking, so the whole graph
    is connected by construction. ``width`` (1..3) is drawn per adjacent pair
    unless fixed by the caller.
    """
    _check_size("bottleneck", n)
    if blocks is None:
        blocks = int(rng.integers(2, min(4, n // 2) + 1))
    p_intra = _uniform(rng, 0.4, 0.6, p_intra)
    sizes = balanced_sizes(n, blocks)
    bounds = np.cumsum([0] + sizes)
    members = [np.arange(bounds[i], bounds[i + 1]) for i in range(blocks)]
    edges = []
    repairs = 0
    for blk in members:
        inner = bernoulli_edges(np.arange(len(blk)), p_intra, rng)
        sub = Graph.from_edges(len(blk), inner)
        fixed = ensure_connected(sub, rng)
        repairs += fixed.num_edges - sub.num_edges
        edges += [(int(blk[u]), int(blk[v])) for u, v in fixed.edges]
    widths = []
    for a, b in zip(members, members[1:]):
        w = int(width) if width is not None else int(rng.integers(1, 4))
        links = _link_blocks(a, b, w, rng)
        widths.append(len(links))
        edges += links
    g, extra = _repaired(n, edges, rng)
    return g, {
        "blocks": blocks,
        "sizes": sizes,
        "p_intra": p_intra,
        "widths": widths,
        "repairs": repairs + extra,
    }


def gen_multicore(n, rng, cores=None, core_fraction=None, p_core=None):
    """Dense cores plus a sparse periphery hanging off them.

    Each core pair is joined through 1-2 bridging nodes of the first core,
    each linked to a random node of the second. Periphery nodes attach to
    1-2 nodes of a single random core and never to each other.
    """
    _check_size("multicore", n)
    core_fraction = _uniform(rng, 0.5, 0.6, core_fraction)
    core_total = int(round(core_fraction * n))
    if cores is None:
        feasible = [c for c in (2, 3) if core_total >= 4 * c]
        if not feasible:
            raise InfeasibleSizeError(f"{n} nodes cannot hold two cores of 4")
        cores = int(rng.choice(feasible))
    if core_total < 4 * cores or core_total > n:
        raise InfeasibleSizeError(f"{core_total} core nodes cannot form {cores} cores of 4")
    p_core = _uniform(rng, 0.6, 0.8, p_core)
    sizes = balanced_sizes(core_total, cores)
    bounds = np.cumsum([0] + sizes)
    members = [np.arange(bounds[i], bounds[i + 1]) for i in range(cores)]
    edges = []
    repairs = 0
    for blk in members:
        sub = Graph.from_edges(len(blk), bernoulli_edges(np.arange(len(blk)), p_core, rng))
        fixed = ensure_connected(sub, rng)
        repairs += fixed.num_edges - sub.num_edges
        edges += [(int(blk[u]), int(blk[v])) for u, v in fixed.edges]
    bridging = []
    for i in range(cores):
        for j in range(i + 1, cores):
            b = int(rng.integers(1, 3))
            bridging.append(b)
            for node in rng.choice(members[i], size=b, replace=False).tolist():
                edges.append((node, int(rng.choice(members[j]))))
    periphery = list(range(core_total, n))
    for node in periphery:
        core = members[int(rng.integers(cores))]
        k = int(rng.integers(1, 3))
        for target in rng.choice(core, size=k, replace=False).tolist():
            edges.append((target, node))
    g, extra = _repaired(n, edges, rng)
    return g, {
        "cores": cores,
        "core_sizes": sizes,
        "core_fraction": core_fraction,
        "p_core": p_core,
        "bridging": bridging,
        "repairs": repairs + extra,
    }


GENERATORS = {
    "cyclic": gen_annular_geometric,
    "geometric": gen_random_geometric,
    "community": gen_community,
    "hierarchical": gen_hierarchical,
    "bottleneck": gen_bottleneck,
    "multicore": gen_multicore,
}


def generate(family: str, n: int, rng, **overrides):
    try:
        gen = GENERATORS[family]
    except KeyError:
        raise ValueError(f"unknown topology family {family!r}") from None
    return gen(n, rng, **overrides)
