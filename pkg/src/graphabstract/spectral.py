"""Graphs with a spread of spectral gaps, driven by a mixing parameter mu."""

from __future__ import annotations

import math

import numpy as np

from . import topology
from .graph import Graph, ensure_connected, swap_edges

MU_MAX = 0.8
# (probability, low, high) per stratum
MU_STRATA = ((0.4, 0.0, 0.2), (0.3, 0.2, 0.5), (0.3, 0.5, 0.8))

SPECTRAL_FAMILIES = ("sbm_dumbbell", "sbm_multi", "geometric_evolution", "configuration")


def sample_mu(rng) -> float:
    """Stratified draw: 40% low, 30% medium, 30% high connectivity."""
    u = rng.random()
    acc = 0.0
    for prob, lo, hi in MU_STRATA:
        acc += prob
        if u < acc:
            return float(rng.uniform(lo, hi))
    _, lo, hi = MU_STRATA[-1]
    return float(rng.uniform(lo, hi))


def mu_stratum(mu: float) -> int:
    return 0 if mu < 0.2 else (1 if mu < 0.5 else 2)


def _check_mu(mu: float) -> None:
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mixing parameter {mu} outside [0, 1]")


def between_block_range(mu: float) -> tuple[float, float]:
    """Between-block probability interval for a mixing level."""
    _check_mu(mu)
    if mu < 0.1:
        return 0.001, 0.02
    if mu < 0.3:
        return 0.02, 0.1
    if mu < 0.7:
        return 0.1, 0.3
    return 0.3, mu


def gen_sbm_evolution(n, mu, variant, rng, p_in=None, p_out=None):
    if n < 8:
        raise topology.InfeasibleSizeError(f"SBM needs at least 8 nodes, got {n}")
    if variant == "dumbbell":
        blocks = 2
    elif variant == "multi":
        blocks = int(rng.integers(3, min(5, n // 2) + 1))
    else:
        raise ValueError(f"unknown SBM variant {variant!r}")
    p_in = float(p_in) if p_in is not None else float(rng.uniform(0.6, 0.8))
    lo, hi = between_block_range(mu)
    p_out = float(p_out) if p_out is not None else float(rng.uniform(lo, hi))
    sizes = topology.balanced_sizes(n, blocks)
    bounds = np.cumsum([0] + sizes)
    members = [np.arange(bounds[i], bounds[i + 1]) for i in range(blocks)]
    edges = []
    for i, blk in enumerate(members):
        edges += topology.bernoulli_edges(blk, p_in, rng)
        for other in members[i + 1:]:
            edges += topology.bipartite_bernoulli_edges(blk, other, p_out, rng)
    g = Graph.from_edges(n, edges)
    fixed = ensure_connected(g, rng)
    return fixed, {
        "variant": variant,
        "mu": mu,
        "blocks": blocks,
        "p_in": p_in,
        "p_out": p_out,
        "repairs": fixed.num_edges - g.num_edges,
    }


def base_radius(n: int) -> float:
    return math.sqrt(1.1 * math.log(n) / (math.pi * n))


def extra_edge_count(n: int, mu: float) -> int:
    return int(round(mu * 0.1 * n * math.log(n)))


def gen_geometric_evolution(n, mu, rng):
    """Connected random geometric graph plus ~mu*0.1*n*ln(n) random shortcuts."""
    if n < 5:
        raise topology.InfeasibleSizeError(f"geometric evolution needs 5 nodes, got {n}")
    _check_mu(mu)
    radius = base_radius(n)
    pts = rng.random((n, 2))
    g = Graph.from_edges(n, topology.geometric_edges(pts, radius))
    base = ensure_connected(g, rng)
    repairs = base.num_edges - g.num_edges
    want = extra_edge_count(n, mu)
    present = base.edge_set
    iu, ju = np.triu_indices(n, 1)
    free = [k for k, e in enumerate(zip(iu.tolist(), ju.tolist())) if e not in present]
    k = min(want, len(free))
    picks = rng.choice(len(free), size=k, replace=False) if k else []
    extra = [(int(iu[free[i]]), int(ju[free[i]])) for i in picks]
    out = Graph(n, base.edges + tuple(extra))
    return out, {"mu": mu, "radius": radius, "extra_edges": k, "repairs": repairs}


def gen_configuration_rewired(n, mu, rng, base_kind=None, fraction=None):
    """Degree-preserving rewiring of an SBM or geometric base.

    ``round(fraction * |E|)`` successful double-edge swaps are applied; any
    disconnection is repaired afterwards and counted in ``repairs``.
    """
    if n < 8:
        raise topology.InfeasibleSizeError(f"configuration rewiring needs 8 nodes, got {n}")
    if base_kind is None:
        base_kind = "sbm" if rng.random() < 0.5 else "geometric"
    if base_kind == "sbm":
        variant = "dumbbell" if rng.random() < 0.5 else "multi"
        base, base_params = gen_sbm_evolution(n, mu, variant, rng)
    elif base_kind == "geometric":
        base, base_params = gen_geometric_evolution(n, mu, rng)
    else:
        raise ValueError(f"unknown base kind {base_kind!r}")
    fraction = float(fraction) if fraction is not None else float(rng.uniform(0.3, 0.8))
    nswap = int(round(fraction * base.num_edges))
    edges = swap_edges(list(base.edges), rng, nswap, max_attempts=50 * base.num_edges)
    rewired = Graph(n, tuple(edges))
    fixed = ensure_connected(rewired, rng)
    return fixed, {
        "mu": mu,
        "base_kind": base_kind,
        "base": base_params,
        "fraction": fraction,
        "swaps": nswap,
        "repairs": fixed.num_edges - rewired.num_edges,
    }


def generate(family: str, n: int, mu: float, rng):
    if family == "sbm_dumbbell":
        return gen_sbm_evolution(n, mu, "dumbbell", rng)
    if family == "sbm_multi":
        return gen_sbm_evolution(n, mu, "multi", rng)
    if family == "geometric_evolution":
        return gen_geometric_evolution(n, mu, rng)
    if family == "configuration":
        return gen_configuration_rewired(n, mu, rng)
    raise ValueError(f"unknown spectral family {family!r}")
