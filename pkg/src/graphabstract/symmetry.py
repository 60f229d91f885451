"""Symmetric and asymmetric graph construction for the symmetry task.

Symmetric graphs come from cyclic Cayley graphs, bipartite double covers,
Cartesian products (synthetic factors, or corpus factors filtered by
verdict) and k-fold cyclic covers of corpus graphs. Asymmetric graphs come
from double-edge-swap perturbation of symmetric ones and from filtered
corpus products. Every label is confirmed by the automorphism search.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import topology
from .automorphism import (
    UndecidedSymmetryError,
    compose,
    find_nontrivial_automorphism,
    verify_automorphism,
)
from .graph import (
    Graph,
    SwapExhaustedError,
    connected_components,
    cycle_graph,
    double_edge_swap,
    ensure_connected,
    is_connected,
    path_graph,
    star_graph,
)

log = logging.getLogger(__name__)

SYMMETRIC_METHODS = ("cayley", "double_cover", "cartesian_synthetic", "cartesian_real", "cyclic_cover")
ASYMMETRIC_METHODS = ("perturbed", "cartesian_real")

BASE_SIZES = range(5, 51)
GRAPHS_PER_SIZE = 30
RESTART_PROB = 0.2
LAYER_FANOUT = 5
LAYER_DEPTH = 3
MAX_PRODUCT_NODES = 400
PERTURB_ATTEMPTS = 20
SAMPLE_RETRIES = 400


class CorpusError(ValueError):
    pass


class EmptySourceError(CorpusError):
    pass


class MalformedLineError(CorpusError):
    def __init__(self, path, lineno: int, line: str):
        super().__init__(f"{path}:{lineno}: malformed edge line {line.strip()!r}")
        self.lineno = lineno


class InvalidGeneratorError(ValueError):
    pass


class ProductTooLargeError(ValueError):
    pass


class PerturbationFailedError(RuntimeError):
    pass


class PoolExhaustedError(RuntimeError):
    pass


# --- base-graph corpus ------------------------------------------------------


def read_edge_list(path) -> Graph:
    """Parse a whitespace edge list; ``#`` lines are comments, ids are compacted."""
    path = Path(path)
    pairs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise MalformedLineError(path, lineno, line)
            u, v = int(parts[0]), int(parts[1])
            if u != v:
                pairs.append((u, v))
    if not pairs:
        raise EmptySourceError(f"{path}: no edges")
    ids = sorted({x for e in pairs for x in e})
    index = {x: i for i, x in enumerate(ids)}
    return Graph.from_edges(len(ids), ((index[u], index[v]) for u, v in pairs))


def induced_subgraph(g: Graph, nodes) -> Graph:
    nodes = sorted(int(x) for x in nodes)
    index = {x: i for i, x in enumerate(nodes)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    return Graph(len(nodes), tuple(edges))


def bfs_sample(g: Graph, target: int, rng) -> set[int] | None:
    """Breadth-first expansion from a random root until ``target`` nodes."""
    root = int(rng.integers(g.num_nodes))
    seen = {root}
    queue = deque([root])
    while queue and len(seen) < target:
        u = queue.popleft()
        nbrs = list(g.adjacency[u])
        rng.shuffle(nbrs)
        for w in nbrs:
            if w not in seen:
                seen.add(w)
                queue.append(w)
                if len(seen) == target:
                    break
    return seen if len(seen) == target else None


def random_walk_sample(g: Graph, target: int, rng, restart: float = RESTART_PROB) -> set[int] | None:
    """Random walk that returns to its root with probability ``restart`` per step."""
    root = int(rng.integers(g.num_nodes))
    seen = {root}
    cur = root
    for _ in range(100 * target):
        if len(seen) == target:
            return seen
        if rng.random() < restart:
            cur = root
            continue
        nbrs = g.adjacency[cur]
        if not nbrs:
            return None
        cur = nbrs[int(rng.integers(len(nbrs)))]
        seen.add(cur)
    return seen if len(seen) == target else None


def layered_sample(
    g: Graph, target: int, rng, fanout: int = LAYER_FANOUT, depth: int = LAYER_DEPTH
) -> set[int] | None:
    """Neighbourhood sampling: at most ``fanout`` new neighbours per node per layer."""
    root = int(rng.integers(g.num_nodes))
    seen = {root}
    frontier = [root]
    for _ in range(depth):
        nxt = []
        for u in frontier:
            fresh = [w for w in g.adjacency[u] if w not in seen]
            if len(fresh) > fanout:
                fresh = rng.choice(fresh, size=fanout, replace=False).tolist()
            for w in fresh:
                if len(seen) == target:
                    return seen
                seen.add(w)
                nxt.append(w)
        frontier = nxt
    return seen if len(seen) == target else None


SAMPLERS = {"bfs": bfs_sample, "random_walk": random_walk_sample, "layered": layered_sample}


@dataclass
class BaseGraphCorpus:
    """Connected base graphs bucketed by node count."""

    buckets: dict[int, list[tuple[Graph, str]]] = field(default_factory=dict)
    _verdicts: dict = field(default_factory=dict, repr=False)

    def add(self, g: Graph, source: str) -> None:
        self.buckets.setdefault(g.num_nodes, []).append((g, source))

    def sizes(self) -> list[int]:
        return sorted(k for k, v in self.buckets.items() if v)

    def pick(self, size: int, rng) -> tuple[Graph, str]:
        bucket = self.buckets.get(size)
        if not bucket:
            raise CorpusError(f"no base graphs with {size} nodes")
        return bucket[int(rng.integers(len(bucket)))]

    def symmetric(self, g: Graph) -> bool:
        """Cached symmetry verdict for a corpus graph."""
        key = g.edges, g.num_nodes
        if key not in self._verdicts:
            self._verdicts[key] = find_nontrivial_automorphism(g).symmetric
        return self._verdicts[key]

    def __len__(self) -> int:
        return sum(len(v) for v in self.buckets.values())


def synthetic_base_graph(n: int, rng) -> Graph:
    """Erdos-Renyi graph with p just above the connectivity threshold, then repaired."""
    p = min(1.0, (math.log(n) + rng.uniform(0.5, 1.5)) / n)
    g = Graph.from_edges(n, topology.bernoulli_edges(np.arange(n), p, rng))
    return ensure_connected(g, rng)


def sample_base_graphs(
    sources=None, rng=None, sizes=BASE_SIZES, per_size: int = GRAPHS_PER_SIZE
) -> BaseGraphCorpus:
    """Build a bucketed corpus from source graphs, or synthetically if none are given.

    ``sources`` is an iterable of graphs or edge-list paths. Sources no
    larger than the biggest bucket are used whole (molecule-style corpora);
    larger ones are subsampled by BFS, restart random walks and layered
    neighbourhood sampling in rotation.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    corpus = BaseGraphCorpus()
    sizes = list(sizes)
    if sources is None:
        for n in sizes:
            for _ in range(per_size):
                corpus.add(synthetic_base_graph(n, rng), "synthetic")
        return corpus

    graphs = []
    for src in sources:
        if isinstance(src, Graph):
            graphs.append((src, "graph"))
        else:
            graphs.append((read_edge_list(src), Path(src).name))
    if not graphs:
        raise EmptySourceError("no base-graph sources")

    big = []
    for g, tag in graphs:
        if g.num_nodes <= max(sizes):
            if g.num_nodes in sizes:
                # whole small graphs keep their largest component only
                count, comp = connected_components(g)
                if count > 1:
                    largest = np.bincount(comp).argmax()
                    g = induced_subgraph(g, np.flatnonzero(comp == largest))
                if g.num_nodes in sizes:
                    corpus.add(g, tag)
        else:
            big.append((g, tag))
    if big:
        names = list(SAMPLERS)
        for n in sizes:
            have = len(corpus.buckets.get(n, []))
            tries = 0
            while have < per_size and tries < 20 * per_size:
                g, tag = big[int(rng.integers(len(big)))]
                strategy = names[tries % len(names)]
                tries += 1
                nodes = SAMPLERS[strategy](g, n, rng)
                if nodes is None:
                    continue
                sub = ensure_connected(induced_subgraph(g, nodes), rng)
                corpus.add(sub, f"{tag}:{strategy}")
                have += 1
    if not len(corpus):
        raise EmptySourceError("sources yielded no usable base graphs")
    return corpus


# --- constructions ----------------------------------------------------------


@dataclass(frozen=True)
class CayleySpec:
    n: int
    generators: tuple[int, ...]

    def __post_init__(self):
        if self.n < 3:
            raise InvalidGeneratorError("Cayley graph needs n >= 3")
        if not self.generators:
            raise InvalidGeneratorError("empty generating set")
        for s in self.generators:
            if s % self.n == 0 or math.gcd(s, self.n) != 1:
                raise InvalidGeneratorError(f"generator {s} is not coprime to {self.n}")


def gen_cayley_cyclic(spec: CayleySpec) -> Graph:
    """Cay(Z_n, S): node i joined to i+g and i-g (mod n) for every g in S."""
    n = spec.n
    edges = set()
    for g in spec.generators:
        for i in range(n):
            j = (i + g) % n
            edges.add((min(i, j), max(i, j)))
    return Graph(n, tuple(edges))


def sample_cayley_spec(n: int, rng) -> CayleySpec:
    units = [g for g in range(1, n // 2 + 1) if math.gcd(g, n) == 1]
    k = min(int(rng.integers(1, 4)), len(units))
    picks = rng.choice(units, size=k, replace=False)
    return CayleySpec(n, tuple(sorted(int(x) for x in picks)))


def is_bipartite(g: Graph) -> bool:
    side = [-1] * g.num_nodes
    for s in range(g.num_nodes):
        if side[s] >= 0:
            continue
        side[s] = 0
        stack = [s]
        while stack:
            u = stack.pop()
            for w in g.adjacency[u]:
                if side[w] < 0:
                    side[w] = 1 - side[u]
                    stack.append(w)
                elif side[w] == side[u]:
                    return False
    return True


def bipartite_double_cover(base: Graph) -> Graph:
    """Two copies of the vertex set; node ``(v, i)`` is ``v + i*|V|``."""
    n = base.num_nodes
    edges = []
    for u, v in base.edges:
        edges.append((u, v + n))
        edges.append((u + n, v))
    return Graph(2 * n, tuple(edges))


def layer_swap(n_base: int) -> tuple[int, ...]:
    """The automorphism (v, i) -> (v, 1 - i) of a double cover."""
    return tuple(list(range(n_base, 2 * n_base)) + list(range(n_base)))


def k_fold_cyclic_cover(base: Graph, k: int) -> Graph:
    """``k`` layers; each base edge joins consecutive layers cyclically in both orientations."""
    if not 2 <= k <= 5:
        raise ValueError(f"layer count {k} outside 2..5")
    n = base.num_nodes
    edges = set()
    for u, v in base.edges:
        for i in range(k):
            j = (i + 1) % k
            for a, b in ((u + i * n, v + j * n), (v + i * n, u + j * n)):
                edges.add((min(a, b), max(a, b)))
    return Graph(k * n, tuple(edges))


def layer_rotation(n_base: int, k: int) -> tuple[int, ...]:
    """The automorphism (v, i) -> (v, i+1 mod k) of a k-fold cyclic cover."""
    return tuple(v + ((i + 1) % k) * n_base for i in range(k) for v in range(n_base))


def cartesian_product(g1: Graph, g2: Graph, max_nodes: int = MAX_PRODUCT_NODES) -> Graph:
    """G1 x G2 with node ``(u, v)`` at index ``u * |V2| + v``."""
    n1, n2 = g1.num_nodes, g2.num_nodes
    if n1 < 1 or n2 < 1:
        raise ValueError("factors must be non-empty")
    if n1 * n2 > max_nodes:
        raise ProductTooLargeError(f"{n1} x {n2} exceeds {max_nodes} nodes")
    edges = []
    for u in range(n1):
        edges.extend((u * n2 + a, u * n2 + b) for a, b in g2.edges)
    for v in range(n2):
        edges.extend((a * n2 + v, b * n2 + v) for a, b in g1.edges)
    return Graph(n1 * n2, tuple(edges))


def gen_perturbed_asymmetric(start: Graph, rng, attempts: int = PERTURB_ATTEMPTS) -> Graph:
    """Apply double-edge swaps until the graph is connected and asymmetric.

    Swaps accumulate on the last connected graph; a swap that disconnects
    the graph is discarded but still spends an attempt.
    """
    current = start
    for _ in range(attempts):
        try:
            cand = double_edge_swap(current, rng, max_attempts=50)
        except SwapExhaustedError:
            break
        if not is_connected(cand):
            continue
        if not find_nontrivial_automorphism(cand).symmetric:
            return cand
        current = cand
    raise PerturbationFailedError(f"still symmetric after {attempts} swap attempts")


# --- per-sample construction ------------------------------------------------


def _double_cover_base(b: int, corpus: BaseGraphCorpus, rng) -> tuple[Graph, str]:
    kinds = ["random", "community", "bottleneck"]
    if b in corpus.buckets:
        kinds.append("real")
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "random":
        p = rng.uniform(0.15, 0.3)
        g = Graph.from_edges(b, topology.bernoulli_edges(np.arange(b), p, rng))
        return ensure_connected(g, rng), kind
    if kind == "community":
        g, _ = topology.gen_community(b, rng, p_in=rng.uniform(0.3, 0.7), p_out=rng.uniform(0.05, 0.15))
        return g, kind
    if kind == "bottleneck":
        g, _ = topology.gen_bottleneck(b, rng, p_intra=rng.uniform(0.3, 0.6))
        return g, kind
    g, tag = corpus.pick(b, rng)
    return g, f"real:{tag}"


def _in_range(n: int, node_range) -> bool:
    return node_range[0] <= n <= node_range[1]


def _build_cayley(node_range, corpus, rng):
    n = int(rng.integers(node_range[0], node_range[1] + 1))
    spec = sample_cayley_spec(n, rng)
    return gen_cayley_cyclic(spec), {"n": n, "generators": list(spec.generators)}, None


def _build_double_cover(node_range, corpus, rng):
    lo, hi = math.ceil(node_range[0] / 2), node_range[1] // 2
    b = int(rng.integers(max(lo, 9), hi + 1))
    base, kind = _double_cover_base(b, corpus, rng)
    if is_bipartite(base):
        return None
    return bipartite_double_cover(base), {"base_nodes": b, "base_kind": kind}, layer_swap(b)


def _synthetic_factors(target: int, rng):
    combo = ("cycle_path", "cycle_cycle", "path_star")[int(rng.integers(3))]
    if combo == "path_star":
        leaves = int(rng.integers(2, max(3, int(math.sqrt(target))) + 1))
        length = max(2, round(target / (leaves + 1)))
        return combo, path_graph(length), star_graph(leaves)
    a = int(rng.integers(3, max(4, int(math.sqrt(target))) + 1))
    b = max(3 if combo == "cycle_cycle" else 2, round(target / a))
    second = cycle_graph(b) if combo == "cycle_cycle" else path_graph(b)
    return combo, cycle_graph(a), second


def _build_cartesian_synthetic(node_range, corpus, rng):
    target = int(rng.integers(node_range[0], node_range[1] + 1))
    combo, g1, g2 = _synthetic_factors(target, rng)
    if not _in_range(g1.num_nodes * g2.num_nodes, node_range):
        return None
    return cartesian_product(g1, g2), {"combo": combo, "factors": [g1.num_nodes, g2.num_nodes]}, None


def _factor_sizes(node_range, sizes, rng):
    pairs = [(a, b) for a in sizes for b in sizes if a <= b and _in_range(a * b, node_range)]
    if not pairs:
        return None
    return pairs[int(rng.integers(len(pairs)))]


def _build_cartesian_real(node_range, corpus, rng, want_symmetric: bool):
    # asymmetric products need asymmetric factors, and no asymmetric graph has < 6 nodes
    sizes = [s for s in corpus.sizes() if want_symmetric or s >= 6]
    dims = _factor_sizes(node_range, sizes, rng)
    if dims is None:
        return None
    factors = []
    for size in dims:
        for _ in range(10):
            g, tag = corpus.pick(size, rng)
            if want_symmetric or not corpus.symmetric(g):
                break
        else:
            return None
        factors.append((g, tag))
    (g1, t1), (g2, t2) = factors
    return (
        cartesian_product(g1, g2),
        {"factors": [g1.num_nodes, g2.num_nodes], "sources": [t1, t2]},
        None,
    )


def _build_cyclic_cover(node_range, corpus, rng):
    options = [
        (k, b)
        for k in range(2, 6)
        for b in corpus.sizes()
        if _in_range(k * b, node_range)
    ]
    if not options:
        return None
    k, b = options[int(rng.integers(len(options)))]
    base, tag = corpus.pick(b, rng)
    cover = k_fold_cyclic_cover(base, k)
    if not is_connected(cover):
        return None
    return cover, {"k": k, "base_nodes": b, "source": tag}, layer_rotation(b, k)


_SYMMETRIC_BUILDERS = {
    "cayley": _build_cayley,
    "double_cover": _build_double_cover,
    "cartesian_synthetic": _build_cartesian_synthetic,
    "cartesian_real": lambda r, c, g: _build_cartesian_real(r, c, g, True),
    "cyclic_cover": _build_cyclic_cover,
}


def _symmetric_candidate(method, node_range, corpus, rng):
    built = _SYMMETRIC_BUILDERS[method](node_range, corpus, rng)
    if built is None:
        return None
    g, params, construction = built
    if not _in_range(g.num_nodes, node_range) or not is_connected(g):
        return None
    if construction is not None and not verify_automorphism(g, construction):
        raise AssertionError(f"{method} construction witness failed")
    return g, params, construction


def generate_symmetry_sample(symmetric: bool, node_range, corpus: BaseGraphCorpus, rng,
                             retries: int = SAMPLE_RETRIES):
    """One verified sample of the requested class.

    Returns ``(graph, metadata)``; metadata carries the method tag, sampled
    parameters and, for symmetric graphs, the witness found by the search
    (plus the construction witness for covers).
    """
    methods = SYMMETRIC_METHODS if symmetric else ASYMMETRIC_METHODS
    method = methods[int(rng.integers(len(methods)))]
    for attempt in range(retries):
        try:
            if symmetric:
                cand = _symmetric_candidate(method, node_range, corpus, rng)
                if cand is None:
                    continue
                g, params, construction = cand
            elif method == "perturbed":
                start_method = SYMMETRIC_METHODS[int(rng.integers(len(SYMMETRIC_METHODS)))]
                cand = _symmetric_candidate(start_method, node_range, corpus, rng)
                if cand is None:
                    continue
                try:
                    g = gen_perturbed_asymmetric(cand[0], rng)
                except PerturbationFailedError:
                    continue
                params, construction = {"start_method": start_method, **cand[1]}, None
            else:
                built = _build_cartesian_real(node_range, corpus, rng, False)
                if built is None:
                    continue
                g, params, construction = built
            verdict = find_nontrivial_automorphism(g)
        except UndecidedSymmetryError:
            log.warning("symmetry search undecided; regenerating")
            continue
        if verdict.symmetric != symmetric:
            continue
        meta = {"method": method, "params": params, "attempts": attempt + 1}
        if verdict.symmetric:
            meta["witness"] = list(verdict.witness.mapping)
        if construction is not None:
            meta["construction_witness"] = list(construction)
        return g, meta
    raise PoolExhaustedError(
        f"no verified {'symmetric' if symmetric else 'asymmetric'} {method} graph "
        f"in range {tuple(node_range)} after {retries} tries"
    )


def assemble_symmetry_pool(target_count: int, node_range, corpus: BaseGraphCorpus, rng):
    """``target_count`` verified samples, alternating symmetric and asymmetric.

    Returns a list of ``(graph, label, metadata)`` with label 1 = symmetric.
    """
    pool = []
    for i in range(target_count):
        symmetric = i % 2 == 0
        g, meta = generate_symmetry_sample(symmetric, node_range, corpus, rng)
        pool.append((g, int(symmetric), meta))
    return pool


def rotation_order_holds(phi, k: int) -> bool:
    """tau^k is the identity and no smaller positive power is."""
    ident = tuple(range(len(phi)))
    return compose(phi, k) == ident and all(compose(phi, j) != ident for j in range(1, k))
