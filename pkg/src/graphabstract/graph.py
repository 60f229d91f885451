"""Undirected simple graphs and the exact oracles every task label rests on.

Bridges, connected components, the normalized Laplacian and its spectrum,
and degree-preserving double-edge swaps.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

ZERO_EIGENVALUE_TOL = 1e-8
JACOBI_OFF_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


class GraphError(ValueError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class IsolatedNodeError(GraphError):
    pass


class SwapExhaustedError(RuntimeError):
    pass


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..num_nodes-1``.

    ``edges`` is canonicalized on construction to a sorted tuple of
    ``(u, v)`` pairs with ``u < v``.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        n = int(self.num_nodes)
        if n < 0:
            raise GraphError(f"negative node count {n}")
        canon = set()
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for {n} nodes")
            pair = (u, v) if u < v else (v, u)
            if pair in canon:
                raise GraphError(f"duplicate edge {pair}")
            canon.add(pair)
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph, silently dropping duplicate pairs."""
        seen = {(min(u, v), max(u, v)) for u, v in edges}
        return cls(num_nodes, tuple(seen))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        if self.edges:
            e = np.asarray(self.edges)
            np.add.at(deg, e[:, 0], 1)
            np.add.at(deg, e[:, 1], 1)
        return deg

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        if self.edges:
            e = np.asarray(self.edges)
            a[e[:, 0], e[:, 1]] = 1.0
            a[e[:, 1], e[:, 0]] = 1.0
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edge_set

    def relabel(self, perm) -> "Graph":
        """Return the graph with node ``i`` renamed to ``perm[i]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.num_nodes)):
            raise GraphError("relabeling map is not a permutation")
        return Graph(self.num_nodes, tuple((perm[u], perm[v]) for u, v in self.edges))

    def to_dict(self) -> dict:
        return {"num_nodes": self.num_nodes, "edges": [list(e) for e in self.edges]}


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("cycle needs at least 3 nodes")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def star_graph(leaves: int) -> Graph:
    """Hub 0 joined to ``leaves`` leaf nodes."""
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def disjoint_union(*graphs: Graph) -> Graph:
    edges = []
    offset = 0
    for g in graphs:
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        offset += g.num_nodes
    return Graph(offset, tuple(edges))


# --- components -------------------------------------------------------------


def connected_components(g: Graph) -> tuple[int, np.ndarray]:
    """Return ``(count, component_id_per_node)``; ids are assigned in node order."""
    comp = np.full(g.num_nodes, -1, dtype=np.int64)
    adj = g.adjacency
    count = 0
    for s in range(g.num_nodes):
        if comp[s] >= 0:
            continue
        comp[s] = count
        stack = [s]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if comp[w] < 0:
                    comp[w] = count
                    stack.append(w)
        count += 1
    return count, comp


def is_connected(g: Graph) -> bool:
    return g.num_nodes > 0 and connected_components(g)[0] == 1


def ensure_connected(g: Graph, rng: np.random.Generator) -> Graph:
    """Merge components until the graph is connected.

    Each step picks two distinct components uniformly at random and joins a
    uniformly random node of each with one new edge. Original edges are kept;
    exactly ``components - 1`` edges are added.
    """
    count, comp = connected_components(g)
    if count <= 1:
        return g
    groups = [list(np.flatnonzero(comp == c)) for c in range(count)]
    added = []
    while len(groups) > 1:
        i, j = rng.choice(len(groups), size=2, replace=False)
        a, b = groups[i], groups[j]
        u = int(a[rng.integers(len(a))])
        v = int(b[rng.integers(len(b))])
        added.append((u, v))
        merged = a + b
        groups = [grp for k, grp in enumerate(groups) if k not in (i, j)]
        groups.append(merged)
    return Graph(g.num_nodes, g.edges + tuple(added))


# --- bridges ----------------------------------------------------------------


@dataclass(frozen=True)
class BridgeReport:
    bridges: frozenset[tuple[int, int]]

    @property
    def count(self) -> int:
        return len(self.bridges)


def find_bridges(g: Graph) -> BridgeReport:
    """Single-pass low-link bridge detection (iterative DFS)."""
    n = g.num_nodes
    adj = g.adjacency
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # frame: (node, parent, next neighbour index)
        stack = [(root, -1, 0)]
        while stack:
            u, parent, i = stack[-1]
            if i < len(adj[u]):
                stack[-1] = (u, parent, i + 1)
                w = adj[u][i]
                if disc[w] < 0:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, u, 0))
                elif w != parent:
                    low[u] = min(low[u], disc[w])
            else:
                stack.pop()
                if parent >= 0:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.add((min(u, parent), max(u, parent)))
    return BridgeReport(frozenset(bridges))


def bridges_by_removal(g: Graph) -> set[tuple[int, int]]:
    """Definitional oracle: edges whose deletion raises the component count."""
    base = connected_components(g)[0]
    out = set()
    for e in g.edges:
        h = Graph(g.num_nodes, tuple(f for f in g.edges if f != e))
        if connected_components(h)[0] > base:
            out.add(e)
    return out


# --- spectrum ---------------------------------------------------------------


@dataclass(frozen=True)
class SpectralSummary:
    lambda2: float
    eigenvalues: tuple[float, ...]


def normalized_laplacian(g: Graph) -> np.ndarray:
    deg = g.degrees
    if g.num_nodes and deg.min() == 0:
        raise IsolatedNodeError(f"node {int(np.argmin(deg))} has degree 0")
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = -g.adjacency_matrix() * inv_sqrt[:, None] * inv_sqrt[None, :]
    np.fill_diagonal(lap, 1.0)
    return lap


@lru_cache(maxsize=None)
def _pair_layouts(m: int) -> tuple[np.ndarray, ...]:
    """Round-robin pairings of ``m`` (even) indices, one array per round.

    Each array lists the indices so that pairs sit in adjacent slots
    ``(2k, 2k+1)``; over ``m - 1`` rounds every pair meets exactly once.
    """
    players = list(range(m))
    layouts = []
    for _ in range(m - 1):
        perm = np.empty(m, dtype=np.int64)
        for k in range(m // 2):
            perm[2 * k] = players[k]
            perm[2 * k + 1] = players[m - 1 - k]
        layouts.append(perm)
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(layouts)


def _off_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.sqrt(np.sum(off * off)))


def _rotate_pair_rows(rot: np.ndarray, a: np.ndarray) -> np.ndarray:
    h, m = rot.shape[0], a.shape[1]
    return np.matmul(rot, a.reshape(h, 2, m)).reshape(2 * h, m)


def jacobi_eigh(
    matrix: np.ndarray, tol: float = JACOBI_OFF_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps use a round-robin ordering, so each round applies ``n/2`` disjoint
    rotations at once as a batch of 2x2 blocks. Iterates until the
    off-diagonal Frobenius norm drops below ``tol``.

    Returns ``(eigenvalues, eigenvectors)`` sorted ascending, eigenvectors
    as columns.
    """
    a0 = np.array(matrix, dtype=float)
    n = a0.shape[0]
    if a0.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(a0, a0.T, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    if n < 2:
        return np.diag(a0).copy(), np.eye(n)
    # odd sizes get a zero pad row/column; its rotations are all identities
    m = n + (n % 2)
    h = m // 2
    a = np.zeros((m, m))
    a[:n, :n] = 0.5 * (a0 + a0.T)
    v = np.eye(m)
    inv = np.arange(m)
    even, odd = np.arange(0, m, 2), np.arange(1, m, 2)
    rot = np.empty((h, 2, 2))

    for _ in range(max_sweeps + 1):
        if _off_norm(a) < tol:
            break
        if _ >= max_sweeps:
            raise EigenSolverError(f"Jacobi did not converge in {max_sweeps} sweeps")
        for perm in _pair_layouts(m):
            rel = inv[perm]
            a = a.take(rel, axis=0).take(rel, axis=1)
            v = v.take(rel, axis=1)
            inv = np.empty(m, dtype=np.int64)
            inv[perm] = np.arange(m)

            apq = a[even, odd]
            d = np.diagonal(a)
            zero = apq == 0.0
            theta = (d[odd] - d[even]) / (2.0 * np.where(zero, 1.0, apq))
            t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[zero] = 0.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot[:, 0, 0] = c
            rot[:, 0, 1] = -s
            rot[:, 1, 0] = s
            rot[:, 1, 1] = c
            # A <- G^T A G, V <- V G
            b = _rotate_pair_rows(rot, a)
            a = _rotate_pair_rows(rot, np.ascontiguousarray(b.T)).T
            v = _rotate_pair_rows(rot, np.ascontiguousarray(v.T)).T
            a[even, odd] = 0.0
            a[odd, even] = 0.0

    a = a.take(inv, axis=0).take(inv, axis=1)
    v = v.take(inv, axis=1)
    w = np.diag(a)[:n].copy()
    v = v[:n, :n]
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def spectral_gap(g: Graph) -> SpectralSummary:
    """Second-smallest eigenvalue of the normalized Laplacian."""
    if g.num_nodes < 2:
        raise GraphError("spectral gap needs at least 2 nodes")
    if not is_connected(g):
        raise DisconnectedGraphError("spectral gap of a disconnected graph is 0")
    w, _ = jacobi_eigh(normalized_laplacian(g))
    return SpectralSummary(lambda2=float(w[1]), eigenvalues=tuple(float(x) for x in w))


# --- swaps ------------------------------------------------------------------


def swap_edges(
    edges: list[tuple[int, int]],
    rng: np.random.Generator,
    nswap: int,
    max_attempts: int,
) -> list[tuple[int, int]]:
    """Perform ``nswap`` successful double-edge swaps on an edge list.

    Raises :class:`SwapExhaustedError` once ``max_attempts`` candidates have
    been rejected.
    """
    edges = [(min(u, v), max(u, v)) for u, v in edges]
    if nswap and len(edges) < 2:
        raise SwapExhaustedError("need at least two edges to swap")
    present = set(edges)
    done = rejected = 0
    while done < nswap:
        if rejected >= max_attempts:
            raise SwapExhaustedError(
                f"{done}/{nswap} swaps after {rejected} rejected candidates"
            )
        i, j = rng.choice(len(edges), size=2, replace=False)
        a, b = edges[i]
        c, d = edges[j]
        if rng.random() < 0.5:
            c, d = d, c
        e1 = (min(a, d), max(a, d))
        e2 = (min(c, b), max(c, b))
        if a == d or c == b or e1 == e2 or e1 in present or e2 in present:
            rejected += 1
            continue
        present.discard(edges[i])
        present.discard(edges[j])
        present.add(e1)
        present.add(e2)
        edges[i], edges[j] = e1, e2
        done += 1
    return edges


def double_edge_swap(g: Graph, rng: np.random.Generator, max_attempts: int = 100) -> Graph:
    """Replace edges (a,b),(c,d) with (a,d),(c,b); every degree is preserved."""
    if g.num_edges < 2:
        raise SwapExhaustedError("need at least two edges to swap")
    return Graph(g.num_nodes, tuple(swap_edges(list(g.edges), rng, 1, max_attempts)))
