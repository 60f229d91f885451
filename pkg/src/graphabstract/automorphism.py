"""Existence test for non-identity automorphisms.

Color refinement followed by individualization-refinement backtracking.
The search stops at the first valid non-identity map it finds, so it
answers "is |Aut(G)| > 1?" without ever enumerating the group.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graph import Graph

DEFAULT_MAX_NODES = 400
DEFAULT_BUDGET = 10**7

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


class AutomorphismError(ValueError):
    pass


class UndecidedSymmetryError(RuntimeError):
    """The search exceeded its node-expansion budget without a verdict."""


@dataclass(frozen=True)
class AutomorphismWitness:
    mapping: tuple[int, ...]

    @property
    def is_identity(self) -> bool:
        return all(i == p for i, p in enumerate(self.mapping))


@dataclass(frozen=True)
class SymmetryVerdict:
    symmetric: bool
    witness: AutomorphismWitness | None = None


def verify_automorphism(g: Graph, phi) -> bool:
    """True iff ``phi`` maps the edge set of ``g`` onto itself."""
    phi = [int(x) for x in phi]
    if len(phi) != g.num_nodes:
        raise AutomorphismError(f"mapping has length {len(phi)}, graph has {g.num_nodes} nodes")
    if sorted(phi) != list(range(g.num_nodes)):
        raise AutomorphismError("mapping is not a permutation")
    edges = g.edge_set
    for u, v in g.edges:
        a, b = phi[u], phi[v]
        if (min(a, b), max(a, b)) not in edges:
            return False
    # a bijection sending E into E sends it onto E
    return True


def _splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (x.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)) & _MASK
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class _Refiner:
    """Equitable-partition refinement on a fixed graph.

    Colors are canonical: a vertex's new color is the rank of
    ``(old color, hash of neighbour color multiset)`` among all vertices,
    so any isomorphism of the colored graph carries colors to colors.
    """

    def __init__(self, g: Graph, budget: int):
        self.n = g.num_nodes
        e = np.asarray(g.edges, dtype=np.int64).reshape(-1, 2)
        self.src = np.concatenate([e[:, 0], e[:, 1]])
        self.dst = np.concatenate([e[:, 1], e[:, 0]])
        self.budget = budget
        self.expanded = 0

    def refine(self, colors: np.ndarray) -> tuple[np.ndarray, tuple[bytes, ...]]:
        self.expanded += 1
        if self.expanded > self.budget:
            raise UndecidedSymmetryError(f"search budget of {self.budget} nodes exhausted")
        n = self.n
        colors = _rank(colors, np.zeros(n, dtype=np.uint64))
        k = int(colors.max()) + 1 if n else 0
        trace = []
        while k < n:
            h = _splitmix(colors)
            sig = np.zeros(n, dtype=np.uint64)
            with np.errstate(over="ignore"):
                np.add.at(sig, self.src, h[self.dst])
            order = np.lexsort((sig, colors))
            trace.append(colors[order].tobytes() + sig[order].tobytes())
            new = _rank(colors, sig)
            k_new = int(new.max()) + 1
            colors = new
            if k_new == k:
                break
            k = k_new
        return colors, tuple(trace)


def _rank(primary: np.ndarray, secondary: np.ndarray) -> np.ndarray:
    order = np.lexsort((secondary, primary))
    p, s = primary[order], secondary[order]
    step = np.empty(len(order), dtype=np.int64)
    if len(order):
        step[0] = 0
        step[1:] = (p[1:] != p[:-1]) | (s[1:] != s[:-1])
    out = np.empty(len(order), dtype=np.int64)
    out[order] = np.cumsum(step)
    return out


def _individualize(colors: np.ndarray, v: int) -> np.ndarray:
    out = colors * 2
    out[v] += 1
    return out


def _target_cell(colors: np.ndarray) -> np.ndarray | None:
    counts = np.bincount(colors)
    multi = np.flatnonzero(counts > 1)
    if len(multi) == 0:
        return None
    return np.flatnonzero(colors == multi[0])


class _Search:
    def __init__(self, g: Graph, budget: int):
        self.g = g
        self.refiner = _Refiner(g, budget)

    def run(self) -> tuple[int, ...] | None:
        colors, _ = self.refiner.refine(np.zeros(self.g.num_nodes, dtype=np.int64))
        while True:
            cell = _target_cell(colors)
            if cell is None:
                return None
            v = int(cell[0])
            left = self.refiner.refine(_individualize(colors, v))
            for w in cell[1:]:
                right = self.refiner.refine(_individualize(colors, int(w)))
                if right[1] != left[1]:
                    continue
                phi = self._match(left[0], right[0])
                if phi is not None:
                    return phi
            # every automorphism fixes v: descend into its stabilizer
            colors = left[0]

    def _match(self, left: np.ndarray, right: np.ndarray) -> tuple[int, ...] | None:
        """Find a map sending the left coloring onto the right one."""
        cell = _target_cell(left)
        if cell is None:
            phi = np.empty(len(left), dtype=np.int64)
            phi[np.argsort(left)] = np.argsort(right)
            mapping = tuple(int(x) for x in phi)
            return mapping if verify_automorphism(self.g, mapping) else None
        color = left[cell[0]]
        l2 = self.refiner.refine(_individualize(left, int(cell[0])))
        for w in np.flatnonzero(right == color):
            r2 = self.refiner.refine(_individualize(right, int(w)))
            if r2[1] != l2[1]:
                continue
            phi = self._match(l2[0], r2[0])
            if phi is not None:
                return phi
        return None


def find_nontrivial_automorphism(
    g: Graph, max_nodes: int = DEFAULT_MAX_NODES, budget: int = DEFAULT_BUDGET
) -> SymmetryVerdict:
    """Decide whether ``g`` has a non-identity automorphism.

    Returns a verdict carrying a verified witness when one exists. Raises
    :class:`UndecidedSymmetryError` when ``budget`` refinement calls are
    spent without an answer.
    """
    if g.num_nodes < 1:
        raise AutomorphismError("empty graph")
    if g.num_nodes > max_nodes:
        raise AutomorphismError(f"{g.num_nodes} nodes exceeds the limit of {max_nodes}")
    phi = _Search(g, budget).run()
    if phi is None:
        return SymmetryVerdict(False)
    witness = AutomorphismWitness(phi)
    assert not witness.is_identity and verify_automorphism(g, phi)
    return SymmetryVerdict(True, witness)


def is_symmetric(g: Graph) -> bool:
    return find_nontrivial_automorphism(g).symmetric


def brute_force_symmetric(g: Graph) -> bool:
    """Exhaustive check over all n! permutations; only sensible for n <= 8."""
    n = g.num_nodes
    if n > 9:
        raise AutomorphismError("brute force limited to 9 nodes")
    if n < 2:
        return False
    a = g.adjacency_matrix().astype(bool)
    perms = np.array(list(itertools.permutations(range(n)))[1:], dtype=np.int64)
    mapped = a[perms[:, :, None], perms[:, None, :]]
    return bool(np.any(np.all(mapped == a, axis=(1, 2))))


def compose(phi, times: int) -> tuple[int, ...]:
    """``phi`` applied ``times`` times."""
    phi = list(phi)
    out = list(range(len(phi)))
    for _ in range(times):
        out = [phi[x] for x in out]
    return tuple(out)
