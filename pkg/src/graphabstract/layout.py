"""2D node placement: Kamada-Kawai, ForceAtlas2, spectral and circular.

All layouts are normalized into the unit viewport with a 5% margin,
preserving aspect ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .graph import Graph, GraphError

MARGIN = 0.05
LAYOUTS = ("kamada_kawai", "forceatlas2", "spectral", "circular")
DEFAULT_LAYOUTS = ("kamada_kawai", "forceatlas2", "spectral")

KK_GRAD_TOL = 1e-4
KK_MAX_SWEEPS = 500
FA2_ITERATIONS = 300
FA2_SCALING = 2.0
EIG_CLUSTER_TOL = 1e-9


@dataclass(frozen=True)
class Layout:
    positions: np.ndarray
    algorithm: str

    def __len__(self) -> int:
        return len(self.positions)


def normalize(positions: np.ndarray, margin: float = MARGIN) -> np.ndarray:
    """Scale uniformly and center so the bounding box fits ``[margin, 1 - margin]^2``."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pos) == 0:
        return pos.copy()
    if not np.all(np.isfinite(pos)):
        raise ValueError("layout has non-finite coordinates")
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    extent = float(np.max(hi - lo))
    if extent <= 1e-12 * max(1.0, float(np.max(np.abs(pos)))):
        return np.full_like(pos, 0.5)
    center = (lo + hi) / 2.0
    return 0.5 + (pos - center) * ((1.0 - 2.0 * margin) / extent)


def graph_distances(g: Graph) -> np.ndarray:
    a = csr_matrix(g.adjacency_matrix())
    return shortest_path(a, method="D", unweighted=True)


def _require_connected(dist: np.ndarray) -> None:
    if not np.all(np.isfinite(dist)):
        raise GraphError("layout requires a connected graph")


def circle_positions(n: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(n) / max(n, 1)
    return np.column_stack([np.cos(theta), np.sin(theta)])


def stress(positions: np.ndarray, dist: np.ndarray) -> float:
    """Sum over pairs of d^-2 (|x_i - x_j| - d)^2."""
    diff = positions[:, None, :] - positions[None, :, :]
    eu = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = np.triu_indices(len(positions), 1)
    d = dist[iu]
    return float(np.sum((eu[iu] - d) ** 2 / (d * d)))


def _stress_setup(dist: np.ndarray):
    n = len(dist)
    w = np.zeros_like(dist)
    off = ~np.eye(n, dtype=bool)
    w[off] = dist[off] ** -2.0
    v = np.diag(w.sum(axis=1)) - w
    return w, v, np.linalg.pinv(v)


def stress_majorization(init: np.ndarray, dist: np.ndarray, tol: float = KK_GRAD_TOL,
                        max_sweeps: int = KK_MAX_SWEEPS) -> tuple[np.ndarray, int]:
    """Minimize weighted stress by repeated Guttman transforms.

    Each transform cannot increase the stress. Stops once every node's
    stress-gradient norm is below ``tol``. Returns ``(positions, sweeps)``.
    """
    x = np.array(init, dtype=float)
    n = len(x)
    if n < 2:
        return x, 0
    w, v, v_pinv = _stress_setup(dist)
    wd = w * dist
    for sweep in range(max_sweeps):
        dx = x[:, 0:1] - x[:, 0]
        dy = x[:, 1:2] - x[:, 1]
        eu = np.sqrt(dx * dx + dy * dy)
        np.fill_diagonal(eu, 1.0)
        b = -wd / np.maximum(eu, 1e-300)
        b[eu == 0.0] = 0.0
        np.fill_diagonal(b, 0.0)
        np.fill_diagonal(b, -b.sum(axis=1))
        bx = b @ x
        grad = 2.0 * (v @ x - bx)
        if np.max(np.sqrt(np.sum(grad * grad, axis=1))) < tol:
            return x, sweep
        x = v_pinv @ bx
    return x, max_sweeps


def kamada_kawai(g: Graph) -> Layout:
    """Spring layout: geometric distance tracks shortest-path distance."""
    n = g.num_nodes
    if n == 0:
        return Layout(np.zeros((0, 2)), "kamada_kawai")
    dist = graph_distances(g)
    _require_connected(dist)
    # start on a circle whose diameter matches the graph diameter
    init = circle_positions(n) * max(1.0, float(dist.max()) / 2.0)
    pos, _ = stress_majorization(init, dist)
    return Layout(normalize(pos), "kamada_kawai")


def forceatlas2_positions(g: Graph, iterations: int = FA2_ITERATIONS, seed: int = 0,
                          init: np.ndarray | None = None,
                          scaling: float = FA2_SCALING) -> np.ndarray:
    """Raw (un-normalized) ForceAtlas2 coordinates.

    Linear attraction along edges, degree-weighted repulsion between all
    pairs, no gravity, exact O(n^2) forces, swing-adaptive global speed.
    """
    n = g.num_nodes
    rng = np.random.default_rng(seed)
    x = rng.random((n, 2)) if init is None else np.array(init, dtype=float)
    if n < 2:
        return x
    adj = g.adjacency_matrix()
    mass = g.degrees.astype(float) + 1.0
    mm = scaling * np.outer(mass, mass)
    np.fill_diagonal(mm, 0.0)
    speed, efficiency, jitter_tol = 1.0, 1.0, 1.0
    old = np.zeros_like(x)
    opt_jitter = 0.05 * np.sqrt(n)
    min_jitter = np.sqrt(opt_jitter)
    for _ in range(iterations):
        dx = x[:, 0:1] - x[:, 0]
        dy = x[:, 1:2] - x[:, 1]
        d2 = dx * dx + dy * dy
        np.fill_diagonal(d2, 1.0)
        coef = mm / np.maximum(d2, 1e-18) - adj
        # F_i = sum_j coef_ij (x_i - x_j)
        force = x * coef.sum(axis=1)[:, None] - coef @ x

        swinging = mass * np.sqrt(np.sum((force - old) ** 2, axis=1))
        traction = 0.5 * mass * np.sqrt(np.sum((force + old) ** 2, axis=1))
        total_swing, total_traction = swinging.sum(), traction.sum()
        if total_swing <= 0.0 or total_traction <= 0.0:
            break
        jitter = jitter_tol * max(min_jitter, min(10.0, opt_jitter * total_traction / n**2))
        if total_swing / total_traction > 2.0:
            if efficiency > 0.05:
                efficiency *= 0.5
            jitter = max(jitter, jitter_tol)
        target = jitter * efficiency * total_traction / total_swing
        if total_swing > jitter * total_traction:
            if efficiency > 0.05:
                efficiency *= 0.7
        elif speed < 1000:
            efficiency *= 1.3
        speed += min(target - speed, 0.5 * speed)

        factor = speed / (1.0 + np.sqrt(speed * swinging))
        x = x + force * factor[:, None]
        old = force
    return x


def forceatlas2(g: Graph, iterations: int = FA2_ITERATIONS, seed: int = 0) -> Layout:
    if g.num_nodes > 1:
        _require_connected(graph_distances(g))
    return Layout(normalize(forceatlas2_positions(g, iterations, seed)), "forceatlas2")


def _canonical_basis(vectors: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` vectors of an orthonormal basis of span(vectors), fixed by
    projecting unit vectors e_0, e_1, ... in order (Gram-Schmidt)."""
    n = vectors.shape[0]
    proj = vectors @ vectors.T
    out = []
    for k in range(n):
        u = proj[:, k].copy()
        for b in out:
            u -= (b @ u) * b
        norm = np.linalg.norm(u)
        if norm > 1e-6:
            out.append(u / norm)
            if len(out) == count:
                break
    return np.column_stack(out)


def spectral_coordinates(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Laplacian (D - A) eigenvectors for the two smallest nonzero eigenvalues.

    Returns ``(coords, eigenvalues)`` before normalization. Within a repeated
    eigenvalue the basis is made canonical, so the result depends only on
    the graph and its node order.
    """
    n = g.num_nodes
    if n < 3:
        raise GraphError("spectral layout needs at least 3 nodes")
    lap = np.diag(g.degrees.astype(float)) - g.adjacency_matrix()
    w, v = np.linalg.eigh(lap)
    if w[1] < 1e-8:
        raise GraphError("spectral layout requires a connected graph")
    cols, vals = [], []
    i = 1
    while len(cols) < 2:
        j = i
        while j + 1 < n and w[j + 1] - w[i] < EIG_CLUSTER_TOL * max(1.0, abs(w[i])):
            j += 1
        take = min(j - i + 1, 2 - len(cols))
        basis = _canonical_basis(v[:, i:j + 1], take)
        for c in range(take):
            cols.append(basis[:, c])
            vals.append(float(np.mean(w[i:j + 1])))
        i = j + 1
    return np.column_stack(cols), np.array(vals)


def spectral_layout(g: Graph) -> Layout:
    coords, _ = spectral_coordinates(g)
    return Layout(normalize(coords), "spectral")


def circular_layout(g: Graph) -> Layout:
    """Node i at angle 2*pi*i/n on the unit circle."""
    if g.num_nodes < 1:
        raise GraphError("circular layout needs at least one node")
    return Layout(normalize(circle_positions(g.num_nodes)), "circular")


def compute_layout(g: Graph, algorithm: str, seed: int = 0) -> Layout:
    if algorithm == "kamada_kawai":
        return kamada_kawai(g)
    if algorithm == "forceatlas2":
        return forceatlas2(g, seed=seed)
    if algorithm == "spectral":
        return spectral_layout(g)
    if algorithm == "circular":
        return circular_layout(g)
    raise ValueError(f"unknown layout {algorithm!r}")
