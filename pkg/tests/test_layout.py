import numpy as np
import pytest
from hypothesis import given, settings

from conftest import graphs, random_graph
from graphabstract.graph import Graph, complete_graph, cycle_graph, disjoint_union, ensure_connected, path_graph, star_graph
from graphabstract.layout import (
    MARGIN,
    circle_positions,
    circular_layout,
    compute_layout,
    forceatlas2,
    forceatlas2_positions,
    graph_distances,
    kamada_kawai,
    normalize,
    spectral_coordinates,
    spectral_layout,
    stress,
    stress_majorization,
)


def pairwise(pos):
    return np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)


def in_viewport(pos):
    return np.all(pos >= MARGIN - 1e-12) and np.all(pos <= 1 - MARGIN + 1e-12)


def test_kk_triangle_equilateral():
    d = pairwise(kamada_kawai(complete_graph(3)).positions)
    vals = d[np.triu_indices(3, 1)]
    assert np.ptp(vals) < 1e-3


def test_kk_two_nodes():
    pos = kamada_kawai(path_graph(2)).positions
    assert np.linalg.norm(pos[0] - pos[1]) == pytest.approx(1 - 2 * MARGIN)


def test_kk_descends_from_circle(rng):
    for _ in range(50):
        g = ensure_connected(random_graph(int(rng.integers(5, 40)), 0.15, rng), rng)
        dist = graph_distances(g)
        init = circle_positions(g.num_nodes) * max(1.0, dist.max() / 2)
        out, _ = stress_majorization(init, dist)
        assert stress(out, dist) <= stress(init, dist) + 1e-9


def test_kk_stress_non_increasing_per_sweep(rng):
    g = ensure_connected(random_graph(30, 0.1, rng), rng)
    dist = graph_distances(g)
    x = circle_positions(30) * 3
    prev = stress(x, dist)
    for _ in range(40):
        x, _ = stress_majorization(x, dist, max_sweeps=1)
        cur = stress(x, dist)
        assert cur <= prev + 1e-9
        prev = cur


def test_kk_converges_below_gradient_tolerance(rng):
    g = ensure_connected(random_graph(25, 0.15, rng), rng)
    _, sweeps = stress_majorization(circle_positions(25) * 3, graph_distances(g))
    assert sweeps < 500


def centroid_gap(pos, a, b):
    return np.linalg.norm(pos[a].mean(axis=0) - pos[b].mean(axis=0))


def test_fa2_cliques_drift_apart():
    two = disjoint_union(complete_graph(6), complete_graph(6))
    g = Graph(12, two.edges + ((0, 6),))
    a, b = list(range(6)), list(range(6, 12))
    early = forceatlas2_positions(g, iterations=10, seed=3)
    late = forceatlas2_positions(g, iterations=300, seed=3)
    assert centroid_gap(late, a, b) > centroid_gap(early, a, b)


def test_fa2_single_node_unchanged():
    init = np.array([[0.3, 0.7]])
    assert np.array_equal(forceatlas2_positions(Graph(1), init=init), init)


def test_fa2_deterministic(rng):
    g = ensure_connected(random_graph(20, 0.2, rng), rng)
    assert np.array_equal(forceatlas2(g, seed=4).positions, forceatlas2(g, seed=4).positions)
    assert not np.array_equal(forceatlas2(g, seed=4).positions, forceatlas2(g, seed=5).positions)


def test_spectral_c4_square():
    pos = spectral_layout(cycle_graph(4)).positions
    d = pairwise(pos)
    sides = sorted(d[i, (i + 1) % 4] for i in range(4))
    assert np.ptp(sides) < 1e-9
    assert d[0, 2] == pytest.approx(d[1, 3])
    assert d[0, 2] == pytest.approx(np.sqrt(2) * sides[0])


def test_spectral_eigen_residual_and_centering(rng):
    for _ in range(20):
        g = ensure_connected(random_graph(int(rng.integers(3, 40)), 0.2, rng), rng)
        coords, vals = spectral_coordinates(g)
        lap = np.diag(g.degrees.astype(float)) - g.adjacency_matrix()
        for c in range(2):
            assert np.linalg.norm(lap @ coords[:, c] - vals[c] * coords[:, c]) < 1e-6
            assert abs(coords[:, c].sum()) < 1e-6


def test_spectral_star_overlap_allowed():
    pos = spectral_layout(star_graph(5)).positions
    assert pos.shape == (6, 2) and np.all(np.isfinite(pos))


def test_spectral_degenerate_basis_is_canonical():
    # C_12 has repeated eigenvalues; the chosen basis must not depend on the solver's mixing
    g = cycle_graph(12)
    assert np.array_equal(spectral_layout(g).positions, spectral_layout(g).positions)


def test_circular_angles():
    pos = circle_positions(4)
    assert np.allclose(pos, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-12)
    d = pairwise(circular_layout(cycle_graph(9)).positions)
    arcs = [d[i, (i + 1) % 9] for i in range(9)]
    assert np.ptp(arcs) < 1e-12
    assert np.array_equal(circular_layout(Graph(9)).positions,
                          circular_layout(complete_graph(9)).positions)


def test_normalize_idempotent_and_degenerate():
    pts = np.random.default_rng(0).normal(size=(10, 2))
    once = normalize(pts)
    assert np.allclose(normalize(once), once)
    assert in_viewport(once)
    assert np.all(normalize(np.ones((4, 2))) == 0.5)


@settings(max_examples=25, deadline=None)
@given(graphs(min_nodes=3, max_nodes=25, connected=True))
def test_all_layouts_valid(g):
    for name in ("kamada_kawai", "forceatlas2", "spectral", "circular"):
        lay = compute_layout(g, name, seed=1)
        assert lay.positions.shape == (g.num_nodes, 2)
        assert np.all(np.isfinite(lay.positions)) and in_viewport(lay.positions)
        assert np.array_equal(lay.positions, compute_layout(g, name, seed=1).positions)


def test_unknown_layout():
    with pytest.raises(ValueError):
        compute_layout(cycle_graph(4), "hive")
