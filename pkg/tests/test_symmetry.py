import numpy as np
import pytest

from conftest import random_graph
from graphabstract.automorphism import find_nontrivial_automorphism, verify_automorphism
from graphabstract.graph import Graph, complete_graph, cycle_graph, is_connected, path_graph
from graphabstract.symmetry import (
    CayleySpec,
    EmptySourceError,
    InvalidGeneratorError,
    MalformedLineError,
    ProductTooLargeError,
    assemble_symmetry_pool,
    bfs_sample,
    bipartite_double_cover,
    cartesian_product,
    gen_cayley_cyclic,
    gen_perturbed_asymmetric,
    induced_subgraph,
    is_bipartite,
    k_fold_cyclic_cover,
    layer_rotation,
    layer_swap,
    layered_sample,
    random_walk_sample,
    read_edge_list,
    rotation_order_holds,
    sample_base_graphs,
    sample_cayley_spec,
)


def same_graph_up_to_iso(a: Graph, b: Graph) -> bool:
    # small cases only: sorted degree sequence plus cycle/path shape
    return (a.num_nodes == b.num_nodes and a.num_edges == b.num_edges
            and sorted(a.degrees.tolist()) == sorted(b.degrees.tolist()))


def test_cayley_examples():
    assert gen_cayley_cyclic(CayleySpec(6, (1,))) == cycle_graph(6)
    assert gen_cayley_cyclic(CayleySpec(5, (1, 2))) == complete_graph(5)
    with pytest.raises(InvalidGeneratorError):
        CayleySpec(8, (2,))


def test_cayley_translation_is_automorphism(rng):
    for n in range(5, 60, 3):
        g = gen_cayley_cyclic(sample_cayley_spec(n, rng))
        shift = tuple((i + 1) % n for i in range(n))
        assert verify_automorphism(g, shift)
        assert len(set(g.degrees.tolist())) == 1


def test_double_cover_examples():
    c6 = bipartite_double_cover(cycle_graph(3))
    assert same_graph_up_to_iso(c6, cycle_graph(6)) and is_connected(c6)
    k2 = bipartite_double_cover(path_graph(2))
    assert k2.num_edges == 2 and not is_connected(k2)


def test_double_cover_sizes_and_swap(rng):
    for _ in range(50):
        base = random_graph(12, 0.3, rng)
        cover = bipartite_double_cover(base)
        assert cover.num_nodes == 24 and cover.num_edges == 2 * base.num_edges
        assert verify_automorphism(cover, layer_swap(12))


def test_cyclic_cover_examples():
    assert same_graph_up_to_iso(k_fold_cyclic_cover(path_graph(2), 3), cycle_graph(6))
    assert is_connected(k_fold_cyclic_cover(path_graph(2), 3))
    assert k_fold_cyclic_cover(cycle_graph(3), 2) == bipartite_double_cover(cycle_graph(3))
    with pytest.raises(ValueError):
        k_fold_cyclic_cover(cycle_graph(3), 6)


def test_cyclic_cover_rotation(rng):
    for k in range(2, 6):
        base = random_graph(8, 0.4, rng)
        cover = k_fold_cyclic_cover(base, k)
        tau = layer_rotation(8, k)
        assert verify_automorphism(cover, tau)
        assert rotation_order_holds(tau, k)


def test_cartesian_examples():
    assert cartesian_product(path_graph(2), path_graph(2)).num_edges == 4
    assert same_graph_up_to_iso(cartesian_product(path_graph(2), path_graph(2)), cycle_graph(4))
    prism = cartesian_product(cycle_graph(3), complete_graph(2))
    assert (prism.num_nodes, prism.num_edges) == (6, 9)
    with pytest.raises(ProductTooLargeError):
        cartesian_product(cycle_graph(21), cycle_graph(20))


def test_cartesian_count_formulas(rng):
    for _ in range(100):
        g1 = random_graph(int(rng.integers(1, 12)), 0.4, rng)
        g2 = random_graph(int(rng.integers(1, 12)), 0.4, rng)
        prod = cartesian_product(g1, g2)
        assert prod.num_nodes == g1.num_nodes * g2.num_nodes
        assert prod.num_edges == g2.num_nodes * g1.num_edges + g1.num_nodes * g2.num_edges


def test_cartesian_edge_rule(rng):
    g1, g2 = random_graph(5, 0.5, rng), random_graph(4, 0.5, rng)
    prod = cartesian_product(g1, g2)
    for u1 in range(5):
        for v1 in range(4):
            for u2 in range(5):
                for v2 in range(4):
                    a, b = u1 * 4 + v1, u2 * 4 + v2
                    if a >= b:
                        continue
                    rule = (u1 == u2 and g2.has_edge(v1, v2)) or (v1 == v2 and g1.has_edge(u1, u2))
                    assert prod.has_edge(a, b) == rule


def test_is_bipartite():
    assert is_bipartite(cycle_graph(6)) and not is_bipartite(cycle_graph(5))


def test_perturbed_is_asymmetric_and_keeps_degrees():
    rng = np.random.default_rng(3)
    done = 0
    for n in (20, 26, 31):
        start = gen_cayley_cyclic(CayleySpec(n, (1, 3)))
        try:
            g = gen_perturbed_asymmetric(start, rng)
        except RuntimeError:
            continue
        done += 1
        assert not find_nontrivial_automorphism(g).symmetric
        assert sorted(g.degrees.tolist()) == sorted(start.degrees.tolist())
        assert is_connected(g)
    assert done > 0


def test_read_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# comment\n10 20\n20 30\n\n30 10\n")
    g = read_edge_list(p)
    assert g.num_nodes == 3 and g.num_edges == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n3\n")
    with pytest.raises(MalformedLineError) as exc:
        read_edge_list(bad)
    assert exc.value.lineno == 2
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(EmptySourceError):
        read_edge_list(empty)


@pytest.mark.parametrize("sampler", [bfs_sample, random_walk_sample, layered_sample])
def test_samplers_return_connected_target_size(sampler, rng):
    big = random_graph(600, 0.01, rng)
    from graphabstract.graph import ensure_connected
    big = ensure_connected(big, rng)
    got = 0
    for _ in range(20):
        nodes = sampler(big, 10, rng)
        if nodes is None:
            continue
        got += 1
        assert len(nodes) == 10
        assert is_connected(induced_subgraph(big, nodes))
    assert got > 0


def test_corpus_from_edge_list_and_fallback(tmp_path, rng):
    big = random_graph(300, 0.03, rng)
    p = tmp_path / "big.txt"
    p.write_text("\n".join(f"{u} {v}" for u, v in big.edges))
    corpus = sample_base_graphs([p], rng, sizes=range(5, 12), per_size=4)
    assert corpus.sizes() == list(range(5, 12))
    for size, bucket in corpus.buckets.items():
        for g, tag in bucket:
            assert g.num_nodes == size and is_connected(g) and tag.startswith("big.txt")
    synthetic = sample_base_graphs(None, rng, sizes=range(5, 8), per_size=3)
    assert len(synthetic) == 9
    assert all(tag == "synthetic" for b in synthetic.buckets.values() for _, tag in b)


def test_pool_balanced_verified_and_in_range():
    rng = np.random.default_rng(0)
    corpus = sample_base_graphs(None, rng)
    pool = assemble_symmetry_pool(40, (30, 60), corpus, rng)
    labels = [lab for _, lab, _ in pool]
    assert labels.count(1) == labels.count(0) == 20
    for g, lab, meta in pool:
        assert 30 <= g.num_nodes <= 60 and is_connected(g)
        assert find_nontrivial_automorphism(g).symmetric == bool(lab)
        if lab:
            assert verify_automorphism(g, meta["witness"])
        if "construction_witness" in meta:
            assert verify_automorphism(g, meta["construction_witness"])
