import json
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from graphabstract import dataset as ds
from graphabstract.automorphism import verify_automorphism
from graphabstract.dataset import (
    SPLITS,
    TASKS,
    CollisionError,
    GenerationError,
    SplitSpec,
    build_split,
    check_collisions,
    default_spec,
    default_split_table,
    generate_sample,
    load_manifest,
    sample_id,
    sample_seed,
    verify_dataset,
)
from graphabstract.graph import is_connected

EXPECTED_SPLITS = {
    "topology": [(3000, (20, 50)), (300, (20, 50)), (300, (20, 50)), (300, (40, 100)), (300, (60, 150))],
    "symmetry": [(2000, (30, 60)), (200, (30, 60)), (600, (30, 60)), (600, (50, 100)), (600, (70, 150))],
    "spectral": [(3000, (20, 50)), (300, (20, 50)), (300, (20, 50)), (300, (40, 100)), (300, (60, 150))],
    "bridge": [(2500, (20, 50)), (250, (20, 50)), (250, (20, 50)), (250, (40, 100)), (250, (60, 150))],
}


def small(task, split="train", count=12, seed=0):
    return SplitSpec(task, split, count, default_spec(task, split).node_range, seed)


def test_default_table_matches_reference_counts():
    table = default_split_table()
    assert len(table) == 20
    for spec in table:
        count, rng_ = EXPECTED_SPLITS[spec.task][SPLITS.index(spec.split)]
        assert (spec.count, spec.node_range, spec.seed) == (count, rng_, 0)


@pytest.mark.parametrize("kwargs", [
    {"task": "colour"}, {"split": "dev"}, {"node_range": (4, 10)}, {"node_range": (10, 301)},
    {"node_range": (30, 20)}, {"seed": -1}, {"seed": 2**32}, {"count": -1},
])
def test_split_spec_validation(kwargs):
    base = {"task": "topology", "split": "train", "count": 1, "node_range": (20, 50), "seed": 0}
    base.update(kwargs)
    with pytest.raises(ValueError):
        SplitSpec(**base)


def test_sub_seeds_disjoint_across_splits():
    seeds = [sample_seed(0, s.task, s.split, i) for s in default_split_table() for i in range(s.count)]
    assert len(seeds) == len(set(seeds))


@pytest.mark.parametrize("task", TASKS)
def test_samples_valid_and_isolated(task):
    spec = small(task, "test_near_ood")
    for i in range(6):
        s = generate_sample(spec, i)
        assert is_connected(s.graph)
        lo, hi = spec.node_range
        assert lo <= s.graph.num_nodes <= hi
        assert s.to_json() == generate_sample(spec, i).to_json()


def test_topology_class_balance():
    spec = small("topology", count=14)
    labels = [generate_sample(spec, i).label for i in range(14)]
    assert Counter(labels) == {0: 3, 1: 3, 2: 2, 3: 2, 4: 2, 5: 2}


def test_bridge_uses_five_families_with_single_link_bottlenecks():
    spec = small("bridge", count=10)
    fams = [generate_sample(spec, i).metadata for i in range(10)]
    assert [m["family"] for m in fams[:5]] == ["geometric", "community", "hierarchical",
                                              "bottleneck", "multicore"]
    for m in fams:
        if m["family"] == "bottleneck":
            assert set(m["params"]["widths"]) == {1}


def test_symmetry_witnesses_survive_relabeling():
    spec = small("symmetry", count=8)
    for i in range(8):
        s = generate_sample(spec, i)
        assert s.label == (i % 2 == 0)
        for key in ("witness", "construction_witness"):
            if key in s.metadata:
                assert verify_automorphism(s.graph, s.metadata[key])


def test_spectral_label_matches_graph():
    spec = small("spectral")
    for i in range(4):
        s = generate_sample(spec, i)
        lam = np.linalg.eigvalsh(ds.normalized_laplacian(s.graph))[1]
        assert abs(lam - s.label) < 1e-9 and 0 < s.label <= 2


def test_build_writes_manifest_and_files(tmp_path):
    spec = small("topology", count=7)
    m = build_split(spec, tmp_path, layouts=("kamada_kawai", "circular"), resolution=64)
    lines = m.path.read_text().splitlines()
    header = json.loads(lines[0])
    assert header["kind"] == "header" and header["spec"]["count"] == 7 and header["seed"] == 0
    assert len(lines) == 8
    ids = [json.loads(line)["id"] for line in lines[1:]]
    assert ids == [sample_id(spec, i) for i in range(7)]
    for r in m.records:
        gfile = m.root / r["graph"]
        text = gfile.read_text()
        assert text.endswith("\n") and list(json.loads(text)) == sorted(json.loads(text))
        assert set(r["images"]) == {"kamada_kawai", "circular"}
        for rel in r["images"].values():
            assert (m.root / rel).is_file() and rel.endswith(".png")
    assert not list(m.root.rglob(".tmp-*"))


def test_regenerating_one_sample_is_byte_identical(tmp_path):
    spec = small("bridge", count=20)
    m = build_split(spec, tmp_path, layouts=())
    again = generate_sample(spec, 17).to_json().encode()
    assert (m.root / m.records[17]["graph"]).read_bytes() == again


def test_workers_do_not_change_output(tmp_path):
    spec = small("symmetry", count=10)
    a = build_split(spec, tmp_path / "a", layouts=("spectral",), resolution=64, workers=1)
    b = build_split(spec, tmp_path / "b", layouts=("spectral",), resolution=64, workers=2)
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    assert a.dumps() == b.dumps()


@pytest.mark.parametrize("task", TASKS)
def test_verify_pristine(tmp_path, task):
    m = build_split(small(task, count=8), tmp_path, layouts=("circular",), resolution=64)
    report = verify_dataset(m.path)
    assert report.ok and report.checked == 8


def _edit_graph(m, index, fn):
    path = m.root / m.records[index]["graph"]
    data = json.loads(path.read_text())
    fn(data)
    path.write_text(json.dumps(data, sort_keys=True) + "\n")


def _label_moving_edge(g):
    """An edge whose removal keeps g connected but changes its bridge count."""
    from graphabstract.graph import Graph, find_bridges
    base = find_bridges(g)
    for e in g.edges:
        if e in base.bridges:
            continue
        h = Graph(g.num_nodes, tuple(x for x in g.edges if x != e))
        if find_bridges(h).count != base.count:
            return e
    return None


@pytest.mark.parametrize("task", ["bridge", "spectral"])
def test_verify_flags_deleted_edge(tmp_path, task):
    m = build_split(small(task, count=8), tmp_path, layouts=())
    for index, r in enumerate(m.records):
        victim = _label_moving_edge(ds.read_graph_file(m.root / r["graph"]).graph)
        if victim is not None:
            break
    _edit_graph(m, index, lambda d: d["edges"].remove(list(victim)))
    report = verify_dataset(m.path)
    flagged = [(sid, why) for sid, why in report.failures]
    assert {sid for sid, _ in flagged} == {m.records[index]["id"]}
    assert any(("bridge" in why or "lambda2" in why) for _, why in flagged)


def test_verify_flags_any_hand_edit(tmp_path):
    m = build_split(small("symmetry", count=4), tmp_path, layouts=())
    _edit_graph(m, 0, lambda d: d["metadata"].update(note="edited"))
    report = verify_dataset(m.path)
    assert [sid for sid, _ in report.failures] == [m.records[0]["id"]]


def test_verify_flags_out_of_range_nodes(tmp_path):
    m = build_split(small("bridge", count=4), tmp_path, layouts=())

    def grow(d):
        n = d["num_nodes"]
        extra = 51 - n
        d["edges"] += [[n + i - 1 if i else 0, n + i] for i in range(extra)]
        d["num_nodes"] = n + extra

    _edit_graph(m, 2, grow)
    report = verify_dataset(m.path)
    reasons = " ".join(r for sid, r in report.failures if sid == m.records[2]["id"])
    assert "outside" in reasons


def test_verify_flags_missing_image(tmp_path):
    m = build_split(small("topology", count=3), tmp_path, layouts=("circular",), resolution=64)
    (m.root / m.records[0]["images"]["circular"]).unlink()
    assert not verify_dataset(m.path).ok


def test_manifest_errors(tmp_path):
    bad = tmp_path / "manifest.jsonl"
    bad.write_text("not json\n")
    with pytest.raises(ds.ManifestError):
        load_manifest(bad)
    with pytest.raises(ds.ManifestError):
        load_manifest(tmp_path / "missing.jsonl")


def test_collision_check(tmp_path):
    a = build_split(small("bridge", "train", 3), tmp_path, layouts=())
    b = build_split(small("bridge", "val", 3), tmp_path, layouts=())
    check_collisions([a, b])
    dup = ds.Manifest(b.path, b.header, b.records, {"x": next(iter(a.fingerprints.values()))})
    with pytest.raises(CollisionError):
        check_collisions([a, dup])


def test_generation_failure_names_index(monkeypatch):
    def boom(*args, **kwargs):
        raise ds.symmetry.PoolExhaustedError("nothing fits")

    monkeypatch.setattr(ds.symmetry, "generate_symmetry_sample", boom)
    with pytest.raises(GenerationError) as exc:
        generate_sample(small("symmetry"), 5)
    assert exc.value.index == 5 and "symmetry/train" in str(exc.value)


def test_lambda2_manifest_precision(tmp_path):
    m = build_split(small("spectral", count=3), tmp_path, layouts=())
    for r in m.records:
        full = ds.read_graph_file(m.root / r["graph"]).label
        assert r["label"] == float(f"{full:.10g}")
        assert len(repr(r["label"]).replace("0.", "").lstrip("0")) <= 11
