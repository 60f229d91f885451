import json

import numpy as np
import pytest

from graphabstract import cli
from graphabstract.dataset import MANIFEST_NAME
from graphabstract.render import decode_png


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def topo_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("topo")
    assert cli.main(["generate", "--task", "topology", "--seed", "0", "--out", str(out),
                     "--layouts", "none"]) == 0
    return out


def test_generate_topology_five_manifests(topo_out):
    manifests = sorted(p.parent.name for p in topo_out.rglob(MANIFEST_NAME))
    assert manifests == sorted(["train", "val", "test_id", "test_near_ood", "test_far_ood"])


def test_verify_pristine_and_tampered(topo_out, capsys, tmp_path):
    code, out, _ = run(["verify", "--out", str(topo_out), "--split", "val"], capsys)
    assert code == 0 and "ok" in out
    gfile = sorted((topo_out / "topology" / "val" / "graphs").iterdir())[0]
    original = gfile.read_text()
    data = json.loads(original)
    data["metadata"]["family"] = "not-a-family"
    gfile.write_text(json.dumps(data, sort_keys=True) + "\n")
    try:
        code, out, _ = run(["verify", "--out", str(topo_out), "--split", "val"], capsys)
        assert code == 1 and "FAILED" in out
    finally:
        gfile.write_text(original)


def test_verify_missing_manifest_is_usage_error(tmp_path, capsys):
    code, _, err = run(["verify", "--out", str(tmp_path / "nothing")], capsys)
    assert code == 2 and "no manifests" in err


def test_stats_all_splits(topo_out, capsys):
    code, out, _ = run(["stats", "--out", str(topo_out)], capsys)
    assert code == 0
    for split in ("train", "val", "test_id", "test_near_ood", "test_far_ood"):
        assert (topo_out / "topology" / split / "hist_bridges.svg").is_file()
    assert (topo_out / "topology" / "shift.json").is_file()


def test_symmetry_without_corpus_warns(tmp_path, capsys):
    code, _, err = run(["generate", "--task", "symmetry", "--split", "val", "--out",
                        str(tmp_path), "--layouts", "none"], capsys)
    assert code == 0 and "synthetic" in err


def test_generate_repeatable(tmp_path, capsys):
    args = ["generate", "--task", "bridge", "--split", "test_id", "--layouts", "spectral",
            "--resolution", "64"]
    assert run(args + ["--out", str(tmp_path / "a")], capsys)[0] == 0
    assert run(args + ["--out", str(tmp_path / "b"), "--workers", "2"], capsys)[0] == 0
    for p in (tmp_path / "a").rglob("*"):
        if p.is_file():
            assert p.read_bytes() == (tmp_path / "b" / p.relative_to(tmp_path / "a")).read_bytes()


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    args = cli.build_parser().parse_args(["verify"])
    assert cli.config_from_args(args).out == tmp_path / "env"
    args = cli.build_parser().parse_args(["verify", "--out", str(tmp_path / "flag")])
    assert cli.config_from_args(args).out == tmp_path / "flag"
    monkeypatch.delenv(cli.OUT_ENV)
    assert cli.config_from_args(cli.build_parser().parse_args(["verify"])).out.name == cli.DEFAULT_OUT


@pytest.mark.parametrize("argv", [
    ["generate", "--seed", "-1"],
    ["generate", "--seed", str(2**32)],
    ["generate", "--resolution", "8"],
    ["generate", "--workers", "0"],
    ["generate", "--corpus", "/no/such/file"],
])
def test_bad_config_exit_2(argv, capsys, tmp_path):
    assert run(argv + ["--out", str(tmp_path)], capsys)[0] == 2


def test_unknown_task_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["generate", "--task", "colour"])
    assert exc.value.code == 2


def test_render_c6(tmp_path, capsys):
    g = tmp_path / "c6.json"
    g.write_text(json.dumps({"num_nodes": 6, "edges": [[i, (i + 1) % 6] for i in range(5)] + [[0, 5]]}))
    out = tmp_path / "c6.png"
    code, _, _ = run(["render", str(g), "--layout", "circular", "-o", str(out)], capsys)
    assert code == 0 and decode_png(out.read_bytes()).shape == (224, 224, 3)
    small = tmp_path / "c6_64.png"
    assert run(["render", str(g), "--layout", "circular", "-o", str(small), "--resolution", "64"],
               capsys)[0] == 0
    assert decode_png(small.read_bytes()).shape == (64, 64, 3)


def test_render_bad_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, _, err = run(["render", str(bad), "-o", str(tmp_path / "x.png")], capsys)
    assert code == 1 and "bad.json" in err
