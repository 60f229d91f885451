"""Deterministic assembly of the four tasks into labeled, rendered splits.

Every sample is generated from its own sub-seed, derived from
``(seed, task, split, index)``, so any single sample can be regenerated in
isolation and the worker count never changes the output.

On-disk layout for one split::

    <out>/<task>/<split>/manifest.jsonl
    <out>/<task>/<split>/graphs/<sample_id>.json
    <out>/<task>/<split>/images/<sample_id>_<layout>.png
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, spectral, symmetry, topology
from .automorphism import UndecidedSymmetryError, find_nontrivial_automorphism, verify_automorphism
from .graph import Graph, GraphError, find_bridges, is_connected, normalized_laplacian, spectral_gap
from .layout import DEFAULT_LAYOUTS, compute_layout
from .render import RenderSpec, encode_png, render_image

log = logging.getLogger(__name__)

TASKS = ("topology", "symmetry", "spectral", "bridge")
SPLITS = ("train", "val", "test_id", "test_near_ood", "test_far_ood")

STANDARD_RANGES = ((20, 50), (20, 50), (20, 50), (40, 100), (60, 150))
SYMMETRY_RANGES = ((30, 60), (30, 60), (30, 60), (50, 100), (70, 150))
SPLIT_COUNTS = {
    "topology": (3000, 300, 300, 300, 300),
    "symmetry": (2000, 200, 600, 600, 600),
    "spectral": (3000, 300, 300, 300, 300),
    "bridge": (2500, 250, 250, 250, 250),
}

LAMBDA2_TOL = 1e-6
LAMBDA2_DIGITS = 10
MANIFEST_NAME = "manifest.jsonl"


class DatasetError(RuntimeError):
    pass


class GenerationError(DatasetError):
    """A sample could not be generated; names the split and index."""

    def __init__(self, spec: "SplitSpec", index: int, cause: Exception):
        super().__init__(f"{spec.task}/{spec.split} seed={spec.seed} index={index}: {cause}")
        self.spec = spec
        self.index = index


class CollisionError(DatasetError):
    pass


class ManifestError(DatasetError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    task: str
    split: str
    count: int
    node_range: tuple[int, int]
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        lo, hi = (int(x) for x in self.node_range)
        if not 5 <= lo <= hi <= 300:
            raise ValueError(f"node range {self.node_range} outside 5 <= lo <= hi <= 300")
        if self.count < 0:
            raise ValueError("negative sample count")
        if not 0 <= self.seed < 2**32:
            raise ValueError(f"seed {self.seed} outside [0, 2^32)")
        object.__setattr__(self, "node_range", (lo, hi))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["node_range"] = list(self.node_range)
        return d


def default_split_table(seed: int = 0) -> list[SplitSpec]:
    table = []
    for task in TASKS:
        ranges = SYMMETRY_RANGES if task == "symmetry" else STANDARD_RANGES
        for split, count, rng_ in zip(SPLITS, SPLIT_COUNTS[task], ranges):
            table.append(SplitSpec(task, split, count, rng_, seed))
    return table


def default_spec(task: str, split: str, seed: int = 0) -> SplitSpec:
    for spec in default_split_table(seed):
        if spec.task == task and spec.split == split:
            return spec
    raise ValueError(f"no default split {task}/{split}")


def sample_seed(seed: int, task: str, split: str, index: int) -> int:
    digest = hashlib.sha256(f"{seed}:{task}:{split}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def sample_id(spec: SplitSpec, index: int) -> str:
    return f"{spec.task}-{spec.split}-{index:05d}"


@dataclass
class LabeledSample:
    graph: Graph
    label: float | int
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        body = {
            "num_nodes": self.graph.num_nodes,
            "edges": [list(e) for e in self.graph.edges],
            "label": self.label,
            "metadata": self.metadata,
        }
        return json.dumps(body, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (np.ndarray, tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def read_graph_file(path) -> LabeledSample:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        g = Graph(int(data["num_nodes"]), tuple(tuple(e) for e in data["edges"]))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    return LabeledSample(g, data.get("label"), data.get("metadata", {}))


def _conjugate(phi, perm) -> list[int]:
    """``phi`` expressed on relabeled nodes: phi'[perm[x]] = perm[phi[x]]."""
    out = [0] * len(phi)
    for x, y in enumerate(phi):
        out[perm[x]] = perm[y]
    return out


def _relabel(g: Graph, meta: dict, rng) -> Graph:
    # generators emit block-structured node orders; shuffle so ids leak nothing
    perm = rng.permutation(g.num_nodes).tolist()
    for key in ("witness", "construction_witness"):
        if key in meta:
            meta[key] = _conjugate(meta[key], perm)
    return g.relabel(perm)


# --- per-task sample generation --------------------------------------------


def _topology_sample(spec, index, rng, corpus):
    label = index % len(topology.FAMILIES)
    family = topology.FAMILIES[label]
    n = int(rng.integers(spec.node_range[0], spec.node_range[1] + 1))
    g, params = topology.generate(family, n, rng)
    return g, label, {"family": family, "params": params, "repairs": params["repairs"]}


def _bridge_sample(spec, index, rng, corpus):
    family = topology.BRIDGE_FAMILIES[index % len(topology.BRIDGE_FAMILIES)]
    n = int(rng.integers(spec.node_range[0], spec.node_range[1] + 1))
    overrides = {"width": 1} if family == "bottleneck" else {}
    g, params = topology.generate(family, n, rng, **overrides)
    return g, find_bridges(g).count, {"family": family, "params": params,
                                      "repairs": params["repairs"]}


def _spectral_sample(spec, index, rng, corpus):
    family = spectral.SPECTRAL_FAMILIES[index % len(spectral.SPECTRAL_FAMILIES)]
    n = int(rng.integers(spec.node_range[0], spec.node_range[1] + 1))
    mu = spectral.sample_mu(rng)
    g, params = spectral.generate(family, n, mu, rng)
    meta = {"family": family, "mu": mu, "stratum": spectral.mu_stratum(mu), "params": params,
            "repairs": params["repairs"]}
    return g, None, meta


def _symmetry_sample(spec, index, rng, corpus):
    want = index % 2 == 0
    g, meta = symmetry.generate_symmetry_sample(want, spec.node_range, corpus, rng)
    meta = dict(meta)
    meta["family"] = meta["method"]
    meta.setdefault("repairs", 0)
    return g, int(want), meta


_TASK_SAMPLERS = {
    "topology": _topology_sample,
    "bridge": _bridge_sample,
    "spectral": _spectral_sample,
    "symmetry": _symmetry_sample,
}


def generate_sample(spec: SplitSpec, index: int, corpus=None) -> LabeledSample:
    """Sample ``index`` of ``spec``; depends only on the arguments."""
    rng = np.random.default_rng(sample_seed(spec.seed, spec.task, spec.split, index))
    if spec.task == "symmetry" and corpus is None:
        corpus = build_corpus(spec.seed)
    try:
        g, label, meta = _TASK_SAMPLERS[spec.task](spec, index, rng, corpus)
        g = _relabel(g, meta, rng)
    except (symmetry.PoolExhaustedError, GraphError, UndecidedSymmetryError) as exc:
        raise GenerationError(spec, index, exc) from exc
    if spec.task == "spectral":
        # labels come from the final (relabeled) graph
        label = spectral_gap(g).lambda2
    meta["layout_seed"] = int(rng.integers(2**31))
    return LabeledSample(g, label, meta)


def build_corpus(seed: int, paths=None) -> symmetry.BaseGraphCorpus:
    """Base-graph corpus for the symmetry task; synthetic when ``paths`` is empty."""
    rng = np.random.default_rng(sample_seed(seed, "symmetry", "corpus", 0))
    if not paths:
        return symmetry.sample_base_graphs(None, rng)
    return symmetry.sample_base_graphs([Path(p) for p in paths], rng)


# --- writing ----------------------------------------------------------------


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def split_dir(out_dir, spec: SplitSpec) -> Path:
    return Path(out_dir) / spec.task / spec.split


def manifest_label(sample: LabeledSample, task: str):
    if task == "spectral":
        return float(f"{sample.label:.{LAMBDA2_DIGITS}g}")
    return sample.label


@dataclass
class Manifest:
    path: Path
    header: dict
    records: list[dict]
    # sample id -> structure hash; filled at build time, not serialized
    fingerprints: dict = field(default_factory=dict, repr=False)

    @property
    def root(self) -> Path:
        return self.path.parent

    @property
    def spec(self) -> SplitSpec:
        d = self.header["spec"]
        return SplitSpec(d["task"], d["split"], d["count"], tuple(d["node_range"]), d["seed"])

    def dumps(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True, default=_json_default) for r in self.records]
        return "\n".join(lines) + "\n"


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
        header = json.loads(lines[0])
        records = [json.loads(line) for line in lines[1:] if line.strip()]
    except (OSError, ValueError, IndexError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    if header.get("kind") != "header" or "spec" not in header:
        raise ManifestError(f"{path}: first line is not a manifest header")
    return Manifest(path, header, records)


# worker-process state, set once per process
_CORPUS = None


def _init_worker(corpus):
    global _CORPUS
    _CORPUS = corpus


def _produce(job) -> dict:
    spec, index, layouts, resolution, root = job
    sample = generate_sample(spec, index, _CORPUS)
    sid = sample_id(spec, index)
    root = Path(root)
    graph_rel = f"graphs/{sid}.json"
    graph_bytes = sample.to_json().encode("utf-8")
    atomic_write(root / graph_rel, graph_bytes)
    images = {}
    render_spec = RenderSpec(resolution=resolution)
    for name in layouts:
        lay = compute_layout(sample.graph, name, seed=sample.metadata["layout_seed"])
        rel = f"images/{sid}_{name}.png"
        atomic_write(root / rel, encode_png(render_image(sample.graph, lay, render_spec)))
        images[name] = rel
    fingerprint = hashlib.sha256(
        json.dumps([sample.graph.num_nodes, sample.graph.edges]).encode()
    ).hexdigest()
    return {
        "id": sid,
        "index": index,
        "graph": graph_rel,
        "sha256": hashlib.sha256(graph_bytes).hexdigest(),
        "images": images,
        "label": manifest_label(sample, spec.task),
        "num_nodes": sample.graph.num_nodes,
        "num_edges": sample.graph.num_edges,
        "metadata": sample.metadata,
        "_fingerprint": fingerprint,
    }


def build_split(spec: SplitSpec, out_dir, corpus=None, layouts=DEFAULT_LAYOUTS,
                resolution: int = 224, workers: int = 1) -> Manifest:
    """Generate, label, render and write every sample of ``spec``."""
    layouts = tuple(layouts)
    RenderSpec(resolution=resolution)
    if spec.task == "symmetry" and corpus is None:
        corpus = build_corpus(spec.seed)
    root = split_dir(out_dir, spec)
    root.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, i, layouts, resolution, str(root)) for i in range(spec.count)]
    if workers <= 1:
        _init_worker(corpus)
        records = [_produce(job) for job in jobs]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(corpus,)) as pool:
            records = list(pool.map(_produce, jobs, chunksize=8))
    records.sort(key=lambda r: r.pop("index"))

    seen: dict[str, str] = {}
    for r in records:
        fp = r["_fingerprint"]
        if fp in seen:
            raise CollisionError(f"{r['id']} duplicates {seen[fp]}")
        seen[fp] = r["id"]
    fingerprints = {r["id"]: r.pop("_fingerprint") for r in records}

    header = {
        "kind": "header",
        "toolkit_version": __version__,
        "seed": spec.seed,
        "spec": spec.to_dict(),
        "layouts": list(layouts),
        "resolution": resolution,
    }
    manifest = Manifest(root / MANIFEST_NAME, header, records, fingerprints)
    atomic_write(manifest.path, manifest.dumps().encode("utf-8"))
    return manifest


def check_collisions(manifests) -> None:
    """No graph may appear byte-identically in two splits of one task."""
    owner: dict[tuple[str, str], str] = {}
    for m in manifests:
        prints = m.fingerprints
        if not prints:
            for r in m.records:
                s = read_graph_file(m.root / r["graph"])
                prints[r["id"]] = hashlib.sha256(
                    json.dumps([s.graph.num_nodes, s.graph.edges]).encode()).hexdigest()
        task = m.header["spec"]["task"]
        for sid, fp in prints.items():
            key = (task, fp)
            if key in owner and owner[key] != sid:
                raise CollisionError(f"{sid} duplicates {owner[key]}")
            owner[key] = sid


# --- verification -------------------------------------------------------------


@dataclass
class VerificationReport:
    manifest: Path
    checked: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, sid: str, reason: str) -> None:
        self.failures.append((sid, reason))


def _lambda2_oracle(g: Graph) -> float:
    # independent of the Jacobi solver used to produce the labels
    return float(np.linalg.eigvalsh(normalized_laplacian(g))[1])


def _check_label(task: str, sample: LabeledSample, record: dict) -> str | None:
    g, label, meta = sample.graph, sample.label, sample.metadata
    if record.get("label") != manifest_label(sample, task):
        return "manifest label differs from graph file"
    if task == "topology":
        if not isinstance(label, int) or not 0 <= label < len(topology.FAMILIES):
            return f"class id {label!r} out of range"
        if meta.get("family") != topology.FAMILIES[label]:
            return f"family {meta.get('family')!r} inconsistent with class {label}"
    elif task == "bridge":
        count = find_bridges(g).count
        if count != label:
            return f"bridge count {count} != label {label}"
    elif task == "spectral":
        lam = _lambda2_oracle(g)
        if not abs(lam - float(label)) <= LAMBDA2_TOL:
            return f"lambda2 {lam:.12g} != label {label!r}"
    elif task == "symmetry":
        verdict = find_nontrivial_automorphism(g)
        if int(verdict.symmetric) != label:
            return f"symmetry verdict {verdict.symmetric} != label {label}"
        for key in ("witness", "construction_witness"):
            if key in meta and not verify_automorphism(g, meta[key]):
                return f"stored {key} is not an automorphism"
    return None


def _png_size(path: Path) -> tuple[int, int] | None:
    head = path.read_bytes()[:24]
    if head[:8] != b"\x89PNG\r\n\x1a\n":
        return None
    return int.from_bytes(head[16:20], "big"), int.from_bytes(head[20:24], "big")


def verify_dataset(manifest_path) -> VerificationReport:
    """Recompute every label and check ranges, connectivity and referenced files."""
    m = load_manifest(manifest_path)
    spec = m.spec
    report = VerificationReport(m.path)
    lo, hi = spec.node_range
    if len(m.records) != spec.count:
        report.fail("<manifest>", f"{len(m.records)} records, header says {spec.count}")
    expected_ids = [sample_id(spec, i) for i in range(len(m.records))]
    if [r.get("id") for r in m.records] != expected_ids:
        report.fail("<manifest>", "sample ids are not unique and dense")
    res = m.header.get("resolution")
    for r in m.records:
        sid = r.get("id", "<missing id>")
        report.checked += 1
        try:
            sample = read_graph_file(m.root / r["graph"])
            digest = hashlib.sha256((m.root / r["graph"]).read_bytes()).hexdigest()
        except (DatasetError, KeyError, OSError) as exc:
            report.fail(sid, f"unreadable graph: {exc}")
            continue
        if r.get("sha256") not in (None, digest):
            report.fail(sid, "graph file changed since the manifest was written")
        g = sample.graph
        if not lo <= g.num_nodes <= hi:
            report.fail(sid, f"{g.num_nodes} nodes outside [{lo}, {hi}]")
        if not is_connected(g):
            report.fail(sid, "graph is disconnected")
            continue
        try:
            problem = _check_label(spec.task, sample, r)
        except (GraphError, UndecidedSymmetryError, ValueError) as exc:
            problem = f"label check failed: {exc}"
        if problem:
            report.fail(sid, problem)
        for name in m.header.get("layouts", []):
            rel = r.get("images", {}).get(name)
            if rel is None or not (m.root / rel).is_file():
                report.fail(sid, f"missing {name} image")
            elif _png_size(m.root / rel) != (res, res):
                report.fail(sid, f"{name} image is not a {res}x{res} PNG")
    return report


def find_manifests(out_dir, tasks=None, splits=None) -> list[Path]:
    out = []
    for task in tasks or TASKS:
        for split in splits or SPLITS:
            p = Path(out_dir) / task / split / MANIFEST_NAME
            if p.is_file():
                out.append(p)
    return out
