"""Per-split distribution statistics: bridge counts and spectral gaps by family.

Reports are written beside each manifest as a text table, a JSON document
and SVG histograms. ``shift_summary`` lines up family means across the
splits of one task to show how distributions move with graph size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy.stats import binomtest  # noqa: E402

from .dataset import SPLITS, load_manifest, read_graph_file  # noqa: E402
from .graph import find_bridges  # noqa: E402

LAMBDA2_BINS = np.linspace(0.0, 2.0, 21)
# families whose bridges are mostly pendant edges, so their count grows with size
TREE_LIKE_FAMILIES = ("multicore",)
SCALE_ORDER = ("test_id", "test_near_ood", "test_far_ood")


@dataclass
class FamilyStats:
    family: str
    count: int
    bridges: list[int]
    lambda2: list[float] | None = None

    @property
    def bridge_hist(self) -> dict[int, int]:
        values, counts = np.unique(self.bridges, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    @property
    def bridge_mean(self) -> float:
        return float(np.mean(self.bridges)) if self.bridges else float("nan")

    @property
    def lambda2_hist(self) -> list[int] | None:
        if self.lambda2 is None:
            return None
        return np.histogram(self.lambda2, bins=LAMBDA2_BINS)[0].tolist()

    def to_dict(self) -> dict:
        d = {
            "count": self.count,
            "bridge_mean": self.bridge_mean,
            "bridge_hist": {str(k): v for k, v in self.bridge_hist.items()},
        }
        if self.lambda2 is not None:
            d["lambda2_mean"] = float(np.mean(self.lambda2))
            d["lambda2_min"] = float(np.min(self.lambda2))
            d["lambda2_max"] = float(np.max(self.lambda2))
            d["lambda2_hist"] = self.lambda2_hist
            d["lambda2_bins"] = LAMBDA2_BINS.tolist()
        return d


@dataclass
class StatsReport:
    manifest: Path
    task: str
    split: str
    count: int
    families: dict[str, FamilyStats]
    files: list[Path] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "split": self.split,
            "count": self.count,
            "families": {k: v.to_dict() for k, v in sorted(self.families.items())},
        }

    def table(self) -> str:
        lines = [f"# {self.task}/{self.split}: {self.count} graphs",
                 f"{'family':22s} {'n':>5s} {'bridges':>8s} {'lambda2':>8s}  bridge histogram"]
        for name, fs in sorted(self.families.items()):
            lam = f"{np.mean(fs.lambda2):8.4f}" if fs.lambda2 is not None else f"{'-':>8s}"
            hist = " ".join(f"{k}:{v}" for k, v in fs.bridge_hist.items())
            lines.append(f"{name:22s} {fs.count:5d} {fs.bridge_mean:8.3f} {lam}  {hist}")
        return "\n".join(lines) + "\n"


def collect_stats(manifest_path) -> StatsReport:
    """Read every graph of a split and group bridge counts and gaps by family."""
    m = load_manifest(manifest_path)
    spec = m.spec
    groups: dict[str, FamilyStats] = {}
    for r in m.records:
        sample = read_graph_file(m.root / r["graph"])
        family = str(sample.metadata.get("family", "unknown"))
        fs = groups.setdefault(family, FamilyStats(family, 0, [],
                                                   [] if spec.task == "spectral" else None))
        fs.count += 1
        if spec.task == "bridge":
            fs.bridges.append(int(sample.label))
        else:
            fs.bridges.append(find_bridges(sample.graph).count)
        if fs.lambda2 is not None:
            fs.lambda2.append(float(sample.label))
    return StatsReport(m.path, spec.task, spec.split, len(m.records), groups)


def _save_svg(fig, path: Path) -> None:
    # fixed salt and no timestamp keep the SVG bytes reproducible
    with plt.rc_context({"svg.hashsalt": "graphabstract"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_bridges(report: StatsReport, path: Path) -> None:
    fams = sorted(report.families)
    fig, axes = plt.subplots(1, len(fams), figsize=(3 * len(fams), 2.6), squeeze=False)
    for ax, name in zip(axes[0], fams):
        hist = report.families[name].bridge_hist
        ax.bar(list(hist), list(hist.values()), width=0.8, color="steelblue")
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("bridges")
    axes[0][0].set_ylabel("graphs")
    fig.suptitle(f"{report.task}/{report.split}: bridge counts", fontsize=10)
    fig.tight_layout()
    _save_svg(fig, path)


def _plot_lambda2(report: StatsReport, path: Path) -> None:
    fams = sorted(report.families)
    fig, axes = plt.subplots(1, len(fams), figsize=(3 * len(fams), 2.6), squeeze=False)
    width = LAMBDA2_BINS[1] - LAMBDA2_BINS[0]
    for ax, name in zip(axes[0], fams):
        ax.bar(LAMBDA2_BINS[:-1], report.families[name].lambda2_hist, width=width,
               align="edge", color="darkorange")
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("lambda2")
        ax.set_xlim(0, 2)
    axes[0][0].set_ylabel("graphs")
    fig.suptitle(f"{report.task}/{report.split}: spectral gap", fontsize=10)
    fig.tight_layout()
    _save_svg(fig, path)


def emit_stats(manifest_path, plots: bool = True) -> StatsReport:
    """Compute statistics for one split and write them beside its manifest."""
    report = collect_stats(manifest_path)
    root = report.manifest.parent
    txt, js = root / "stats.txt", root / "stats.json"
    txt.write_text(report.table(), encoding="utf-8")
    js.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    report.files += [txt, js]
    if plots and report.families:
        p = root / "hist_bridges.svg"
        _plot_bridges(report, p)
        report.files.append(p)
        if report.task == "spectral":
            p = root / "hist_lambda2.svg"
            _plot_lambda2(report, p)
            report.files.append(p)
    return report


def shift_summary(reports) -> dict[str, dict[str, dict[str, float]]]:
    """``{family: {split: {"bridge_mean", "lambda2_mean"?}}}`` across splits."""
    out: dict[str, dict[str, dict[str, float]]] = {}
    order = {s: i for i, s in enumerate(SPLITS)}
    for rep in sorted(reports, key=lambda r: order[r.split]):
        for name, fs in rep.families.items():
            row = {"bridge_mean": fs.bridge_mean}
            if fs.lambda2 is not None:
                row["lambda2_mean"] = float(np.mean(fs.lambda2))
            out.setdefault(name, {})[rep.split] = row
    return out


def write_shift_report(reports, path) -> dict:
    summary = shift_summary(reports)
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


def monotone_in_scale(summary: dict, family: str, key: str = "bridge_mean") -> bool:
    """Family mean strictly increases from ID through Near-OOD to Far-OOD."""
    row = summary.get(family, {})
    if not all(s in row for s in SCALE_ORDER):
        return False
    vals = [row[s][key] for s in SCALE_ORDER]
    return all(a < b for a, b in zip(vals, vals[1:]))


def sign_test_pvalue(successes: int, trials: int) -> float:
    """One-sided binomial sign test against a fair coin."""
    return float(binomtest(successes, trials, 0.5, alternative="greater").pvalue)
