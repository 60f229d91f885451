"""Command-line front end: generate, verify, stats and render.

Exit codes: 0 success, 1 build or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .dataset import (
    SPLITS,
    TASKS,
    DatasetError,
    build_corpus,
    build_split,
    check_collisions,
    default_split_table,
    find_manifests,
    read_graph_file,
    verify_dataset,
)
from .graph import GraphError
from .layout import DEFAULT_LAYOUTS, LAYOUTS, compute_layout
from .render import RenderError, RenderSpec, render_image, save_png
from .stats import emit_stats, write_shift_report

DEFAULT_OUT = "graphabstract_data"
OUT_ENV = "GRAPHABSTRACT_OUT"

log = logging.getLogger("graphabstract")


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    command: str
    tasks: tuple[str, ...] = TASKS
    splits: tuple[str, ...] = SPLITS
    seed: int = 0
    out: Path = Path(DEFAULT_OUT)
    layouts: tuple[str, ...] = DEFAULT_LAYOUTS
    resolution: int = 224
    corpus: list[Path] = field(default_factory=list)
    workers: int = 1

    def validate(self) -> None:
        if not 0 <= self.seed < 2**32:
            raise UsageError(f"--seed must be in [0, 2^32), got {self.seed}")
        try:
            RenderSpec(resolution=self.resolution)
        except RenderError as exc:
            raise UsageError(str(exc)) from None
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        for p in self.corpus:
            if not p.is_file():
                raise UsageError(f"corpus file not found: {p}")


def _csv(choices):
    def parse(text: str) -> tuple[str, ...]:
        if text.strip().lower() == "none":
            return ()
        items = tuple(t.strip() for t in text.split(",") if t.strip())
        bad = [t for t in items if t not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown value(s) {bad}; choose from {choices}")
        return items
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphabstract", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--task", type=_csv(TASKS), default=TASKS,
                        help="comma-separated tasks (default: all)")
    common.add_argument("--split", type=_csv(SPLITS), default=SPLITS,
                        help="comma-separated splits (default: all)")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("-v", "--verbose", action="store_true")

    gen = sub.add_parser("generate", parents=[common], help="build dataset splits")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--layouts", type=_csv(LAYOUTS), default=DEFAULT_LAYOUTS,
                     help="comma-separated layouts, or 'none' to skip images")
    gen.add_argument("--resolution", type=int, default=224)
    gen.add_argument("--corpus", type=Path, action="append", default=[],
                     help="edge-list file of base graphs for the symmetry task (repeatable)")
    gen.add_argument("--workers", type=int, default=1)

    sub.add_parser("verify", parents=[common], help="recompute and check every label")
    sub.add_parser("stats", parents=[common], help="write distribution statistics")

    ren = sub.add_parser("render", help="lay out and render a single graph file")
    ren.add_argument("graph_file", type=Path)
    ren.add_argument("--layout", choices=LAYOUTS, default="kamada_kawai")
    ren.add_argument("--output", "-o", type=Path, required=True)
    ren.add_argument("--resolution", type=int, default=224)
    ren.add_argument("--seed", type=int, default=0)
    ren.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args, environ=os.environ) -> CliConfig:
    out = args.out if getattr(args, "out", None) is not None else Path(
        environ.get(OUT_ENV) or DEFAULT_OUT)
    cfg = CliConfig(
        command=args.command,
        tasks=getattr(args, "task", TASKS),
        splits=getattr(args, "split", SPLITS),
        seed=getattr(args, "seed", 0),
        out=out,
        layouts=getattr(args, "layouts", DEFAULT_LAYOUTS),
        resolution=getattr(args, "resolution", 224),
        corpus=list(getattr(args, "corpus", [])),
        workers=getattr(args, "workers", 1),
    )
    cfg.validate()
    return cfg


def cmd_generate(cfg: CliConfig) -> int:
    specs = [s for s in default_split_table(cfg.seed)
             if s.task in cfg.tasks and s.split in cfg.splits]
    if not specs:
        print("nothing to generate", file=sys.stderr)
        return 2
    corpus = None
    if any(s.task == "symmetry" for s in specs):
        if not cfg.corpus:
            print("warning: no --corpus given; using synthetic base graphs for symmetry",
                  file=sys.stderr)
        corpus = build_corpus(cfg.seed, cfg.corpus)
    rows = []
    built: dict[str, list] = {}
    start = time.perf_counter()
    for spec in specs:
        t0 = time.perf_counter()
        try:
            m = build_split(spec, cfg.out, corpus=corpus if spec.task == "symmetry" else None,
                            layouts=cfg.layouts, resolution=cfg.resolution,
                            workers=cfg.workers)
        except DatasetError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        sizes = [r["num_nodes"] for r in m.records]
        rows.append((spec, len(m.records), min(sizes, default=0), max(sizes, default=0),
                     time.perf_counter() - t0))
        built.setdefault(spec.task, []).append(m)
        log.info("%s/%s: %d graphs in %.1fs", spec.task, spec.split, len(m.records), rows[-1][-1])
    try:
        for manifests in built.values():
            check_collisions(manifests)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{'task':10s} {'split':14s} {'count':>6s} {'range':>10s} {'nodes':>10s} {'secs':>7s}")
    for spec, count, lo, hi, secs in rows:
        rng_ = f"{spec.node_range[0]}-{spec.node_range[1]}"
        print(f"{spec.task:10s} {spec.split:14s} {count:6d} {rng_:>10s} {f'{lo}-{hi}':>10s} "
              f"{secs:7.1f}")
    print(f"total {sum(r[1] for r in rows)} graphs in {time.perf_counter() - start:.1f}s "
          f"-> {cfg.out}")
    return 0


def _manifests_or_usage(cfg: CliConfig) -> list[Path]:
    paths = find_manifests(cfg.out, cfg.tasks, cfg.splits)
    if not paths:
        raise UsageError(f"no manifests found under {cfg.out}")
    return paths


def cmd_verify(cfg: CliConfig) -> int:
    failures = 0
    for path in _manifests_or_usage(cfg):
        try:
            report = verify_dataset(path)
        except DatasetError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        status = "ok" if report.ok else f"{len(report.failures)} FAILED"
        print(f"{path.parent.relative_to(cfg.out)}: {report.checked} checked, {status}")
        for sid, reason in report.failures:
            print(f"  {sid}: {reason}")
        failures += len(report.failures)
    return 0 if failures == 0 else 1


def cmd_stats(cfg: CliConfig) -> int:
    by_task: dict[str, list] = {}
    try:
        for path in _manifests_or_usage(cfg):
            report = emit_stats(path)
            by_task.setdefault(report.task, []).append(report)
            print(report.table(), end="")
        for task, reports in by_task.items():
            summary = write_shift_report(reports, Path(cfg.out) / task / "shift.json")
            print(f"# {task}: mean bridge count by split")
            for family, row in sorted(summary.items()):
                cells = " ".join(f"{s}={v['bridge_mean']:.2f}" for s, v in row.items())
                print(f"  {family:22s} {cells}")
    except (OSError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_render(cfg: CliConfig, graph_file: Path, layout: str, out_path: Path,
               seed: int = 0) -> int:
    try:
        sample = read_graph_file(graph_file)
        lay = compute_layout(sample.graph, layout, seed=seed)
        img = render_image(sample.graph, lay, RenderSpec(resolution=cfg.resolution))
        out_path.parent.mkdir(parents=True, exist_ok=True)
        save_png(img, out_path)
    except (DatasetError, GraphError, RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out_path} ({cfg.resolution}x{cfg.resolution}, {layout})")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if cfg.command == "generate":
            return cmd_generate(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg)
        if cfg.command == "stats":
            return cmd_stats(cfg)
        return cmd_render(cfg, args.graph_file, args.layout, args.output, args.seed)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
