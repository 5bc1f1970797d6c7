"""Command-line interface.

One executable, one subcommand per pipeline stage or experiment. Reports go
to stdout (or ``--out``), diagnostics to stderr. Exit codes: 0 on success,
2 for anything wrong with the inputs (unreadable files, bad values, bad
arguments), 3 for violated internal assumptions or unexpected failures.

``--format csv`` switches every command from its JSON report to a tabular
view of the same data; ``--plot`` additionally renders an SVG chart where
one makes sense (sweeps, reliability diagrams, fit trajectories). Thread
counts change wall time only, never output bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import svgplot
from .countgrad import FIT_MODES, fit, grad_check
from .errors import AssumptionViolated, PBCountError, UnwritableDestination
from .labeling import LabelingConfig, cc_count
from .metrics import (
    DEFAULT_CALIBRATION_BINS,
    count_calibration,
    eval_cc,
    eval_counts,
    read_manifest,
    sweep_threshold,
    voxel_calibration,
)
from .pbdist import DEFAULT_BINS, count_volume, empirical_count_distribution
from .synth import GeneratorConfig, write_corpus
from .volume import load_volume


def _default_threads() -> int:
    raw = os.environ.get("PBCOUNT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as e:
        raise ValueError(f"PBCOUNT_THREADS must be an integer, got {raw!r}") from e


def _labeling(args) -> LabelingConfig:
    return LabelingConfig(tau=args.tau, connectivity=args.connectivity,
                          min_size=args.min_size)


def _parse_taus(raw: str) -> list[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"--taus expects comma-separated numbers, got {raw!r}") from e


def _parse_counts(raw: str) -> list[int]:
    """Counts for mc-entropy: a comma list, or a path to a file of integers."""
    path = Path(raw)
    if path.is_file():
        raw = path.read_text(encoding="utf-8").replace("\n", ",").replace(" ", ",")
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"counts must be integers, got {raw!r}") from e


def _csv_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _scalar_row(payload: dict) -> list[dict]:
    return [{k: v for k, v in payload.items() if not isinstance(v, (list, dict))}]


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (json payload, csv rows, plot fn or None)


def _cmd_count(args):
    vol = load_volume(args.volume)
    result = count_volume(vol, _labeling(args), args.bins)
    payload = result.to_dict(shape=vol.shape)
    rows = [{"count": k, "probability": float(p)}
            for k, p in enumerate(result.pmf.probs)]
    return payload, rows, None


def _cmd_cc_count(args):
    payload = {"count": cc_count(load_volume(args.volume), _labeling(args))}
    return payload, [payload], None


def _cmd_eval(args):
    records = read_manifest(args.manifest)
    evaluate = eval_counts if args.method == "pb" else eval_cc
    m = evaluate(records, _labeling(args), args.bins, threads=args.threads)
    payload = {"method": args.method, "tau": args.tau, **m.to_dict()}
    return payload, _scalar_row(payload), None


def _cmd_sweep(args):
    records = read_manifest(args.manifest)
    rows = sweep_threshold(records, _parse_taus(args.taus), _labeling(args),
                           args.bins, threads=args.threads)

    def plot():
        series = {}
        for method in ("pb", "cc"):
            sub = [r for r in rows if r["method"] == method]
            series[method] = ([r["tau"] for r in sub], [r["accuracy"] for r in sub])
        return svgplot.line_chart(series, "count accuracy across clustering thresholds",
                                  "threshold", "accuracy")

    return rows, rows, plot


def _cmd_calibrate(args):
    records = read_manifest(args.manifest)
    if args.level == "voxel":
        report = voxel_calibration(records, args.calibration_bins, threads=args.threads)
        title = "voxel reliability"
        payload = {"level": "voxel", **report.to_dict()}
    else:
        report = count_calibration(records, _labeling(args), args.bins,
                                   args.calibration_bins, method=args.method,
                                   threads=args.threads)
        title = f"count reliability ({args.method})"
        payload = {"level": "count", "method": args.method, **report.to_dict()}
    edges = report.bin_edges
    rows = [{
        "bin_lo": float(edges[i]),
        "bin_hi": float(edges[i + 1]),
        "confidence": float(report.bin_confidence[i]),
        "accuracy": float(report.bin_accuracy[i]),
        "count": int(report.bin_count[i]),
    } for i in range(len(report.bin_count))]
    return payload, rows, lambda: svgplot.reliability_chart(report, title)


def _cmd_grad_check(args):
    vol = load_volume(args.volume)
    payload = grad_check(vol, _labeling(args), args.count, args.bins, step=args.step)
    return payload, payload["regions"], None


def _cmd_fit(args):
    vol = load_volume(args.volume)
    cfg = _labeling(args)
    result = fit(vol, cfg, target=args.target, bins=args.bins,
                 steps=args.steps, lr=args.lr, mode=args.mode)
    trajectory = [float(v) for v in result.trajectory]
    final = count_volume(result.final, cfg, args.bins)
    payload = {
        "mode": args.mode,
        "target": args.target,
        "steps": args.steps,
        "lr": args.lr,
        "initial_objective": trajectory[0] if trajectory else None,
        "final_objective": trajectory[-1] if trajectory else None,
        "final_argmax_count": final.argmax_count,
        "final_expected_count": final.expected_count,
        "objective_trajectory": trajectory,
    }
    rows = [{"step": i, "objective": v} for i, v in enumerate(trajectory)]

    def plot():
        return svgplot.line_chart(
            {args.mode: (list(range(len(trajectory))), trajectory)},
            "fit objective by step", "step", "objective")

    return payload, rows, plot


def _cmd_synth(args):
    cfg = GeneratorConfig(shape=tuple(args.shape), n_samples=args.n, seed=args.seed)
    paths = write_corpus(cfg, args.out_dir)
    payload = {
        "dir": str(paths["dir"]),
        "manifest": str(paths["manifest"]),
        "registry": str(paths["registry"]),
        "n": cfg.n_samples,
        "seed": cfg.seed,
        "shape": list(cfg.shape),
    }
    rows = [{**payload, "shape": "x".join(str(n) for n in cfg.shape)}]
    return payload, rows, None


def _cmd_mc_entropy(args):
    counts = _parse_counts(args.counts)
    dist = empirical_count_distribution(counts, args.bins)
    payload = {
        "n": len(counts),
        "bins": args.bins,
        "binned": [float(v) for v in dist.bin_probs],
        "argmax_bin": dist.argmax_bin(),
        "entropy": dist.entropy(),
        "normalized_entropy": dist.normalized_entropy(),
    }
    rows = [{"bin": i, "probability": float(p)} for i, p in enumerate(dist.bin_probs)]
    return payload, rows, None


# ---------------------------------------------------------------------------
# parser assembly


def _shape_triple(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from e


def build_parser() -> argparse.ArgumentParser:
    labeling = argparse.ArgumentParser(add_help=False)
    labeling.add_argument("--tau", type=float, default=0.1,
                          help="clustering threshold (default 0.1)")
    labeling.add_argument("--connectivity", type=int, default=26,
                          choices=[4, 6, 8, 18, 26],
                          help="neighborhood (2D: 4/8, 3D: 6/18/26; default 26)")
    labeling.add_argument("--min-size", type=int, default=1,
                          help="drop regions smaller than this many voxels")

    bins = argparse.ArgumentParser(add_help=False)
    bins.add_argument("--bins", type=int, default=DEFAULT_BINS,
                      help=f"count bins, last bin pools the tail (default {DEFAULT_BINS})")

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--format", choices=["json", "csv"], default=None,
                        help="report format (default json)")
    output.add_argument("--out", type=Path, default=None,
                        help="write the report here instead of stdout")

    plot = argparse.ArgumentParser(add_help=False)
    plot.add_argument("--plot", type=Path, default=None,
                      help="also render an SVG chart to this path")

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument("--threads", type=int, default=None,
                       help="worker threads for manifest batches "
                            "(default: PBCOUNT_THREADS or 1)")

    parser = argparse.ArgumentParser(
        prog="pbcount",
        description="Probabilistic lesion counting over voxel-probability volumes.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("count", parents=[labeling, bins, output],
                       help="exact count distribution of one volume")
    p.add_argument("volume", type=Path)
    p.set_defaults(handler=_cmd_count)

    p = sub.add_parser("cc-count", parents=[labeling, output],
                       help="plain connected-component count of one volume")
    p.add_argument("volume", type=Path)
    p.set_defaults(handler=_cmd_cc_count)

    p = sub.add_parser("eval", parents=[labeling, bins, output, batch],
                       help="count metrics over a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--method", choices=["pb", "cc"], default="pb")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("sweep", parents=[labeling, bins, output, batch, plot],
                       help="metrics for both methods across thresholds")
    p.add_argument("manifest", type=Path)
    p.add_argument("--taus", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
                   help="comma-separated thresholds")
    p.set_defaults(handler=_cmd_sweep, format_default="csv")

    p = sub.add_parser("calibrate", parents=[labeling, bins, output, batch, plot],
                       help="reliability analysis at count or voxel level")
    p.add_argument("manifest", type=Path)
    p.add_argument("--level", choices=["count", "voxel"], default="count")
    p.add_argument("--method", choices=["pb", "cc"], default="pb")
    p.add_argument("--calibration-bins", type=int, default=DEFAULT_CALIBRATION_BINS)
    p.set_defaults(handler=_cmd_calibrate)

    p = sub.add_parser("grad-check", parents=[labeling, bins, output],
                       help="finite-difference check of the count-loss gradient")
    p.add_argument("volume", type=Path)
    p.add_argument("--count", type=int, required=True, help="count label")
    p.add_argument("--step", type=float, default=1e-5, help="perturbation size")
    p.set_defaults(handler=_cmd_grad_check)

    p = sub.add_parser("fit", parents=[labeling, bins, output, plot],
                       help="gradient-descend a volume against a count objective")
    p.add_argument("volume", type=Path)
    p.add_argument("--mode", choices=list(FIT_MODES), default="match_count")
    p.add_argument("--target", type=int, default=None,
                   help="target count (match_count mode)")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.5)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("synth", parents=[output],
                       help="generate a synthetic corpus with ground truth")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--n", type=int, default=100, help="number of samples")
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--shape", type=_shape_triple, default=[32, 64, 64],
                   help="volume shape, e.g. 32,64,64")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("mc-entropy", parents=[bins, output],
                       help="empirical count distribution from sampled counts")
    p.add_argument("counts", help="comma-separated counts, or a file of integers")
    p.set_defaults(handler=_cmd_mc_entropy)

    return parser


def _emit(args, payload, rows) -> None:
    fmt = args.format or getattr(args, "format_default", "json")
    text = _csv_text(rows) if fmt == "csv" else json.dumps(payload, indent=2) + "\n"
    if args.out is not None:
        try:
            args.out.write_text(text, encoding="utf-8")
        except OSError as e:
            raise UnwritableDestination(f"cannot write report to {args.out}: {e}") from e
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        if getattr(args, "threads", None) is None and hasattr(args, "threads"):
            args.threads = _default_threads()
        payload, rows, plot_fn = args.handler(args)
        _emit(args, payload, rows)
        if getattr(args, "plot", None) is not None:
            args.plot.write_text(plot_fn(), encoding="utf-8")
            print(f"wrote {args.plot}", file=sys.stderr)
        return 0
    except AssumptionViolated as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except (PBCountError, ValueError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - internal failure
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


def run() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
