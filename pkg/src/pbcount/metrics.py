"""Post-hoc evaluation of count predictions over a manifest of volumes.

A manifest is a JSONL file, one record per line:

    {"volume": "vol_00000.npy", "count": 3, "mask": "mask_00000.npy"}

with ``mask`` optional (null when absent) and paths resolved relative to the
manifest's directory. Predictions and labels are compared in binned count
space (bins 0..B-2 plus a pooled tail), for two predictors:

* ``pb``: the smallest mode of the exact binned count distribution, and
* ``cc``: the raw connected-component count, i.e. a degenerate distribution
  that puts probability one on the thresholded count's bin.

On top of per-(method, threshold) classification metrics the module offers
reliability analyses (expected/maximum calibration error at count and voxel
level), entropy-based sample filtering, and entropy histograms split by
correctness. Batch loops can fan out over a thread pool; results are
reduced in manifest order, so they do not depend on the thread count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInput, PBCountError, ShapeMismatch, UnreadableFile
from .labeling import LabelingConfig, cc_count
from .pbdist import DEFAULT_BINS, _check_bins, bin_of, count_volume
from .volume import load_mask, load_volume

DEFAULT_CALIBRATION_BINS = 10


@dataclass(frozen=True)
class EvalRecord:
    """One manifest row: a volume path, its count label, an optional mask."""

    volume_path: Path
    count_label: int
    mask_path: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "volume_path", Path(self.volume_path))
        if self.mask_path is not None:
            object.__setattr__(self, "mask_path", Path(self.mask_path))
        if int(self.count_label) < 0:
            raise ValueError(f"count label must be >= 0, got {self.count_label}")


def read_manifest(path: str | Path) -> list[EvalRecord]:
    """Parse a JSONL manifest; relative paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise UnreadableFile(f"no such manifest: {path}")
    base = path.parent
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                volume = base / row["volume"]
                count = int(row["count"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise UnreadableFile(f"{path}:{line_no}: bad manifest record: {e}") from e
            mask = row.get("mask")
            records.append(EvalRecord(
                volume_path=volume,
                count_label=count,
                mask_path=base / mask if mask else None,
            ))
    return records


def write_manifest(records: list[EvalRecord], path: str | Path) -> Path:
    """Write records as JSONL with paths relative to the manifest directory."""
    path = Path(path)
    base = path.parent

    def rel(p: Path) -> str:
        try:
            return str(p.relative_to(base))
        except ValueError:
            return str(p)

    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({
                "volume": rel(r.volume_path),
                "count": r.count_label,
                "mask": rel(r.mask_path) if r.mask_path else None,
            }) + "\n")
    return path


@dataclass(frozen=True)
class CountMetrics:
    """Classification metrics over binned counts.

    ``confusion[t, p]`` counts samples with true bin t and predicted bin p.
    Macro averages run over all B classes; a class absent from both labels
    and predictions contributes zero to each average.
    """

    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: np.ndarray = field(repr=False)
    n: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "n": self.n,
            "confusion": self.confusion.tolist(),
        }


def metrics_from_predictions(true_bins, pred_bins, bins: int = DEFAULT_BINS) -> CountMetrics:
    """Confusion matrix and macro scores from aligned bin vectors."""
    bins = _check_bins(bins)
    true_bins = np.asarray(true_bins, dtype=np.int64)
    pred_bins = np.asarray(pred_bins, dtype=np.int64)
    if true_bins.size == 0:
        raise EmptyInput("cannot compute metrics over zero samples")
    if true_bins.shape != pred_bins.shape:
        raise ShapeMismatch("label and prediction vectors differ in length")

    confusion = np.zeros((bins, bins), dtype=np.int64)
    np.add.at(confusion, (true_bins, pred_bins), 1)

    tp = np.diag(confusion).astype(np.float64)
    per_pred = confusion.sum(axis=0).astype(np.float64)
    per_true = confusion.sum(axis=1).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(per_pred > 0, tp / per_pred, 0.0)
        recall = np.where(per_true > 0, tp / per_true, 0.0)
        f1 = np.where(precision + recall > 0,
                      2.0 * precision * recall / (precision + recall), 0.0)
    return CountMetrics(
        accuracy=float(tp.sum() / true_bins.size),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        confusion=confusion,
        n=int(true_bins.size),
    )


def _annotate(record_index: int, record: EvalRecord, err: PBCountError) -> PBCountError:
    return err.__class__(f"record {record_index} ({record.volume_path.name}): {err}")


def _map_records(records, fn, threads: int = 1) -> list:
    """Apply fn to each record, optionally on a pool, preserving order."""
    if not records:
        raise EmptyInput("manifest holds no records")
    threads = max(1, int(threads))
    if threads == 1:
        return [fn(i, r) for i, r in enumerate(records)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ir: fn(*ir), enumerate(records)))


@dataclass(frozen=True)
class _Prediction:
    true_bin: int
    pred_bin: int
    bin_probs: np.ndarray
    normalized_entropy: float


def _predict(record: EvalRecord, cfg: LabelingConfig, bins: int, method: str) -> _Prediction:
    vol = load_volume(record.volume_path)
    true_bin = bin_of(record.count_label, bins)
    if method == "cc":
        pred = bin_of(cc_count(vol, cfg), bins)
        probs = np.zeros(bins)
        probs[pred] = 1.0
        return _Prediction(true_bin, pred, probs, 0.0)
    result = count_volume(vol, cfg, bins)
    return _Prediction(
        true_bin,
        result.argmax_count,
        result.binned.bin_probs,
        result.normalized_entropy,
    )


def _evaluate(records, cfg, bins, method, threads=1) -> list[_Prediction]:
    def one(i, record):
        try:
            return _predict(record, cfg, bins, method)
        except PBCountError as e:
            raise _annotate(i, record, e) from e
    return _map_records(records, one, threads)


def eval_counts(records: list[EvalRecord], cfg: LabelingConfig,
                bins: int = DEFAULT_BINS, threads: int = 1) -> CountMetrics:
    """Metrics of the probability-weighted (Poisson-binomial) predictor."""
    preds = _evaluate(records, cfg, _check_bins(bins), "pb", threads)
    return metrics_from_predictions([p.true_bin for p in preds],
                                    [p.pred_bin for p in preds], bins)


def eval_cc(records: list[EvalRecord], cfg: LabelingConfig,
            bins: int = DEFAULT_BINS, threads: int = 1) -> CountMetrics:
    """Metrics of the plain component-count baseline."""
    preds = _evaluate(records, cfg, _check_bins(bins), "cc", threads)
    return metrics_from_predictions([p.true_bin for p in preds],
                                    [p.pred_bin for p in preds], bins)


def sweep_threshold(records: list[EvalRecord], taus, cfg_base: LabelingConfig,
                    bins: int = DEFAULT_BINS, threads: int = 1) -> list[dict]:
    """Evaluate both predictors across clustering thresholds.

    Volumes are loaded once per record and evaluated at every threshold, so
    a sweep costs one pass over the manifest. Returns one row per
    (method, tau) pair, methods alternating within each tau, suitable for
    CSV emission.
    """
    bins = _check_bins(bins)
    taus = [float(t) for t in taus]
    if not taus:
        raise EmptyInput("no thresholds given")
    cfgs = [LabelingConfig(tau=t, connectivity=cfg_base.connectivity,
                           min_size=cfg_base.min_size) for t in taus]

    def one(i, record):
        try:
            vol = load_volume(record.volume_path)
            true_bin = bin_of(record.count_label, bins)
            per_tau = []
            for cfg in cfgs:
                result = count_volume(vol, cfg, bins)
                per_tau.append((true_bin,
                                result.argmax_count,
                                bin_of(len(result.regions), bins)))
            return per_tau
        except PBCountError as e:
            raise _annotate(i, record, e) from e

    table = _map_records(records, one, threads)
    rows = []
    for ti, tau in enumerate(taus):
        true_bins = [row[ti][0] for row in table]
        for method, col in (("pb", 1), ("cc", 2)):
            m = metrics_from_predictions(true_bins, [row[ti][col] for row in table], bins)
            rows.append({
                "method": method,
                "tau": tau,
                "accuracy": m.accuracy,
                "macro_precision": m.macro_precision,
                "macro_recall": m.macro_recall,
                "macro_f1": m.macro_f1,
                "n": m.n,
            })
    return rows


@dataclass(frozen=True)
class CalibrationReport:
    """Reliability table over M equal-width confidence bins on [0, 1].

    ``ece`` is the count-weighted mean absolute gap between per-bin
    confidence and accuracy; ``mce`` is the largest gap over non-empty bins.
    """

    bin_edges: np.ndarray = field(repr=False)
    bin_confidence: np.ndarray = field(repr=False)
    bin_accuracy: np.ndarray = field(repr=False)
    bin_count: np.ndarray = field(repr=False)
    ece: float
    mce: float

    def to_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "bin_confidence": self.bin_confidence.tolist(),
            "bin_accuracy": self.bin_accuracy.tolist(),
            "bin_count": self.bin_count.tolist(),
            "ece": self.ece,
            "mce": self.mce,
        }


def _reliability(confidence: np.ndarray, outcome: np.ndarray,
                 calibration_bins: int) -> CalibrationReport:
    m = int(calibration_bins)
    if m < 1:
        raise ValueError("calibration needs at least one bin")
    if confidence.size == 0:
        raise EmptyInput("no (confidence, outcome) pairs to calibrate")
    idx = np.minimum((confidence * m).astype(np.int64), m - 1)
    count = np.bincount(idx, minlength=m).astype(np.int64)
    conf_sum = np.bincount(idx, weights=confidence, minlength=m)
    hit_sum = np.bincount(idx, weights=outcome.astype(np.float64), minlength=m)
    nonempty = count > 0
    conf = np.where(nonempty, conf_sum / np.maximum(count, 1), 0.0)
    acc = np.where(nonempty, hit_sum / np.maximum(count, 1), 0.0)
    gaps = np.abs(acc - conf)[nonempty]
    weights = count[nonempty] / count.sum()
    return CalibrationReport(
        bin_edges=np.linspace(0.0, 1.0, m + 1),
        bin_confidence=conf,
        bin_accuracy=acc,
        bin_count=count,
        ece=float((weights * gaps).sum()),
        mce=float(gaps.max()),
    )


def count_calibration(records: list[EvalRecord], cfg: LabelingConfig,
                      bins: int = DEFAULT_BINS,
                      calibration_bins: int = DEFAULT_CALIBRATION_BINS,
                      method: str = "pb", threads: int = 1) -> CalibrationReport:
    """Count-level reliability: every sample contributes one
    (predicted probability, was-the-true-bin) pair per count bin."""
    if method not in ("pb", "cc"):
        raise ValueError(f"method must be 'pb' or 'cc', got {method!r}")
    preds = _evaluate(records, cfg, _check_bins(bins), method, threads)
    probs = np.stack([p.bin_probs for p in preds])
    hits = np.zeros_like(probs)
    hits[np.arange(len(preds)), [p.true_bin for p in preds]] = 1.0
    return _reliability(probs.reshape(-1), hits.reshape(-1), calibration_bins)


def voxel_calibration(records: list[EvalRecord],
                      calibration_bins: int = DEFAULT_CALIBRATION_BINS,
                      threads: int = 1) -> CalibrationReport:
    """Voxel-level reliability, pooling (probability, mask) pairs over all
    records. Every record must carry a mask with the volume's shape."""
    def one(i, record):
        try:
            if record.mask_path is None:
                raise UnreadableFile("record has no mask")
            vol = load_volume(record.volume_path)
            mask = load_mask(record.mask_path)
            if mask.shape != vol.shape:
                raise ShapeMismatch(f"mask shape {mask.shape} != volume shape {vol.shape}")
            return vol.flat, mask.flat
        except PBCountError as e:
            raise _annotate(i, record, e) from e

    pairs = _map_records(records, one, threads)
    confidence = np.concatenate([p for p, _ in pairs])
    outcome = np.concatenate([o for _, o in pairs])
    return _reliability(confidence, outcome, calibration_bins)


def entropy_filter_curve(records: list[EvalRecord], cfg: LabelingConfig,
                         thresholds, bins: int = DEFAULT_BINS,
                         keep: str = "least", threads: int = 1) -> list[dict]:
    """Accuracy of the pb predictor restricted by normalized entropy.

    ``keep='least'`` retains samples with normalized entropy <= threshold
    (the confident ones); ``keep='most'`` retains >= threshold. Rows report
    the threshold, retained fraction, and accuracy on the retained subset
    (NaN when empty).
    """
    if keep not in ("least", "most"):
        raise ValueError(f"keep must be 'least' or 'most', got {keep!r}")
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise EmptyInput("no entropy thresholds given")
    preds = _evaluate(records, cfg, _check_bins(bins), "pb", threads)
    entropy = np.array([p.normalized_entropy for p in preds])
    correct = np.array([p.pred_bin == p.true_bin for p in preds], dtype=bool)

    rows = []
    for t in thresholds:
        sel = entropy <= t if keep == "least" else entropy >= t
        kept = int(sel.sum())
        rows.append({
            "threshold": t,
            "retained_fraction": kept / len(preds),
            "accuracy": float(correct[sel].mean()) if kept else float("nan"),
            "n": kept,
        })
    return rows


def entropy_histogram(records: list[EvalRecord], cfg: LabelingConfig,
                      bins: int = DEFAULT_BINS, histogram_bins: int = 20,
                      threads: int = 1) -> dict:
    """Histogram of normalized entropies, split by prediction correctness.

    Uses equal-width bins over [0, 1]; the two count vectors sum to the
    manifest size. Also reports the two group means (NaN for empty groups).
    """
    h = int(histogram_bins)
    if h < 1:
        raise ValueError("histogram needs at least one bin")
    preds = _evaluate(records, cfg, _check_bins(bins), "pb", threads)
    entropy = np.array([p.normalized_entropy for p in preds])
    correct = np.array([p.pred_bin == p.true_bin for p in preds], dtype=bool)
    edges = np.linspace(0.0, 1.0, h + 1)
    hist_correct, _ = np.histogram(entropy[correct], bins=edges)
    hist_incorrect, _ = np.histogram(entropy[~correct], bins=edges)
    return {
        "bin_edges": edges.tolist(),
        "correct": hist_correct.tolist(),
        "incorrect": hist_incorrect.tolist(),
        "mean_entropy_correct": float(entropy[correct].mean()) if correct.any() else float("nan"),
        "mean_entropy_incorrect": float(entropy[~correct].mean()) if (~correct).any() else float("nan"),
    }
