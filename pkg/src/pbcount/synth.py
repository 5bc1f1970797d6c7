"""Synthetic probability volumes with known ground-truth counts.

Each sample plants a random number of well-separated radial blobs. A blob's
center value equals its peak probability exactly, and whether the blob is a
real object is drawn as Bernoulli(peak), so the generated population is
calibrated by construction: among blobs rendered with peak p, a fraction p
of them are real. Existing and non-existing blobs are rendered identically;
only the ground-truth mask and count see the difference.

On top of the blobs, samples carry two kinds of clutter:

* distractor specks, small blobs whose peaks stay at or below
  ``distractor_peak_max`` and which are never real objects, and
* background noise, uniform in [0, noise_max] outside blob supports.

The speck peak distribution is deliberately two-banded: most specks are
sub-threshold dust, while a small fraction sits just above the default
clustering threshold. A plain component count therefore overcounts at low
thresholds by whole objects, while a probability-weighted count absorbs the
same specks as near-zero existence terms. That reproduces, by design, the
threshold-robustness gap the evaluation suite measures.

Per-sample RNG streams are derived from (seed, sample index), so any sample
can be regenerated independently and in any order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AssumptionViolated, PlacementInfeasible
from .labeling import LabelingConfig, label
from .volume import BinaryMask, ProbabilityVolume, linear_index, save_mask, save_volume

# Distractor design constants, as fractions of distractor_peak_max (see the
# module docstring). With the default cap 0.3 the dust band is [0, 0.09] and
# the visible band is [0.102, 0.111]: dust hides below the default tau=0.1
# while visible specks cross it carrying only ~0.1 existence probability.
# The visible fraction is sized so ~55% of default-config samples carry at
# least one visible speck; that is what separates the component count at
# tau=0.1 from its tau>=0.2 value without moving the probability-weighted
# count, whose per-speck perturbation stays ~0.1.
_SPECK_DUST_BAND = (0.0, 0.30)
_SPECK_VISIBLE_BAND = (0.34, 0.37)
_SPECK_VISIBLE_FRACTION = 0.22
_DISTRACTOR_RADIUS = (1.0, 2.0)

_PLACEMENT_ATTEMPTS = 500


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the synthetic population; defaults define the standard corpus."""

    shape: tuple[int, ...] = (32, 64, 64)
    n_samples: int = 1000
    blob_count_range: tuple[int, int] = (0, 6)
    peak_range: tuple[float, float] = (0.55, 1.0)
    blob_radius_range: tuple[float, float] = (2.0, 4.0)
    min_separation: float = 3.0
    distractor_count_range: tuple[int, int] = (0, 8)
    distractor_peak_max: float = 0.3
    noise_max: float = 0.05
    seed: int = 5

    def __post_init__(self):
        if len(self.shape) not in (2, 3) or any(int(n) < 1 for n in self.shape):
            raise ValueError(f"shape must be rank 2 or 3 with positive extents, got {self.shape}")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")
        for name in ("blob_count_range", "distractor_count_range"):
            lo, hi = getattr(self, name)
            if not (0 <= int(lo) <= int(hi)):
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi, got {(lo, hi)}")
            object.__setattr__(self, name, (int(lo), int(hi)))
        plo, phi = self.peak_range
        if not (0.0 < plo <= phi <= 1.0):
            raise ValueError(f"peak_range must lie inside (0, 1], got {self.peak_range}")
        rlo, rhi = self.blob_radius_range
        if not (1.0 <= rlo <= rhi):
            raise ValueError(f"blob_radius_range must satisfy 1 <= lo <= hi, got {self.blob_radius_range}")
        if self.min_separation < 0:
            raise ValueError("min_separation must be >= 0")
        if not (0.0 <= self.distractor_peak_max < plo):
            raise ValueError("distractor_peak_max must sit below the blob peak floor")
        if not (0.0 <= self.noise_max <= self.distractor_peak_max):
            raise ValueError("noise_max must lie in [0, distractor_peak_max]")
        if int(self.seed) < 0:
            raise ValueError("seed must be >= 0")
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class BlobSpec:
    """Ground truth for one planted blob."""

    center: tuple[int, ...]
    radius: float
    peak: float
    exists: bool

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "radius": self.radius,
            "peak": self.peak,
            "exists": self.exists,
        }


@dataclass(frozen=True)
class SynthSample:
    """One generated volume with its ground truth."""

    index: int
    volume: ProbabilityVolume = field(repr=False)
    mask: BinaryMask = field(repr=False)
    count_label: int
    blobs: list[BlobSpec] = field(repr=False)


def _ball_patch(shape, center, radius):
    """Slices and the distance grid of the axis-aligned patch around a ball."""
    reach = int(np.ceil(radius)) - 1
    slices = tuple(
        slice(max(c - reach, 0), min(c + reach, n - 1) + 1)
        for c, n in zip(center, shape)
    )
    axes = [np.arange(s.start, s.stop, dtype=np.float64) - c for s, c in zip(slices, center)]
    grids = np.meshgrid(*axes, indexing="ij")
    dist = np.sqrt(sum(g * g for g in grids))
    return slices, dist


def _render_blob(data: np.ndarray, center, radius: float, peak: float) -> None:
    # Radial kernel peak * (1 - d/r)^2, truncated at d >= r. The center
    # value is peak exactly because the d=0 factor is exactly 1.
    slices, dist = _ball_patch(data.shape, center, radius)
    kernel = np.where(dist < radius, peak * np.square(1.0 - dist / radius), 0.0)
    np.maximum(data[slices], kernel, out=data[slices])


def _paint_support(mask: np.ndarray, center, radius: float) -> None:
    slices, dist = _ball_patch(mask.shape, center, radius)
    mask[slices] |= dist < radius


def _place(rng, shape, radius, placed, min_separation):
    """Rejection-sample an integer center keeping the support in bounds and
    every support at least min_separation voxels from every other."""
    reach = int(np.ceil(radius)) - 1
    los = [reach for _ in shape]
    his = [n - 1 - reach for n in shape]
    if any(h < l for l, h in zip(los, his)):
        raise PlacementInfeasible(
            f"a blob of radius {radius:.2f} does not fit inside shape {shape}"
        )
    for _ in range(_PLACEMENT_ATTEMPTS):
        center = tuple(int(rng.integers(l, h + 1)) for l, h in zip(los, his))
        ok = True
        for other_center, other_radius in placed:
            gap = float(np.linalg.norm(np.subtract(center, other_center)))
            if gap < radius + other_radius + min_separation:
                ok = False
                break
        if ok:
            return center
    raise PlacementInfeasible(
        f"could not place a blob of radius {radius:.2f} after "
        f"{_PLACEMENT_ATTEMPTS} attempts; shape {shape} is too crowded for "
        f"min_separation {min_separation}"
    )


def _speck_peak(rng, cap: float) -> float:
    if rng.random() < _SPECK_VISIBLE_FRACTION:
        lo, hi = _SPECK_VISIBLE_BAND
    else:
        lo, hi = _SPECK_DUST_BAND
    return cap * rng.uniform(lo, hi)


def generate_sample(cfg: GeneratorConfig, index: int) -> SynthSample:
    """Generate sample ``index`` of the population described by ``cfg``."""
    if not (0 <= int(index)):
        raise ValueError("sample index must be >= 0")
    rng = np.random.default_rng([cfg.seed, int(index)])
    shape = cfg.shape

    data = np.zeros(shape)
    support = np.zeros(shape, dtype=bool)
    mask = np.zeros(shape, dtype=bool)
    placed: list[tuple[tuple[int, ...], float]] = []
    blobs: list[BlobSpec] = []

    n_blobs = int(rng.integers(cfg.blob_count_range[0], cfg.blob_count_range[1] + 1))
    for _ in range(n_blobs):
        radius = float(rng.uniform(*cfg.blob_radius_range))
        center = _place(rng, shape, radius, placed, cfg.min_separation)
        peak = float(rng.uniform(*cfg.peak_range))
        exists = bool(rng.random() < peak)
        placed.append((center, radius))
        blobs.append(BlobSpec(center=center, radius=radius, peak=peak, exists=exists))
        _render_blob(data, center, radius, peak)
        _paint_support(support, center, radius)
        if exists:
            _paint_support(mask, center, radius)

    n_specks = int(rng.integers(cfg.distractor_count_range[0], cfg.distractor_count_range[1] + 1))
    for _ in range(n_specks):
        radius = float(rng.uniform(*_DISTRACTOR_RADIUS))
        center = _place(rng, shape, radius, placed, cfg.min_separation)
        placed.append((center, radius))
        _render_blob(data, center, radius, _speck_peak(rng, cfg.distractor_peak_max))

    if cfg.noise_max > 0.0:
        noise = rng.uniform(0.0, cfg.noise_max, size=shape)
        outside = ~support
        # Compose with max so clutter never exceeds distractor_peak_max and
        # speck peak values stay exactly as drawn.
        data[outside] = np.maximum(data[outside], noise[outside])

    return SynthSample(
        index=int(index),
        volume=ProbabilityVolume(data),
        mask=BinaryMask(mask),
        count_label=sum(b.exists for b in blobs),
        blobs=blobs,
    )


def generate(cfg: GeneratorConfig) -> list[SynthSample]:
    """Generate the full corpus in memory. See write_corpus for large runs."""
    return [generate_sample(cfg, i) for i in range(cfg.n_samples)]


def write_corpus(cfg: GeneratorConfig, out_dir: str | Path,
                 write_masks: bool = True) -> dict:
    """Stream the corpus to ``out_dir`` without holding it in memory.

    Writes ``vol_NNNNN.npy`` (float64) and ``mask_NNNNN.npy`` per sample, a
    ``manifest.jsonl`` with one ``{"volume", "count", "mask"}`` record per
    line (paths relative to the manifest), and a ``registry.json`` holding
    the full ground truth and the generating configuration.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.jsonl"
    registry_path = out_dir / "registry.json"

    registry = []
    with open(manifest_path, "w", encoding="utf-8") as manifest:
        for i in range(cfg.n_samples):
            sample = generate_sample(cfg, i)
            vol_name = f"vol_{i:05d}.npy"
            save_volume(sample.volume, out_dir / vol_name)
            mask_name = None
            if write_masks:
                mask_name = f"mask_{i:05d}.npy"
                save_mask(sample.mask, out_dir / mask_name)
            record = {"volume": vol_name, "count": sample.count_label, "mask": mask_name}
            manifest.write(json.dumps(record) + "\n")
            registry.append({
                "index": i,
                "count": sample.count_label,
                "blobs": [b.to_dict() for b in sample.blobs],
            })

    with open(registry_path, "w", encoding="utf-8") as fh:
        json.dump({
            "config": {
                "shape": list(cfg.shape),
                "n_samples": cfg.n_samples,
                "blob_count_range": list(cfg.blob_count_range),
                "peak_range": list(cfg.peak_range),
                "blob_radius_range": list(cfg.blob_radius_range),
                "min_separation": cfg.min_separation,
                "distractor_count_range": list(cfg.distractor_count_range),
                "distractor_peak_max": cfg.distractor_peak_max,
                "noise_max": cfg.noise_max,
                "seed": cfg.seed,
            },
            "samples": registry,
        }, fh)
        fh.write("\n")

    return {"manifest": manifest_path, "registry": registry_path, "dir": out_dir}


def oracle_region_truth(sample: SynthSample, cfg: LabelingConfig) -> dict[int, int]:
    """Map each super-threshold blob to the labeled region containing it.

    Asserts the correspondence is one region per blob and at most one blob
    per region; anything else means the separation guarantees failed, which
    is reported as AssumptionViolated.
    """
    regions = label(sample.volume, cfg)
    region_of_voxel = np.full(sample.volume.size, -1, dtype=np.int64)
    for region in regions:
        region_of_voxel[region.voxels] = region.id

    mapping: dict[int, int] = {}
    claimed: set[int] = set()
    for bi, blob in enumerate(sample.blobs):
        if blob.peak <= cfg.tau:
            continue
        rid = int(region_of_voxel[linear_index(sample.volume.shape, blob.center)])
        if rid < 0:
            raise AssumptionViolated(
                f"blob {bi} (peak {blob.peak:.3f}) has no region at tau={cfg.tau}"
            )
        if rid in claimed:
            raise AssumptionViolated(f"region {rid} spans more than one blob")
        claimed.add(rid)
        mapping[bi] = rid
    return mapping


def two_blob_demo_volume() -> ProbabilityVolume:
    """A small 2-D volume with two separated blobs peaking at 0.78 and 0.51.

    Handy for demos and CLI walkthroughs: component counting flips from 2 to
    1 between thresholds 0.5 and 0.6, while the probability-weighted count
    distribution is identical at every threshold in [0.1, 0.5].
    """
    data = np.zeros((16, 16))
    _render_blob(data, (4, 4), 3.0, 0.78)
    _render_blob(data, (11, 11), 3.0, 0.51)
    return ProbabilityVolume(data)
