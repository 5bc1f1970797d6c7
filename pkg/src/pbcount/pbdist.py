"""Exact count distributions over candidate regions.

Treating each region as an independent Bernoulli variable with its existence
probability, the object count follows a Poisson-binomial distribution. Its
pmf is computed exactly by dynamic programming over regions,

    f(k, c) = f(k-1, c) * (1 - p_k) + f(k-1, c-1) * p_k,    f(0, 0) = 1,

which is quadratic in the number of regions and linear in memory with a
rolling row. Probabilities are sorted into a canonical order first, so the
result is bit-identical under any permutation of the input.

Counts are reported both raw (support 0..K) and binned into ``B`` classes
``0, 1, ..., B-2, (B-1)+`` where the last bin absorbs the tail; predicted
counts, entropies, and all downstream metrics operate on the binned form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, ProbabilityOutOfRange
from .labeling import LabelingConfig, label
from .volume import ProbabilityVolume

DEFAULT_BINS = 5


def _check_probs(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    ok = (p >= 0.0) & (p <= 1.0)
    if not ok.all():
        i = int(np.argmin(ok))
        raise ProbabilityOutOfRange(
            f"existence probability {p[i]!r} at position {i} is outside [0.0, 1.0]"
        )
    return p


def _check_bins(bins: int) -> int:
    bins = int(bins)
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    return bins


@dataclass(frozen=True)
class CountDistribution:
    """Exact pmf of the region count, ``probs[c] = P(count = c)``."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("a count distribution needs a 1-D pmf with support >= {0}")
        if (arr < 0.0).any() or abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValueError("pmf entries must be non-negative and sum to 1")
        object.__setattr__(self, "probs", arr)

    @property
    def support_size(self) -> int:
        return self.probs.size

    def mean(self) -> float:
        """Expected count, sum of c * probs[c]; equals the sum of the p_k."""
        return float(np.dot(np.arange(self.probs.size, dtype=np.float64), self.probs))


@dataclass(frozen=True)
class BinnedCountDistribution:
    """Count pmf folded into bins 0..B-2 plus a tail bin (B-1)+."""

    bin_probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bin_probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("need at least two bins")
        object.__setattr__(self, "bin_probs", arr)

    @property
    def bins(self) -> int:
        return self.bin_probs.size

    def argmax_bin(self) -> int:
        """Smallest bin index of maximal probability."""
        return int(np.argmax(self.bin_probs))

    def entropy(self) -> float:
        """Shannon entropy in nats with the 0 * ln 0 := 0 convention."""
        q = self.bin_probs
        terms = np.where(q > 0.0, q * np.log(np.where(q > 0.0, q, 1.0)), 0.0)
        return float(-terms.sum())

    def normalized_entropy(self) -> float:
        """Entropy divided by ln(B), so the uniform pmf scores 1.0."""
        return self.entropy() / float(np.log(self.bins))


def poisson_binomial_pmf(p) -> CountDistribution:
    """Exact Poisson-binomial pmf of independent Bernoulli(p_k) successes.

    Parameters
    ----------
    p : sequence of float
        Existence probabilities, each in [0, 1]. May be empty, in which
        case the pmf is the point mass at zero.

    Returns
    -------
    CountDistribution
        pmf over counts 0..len(p).
    """
    p = _check_probs(p)
    p = np.sort(p)  # canonical order: permutation invariance is exact
    n = p.size
    pmf = np.zeros(n + 1)
    pmf[0] = 1.0
    for k in range(1, n + 1):
        pk = p[k - 1]
        pmf[1:k + 1] = pmf[1:k + 1] * (1.0 - pk) + pmf[0:k] * pk
        pmf[0] *= 1.0 - pk
    return CountDistribution(pmf)


def bin_pmf(dist: CountDistribution, bins: int = DEFAULT_BINS) -> BinnedCountDistribution:
    """Fold a count pmf into ``bins`` classes, pooling the tail into the last."""
    bins = _check_bins(bins)
    probs = dist.probs
    out = np.zeros(bins)
    head = min(bins - 1, probs.size)
    out[:head] = probs[:head]
    if probs.size > bins - 1:
        out[bins - 1] = probs[bins - 1:].sum()
    return BinnedCountDistribution(out)


def bin_of(count: int, bins: int = DEFAULT_BINS) -> int:
    """Bin index a raw count falls into: min(count, B-1)."""
    count = int(count)
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    return min(count, _check_bins(bins) - 1)


def empirical_count_distribution(counts, bins: int = DEFAULT_BINS) -> BinnedCountDistribution:
    """Binned relative frequencies of observed integer counts.

    Useful for summarizing a set of sampled predictions (for example Monte
    Carlo forward passes) on the same footing as an exact distribution.
    """
    bins = _check_bins(bins)
    counts = np.asarray(counts)
    if counts.size == 0:
        raise EmptyInput("no counts given")
    counts = counts.astype(np.int64).reshape(-1)
    if (counts < 0).any():
        raise ValueError("counts must be non-negative integers")
    binned = np.minimum(counts, bins - 1)
    freq = np.bincount(binned, minlength=bins).astype(np.float64)
    return BinnedCountDistribution(freq / freq.sum())


@dataclass(frozen=True)
class VolumeCount:
    """Full counting result for one volume at one clustering configuration."""

    regions: list
    pmf: CountDistribution
    binned: BinnedCountDistribution
    argmax_count: int
    expected_count: float
    entropy: float
    normalized_entropy: float

    def to_dict(self, shape: tuple[int, ...] | None = None) -> dict:
        """JSON-ready report; includes region descriptors when given a shape."""
        from .labeling import regions_to_json

        payload = {
            "K": len(self.regions),
            "pmf": [float(v) for v in self.pmf.probs],
            "binned": [float(v) for v in self.binned.bin_probs],
            "argmax_count": self.argmax_count,
            "expected_count": self.expected_count,
            "entropy": self.entropy,
            "normalized_entropy": self.normalized_entropy,
        }
        if shape is not None:
            payload["regions"] = regions_to_json(self.regions, shape)
        return payload


def count_volume(vol: ProbabilityVolume, cfg: LabelingConfig,
                 bins: int = DEFAULT_BINS) -> VolumeCount:
    """Cluster a volume and derive its exact count distribution.

    ``argmax_count`` is the smallest bin of maximal binned probability;
    ``expected_count`` is the mean of the unbinned pmf; entropies are those
    of the binned distribution.
    """
    bins = _check_bins(bins)
    regions = label(vol, cfg)
    pmf = poisson_binomial_pmf([r.existence_prob for r in regions])
    binned = bin_pmf(pmf, bins)
    return VolumeCount(
        regions=regions,
        pmf=pmf,
        binned=binned,
        argmax_count=binned.argmax_bin(),
        expected_count=pmf.mean(),
        entropy=binned.entropy(),
        normalized_entropy=binned.normalized_entropy(),
    )
