"""Probabilistic lesion counting over voxel-probability volumes.

The pipeline: threshold a probability volume into candidate regions
(`label`), read each region's existence probability off its peak voxel
(`existence_probability`), and combine those into an exact count
distribution (`poisson_binomial_pmf`, `count_volume`). The count loss is
differentiable back to the peak voxels (`volume_loss_grad`, `fit`), and the
`metrics` module evaluates predictions over file manifests. `synth` builds
calibrated synthetic corpora for all of the above.
"""

from .errors import (
    AssumptionViolated,
    BadShape,
    EmptyInput,
    EmptyRegion,
    PBCountError,
    PlacementInfeasible,
    ProbabilityOutOfRange,
    ShapeMismatch,
    UnreadableFile,
    UnsupportedFormat,
    UnwritableDestination,
    ValueOutOfRange,
)
from .volume import (
    BinaryMask,
    ProbabilityVolume,
    coords_of,
    linear_index,
    load_mask,
    load_volume,
    save_mask,
    save_volume,
)
from .labeling import (
    CandidateRegion,
    Connectivity,
    LabelingConfig,
    cc_count,
    label,
    regions_to_json,
)
from .aggregate import existence_probability
from .pbdist import (
    DEFAULT_BINS,
    BinnedCountDistribution,
    CountDistribution,
    VolumeCount,
    bin_of,
    bin_pmf,
    count_volume,
    empirical_count_distribution,
    poisson_binomial_pmf,
)
from .countgrad import (
    CountGradient,
    FitResult,
    binned_entropy_grad,
    binned_pmf_vjp,
    count_loss,
    count_loss_grad,
    fit,
    grad_check,
    volume_loss_grad,
)
from .metrics import (
    CalibrationReport,
    CountMetrics,
    EvalRecord,
    count_calibration,
    entropy_filter_curve,
    entropy_histogram,
    eval_cc,
    eval_counts,
    metrics_from_predictions,
    read_manifest,
    sweep_threshold,
    voxel_calibration,
    write_manifest,
)
from .synth import (
    BlobSpec,
    GeneratorConfig,
    SynthSample,
    generate,
    generate_sample,
    oracle_region_truth,
    two_blob_demo_volume,
    write_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated",
    "BadShape",
    "BinaryMask",
    "BinnedCountDistribution",
    "BlobSpec",
    "CalibrationReport",
    "CandidateRegion",
    "Connectivity",
    "CountDistribution",
    "CountGradient",
    "CountMetrics",
    "DEFAULT_BINS",
    "EmptyInput",
    "EmptyRegion",
    "EvalRecord",
    "FitResult",
    "GeneratorConfig",
    "LabelingConfig",
    "PBCountError",
    "PlacementInfeasible",
    "ProbabilityOutOfRange",
    "ProbabilityVolume",
    "ShapeMismatch",
    "SynthSample",
    "UnreadableFile",
    "UnsupportedFormat",
    "UnwritableDestination",
    "ValueOutOfRange",
    "VolumeCount",
    "bin_of",
    "bin_pmf",
    "binned_entropy_grad",
    "binned_pmf_vjp",
    "cc_count",
    "coords_of",
    "count_calibration",
    "count_loss",
    "count_loss_grad",
    "count_volume",
    "empirical_count_distribution",
    "entropy_filter_curve",
    "entropy_histogram",
    "eval_cc",
    "eval_counts",
    "existence_probability",
    "fit",
    "generate",
    "generate_sample",
    "grad_check",
    "label",
    "linear_index",
    "load_mask",
    "load_volume",
    "metrics_from_predictions",
    "oracle_region_truth",
    "poisson_binomial_pmf",
    "read_manifest",
    "regions_to_json",
    "save_mask",
    "save_volume",
    "sweep_threshold",
    "two_blob_demo_volume",
    "volume_loss_grad",
    "voxel_calibration",
    "write_corpus",
    "write_manifest",
]
