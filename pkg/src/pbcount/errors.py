"""Exception types raised by the public API.

Everything derives from :class:`PBCountError` so callers can catch input
problems in one place. The CLI maps these to exit code 2, except
:class:`AssumptionViolated`, which signals an internal consistency failure
and maps to exit code 3.
"""


class PBCountError(Exception):
    """Base class for all errors raised by this package."""


class UnreadableFile(PBCountError):
    """File is missing, truncated, or cannot be opened."""


class UnsupportedFormat(PBCountError):
    """File exists but is not one of the supported on-disk formats."""


class ValueOutOfRange(PBCountError):
    """A voxel value is non-finite or outside [0, 1]."""


class BadShape(PBCountError):
    """Array rank is not 2 or 3, or the payload disagrees with the header."""


class UnwritableDestination(PBCountError):
    """Output path cannot be created or written."""


class EmptyRegion(PBCountError):
    """A candidate region with no voxels was passed to an aggregator."""


class ProbabilityOutOfRange(PBCountError):
    """An existence probability lies outside [0, 1]."""


class EmptyInput(PBCountError):
    """An operation that needs at least one element received none."""


class ShapeMismatch(PBCountError):
    """Two arrays that must share a shape do not."""


class PlacementInfeasible(PBCountError):
    """Synthetic blob placement cannot satisfy the separation constraints."""


class AssumptionViolated(PBCountError):
    """Generated data broke an invariant the generator must guarantee."""
