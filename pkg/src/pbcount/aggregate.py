"""Region-level existence probability.

A region's existence probability is the maximum voxel probability over its
members. The representative voxel (``argmax``) is the smallest linear index
attaining that maximum, which makes the choice independent of voxel
enumeration order and gives gradient scatter a stable target.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyRegion
from .volume import ProbabilityVolume


def existence_probability(vol: ProbabilityVolume, voxels: np.ndarray) -> tuple[float, int]:
    """Max-rule existence probability of a voxel set.

    Parameters
    ----------
    vol : ProbabilityVolume
        Volume the linear indices refer to.
    voxels : array of int
        Linear indices of the region's members, any order, at least one.

    Returns
    -------
    (prob, argmax) : (float, int)
        The maximum probability over the set and the smallest linear index
        attaining it.
    """
    voxels = np.asarray(voxels, dtype=np.int64)
    if voxels.size == 0:
        raise EmptyRegion("existence probability of an empty voxel set is undefined")
    if voxels.min() < 0 or voxels.max() >= vol.size:
        raise IndexError(f"voxel index out of bounds for volume of size {vol.size}")
    values = vol.flat[voxels]
    prob = values.max()
    argmax = int(voxels[values == prob].min())
    return float(prob), argmax
