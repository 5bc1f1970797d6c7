"""Probability volumes, masks, and their on-disk formats.

This module is the single home of the indexing conventions used everywhere
else: axes are ordered (z, y, x) for rank-3 data and (y, x) for rank-2 data,
and a voxel's linear index is its position in row-major (C-order) traversal,
``i = z * (Y * X) + y * X + x``. Regions, gradients, and the bridge all
exchange voxel identities as these linear indices.

Two file formats are supported:

* NPY version 1.0 holding a little-endian float32/float64 (volumes) or bool
  (masks) array of rank 2 or 3, C-order.
* A raw little-endian binary payload ``name.bin`` next to a JSON sidecar
  ``name.json`` of the form ``{"shape": [Z, Y, X], "dtype": "f8", "order": "C"}``
  (``"u1"`` for masks, one byte per voxel, values 0/1).

Volumes are float64 in memory regardless of the stored precision, and are
treated as immutable after construction: no code in this package writes into
``ProbabilityVolume.data``, and callers should not either.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadShape,
    UnreadableFile,
    UnsupportedFormat,
    UnwritableDestination,
    ValueOutOfRange,
)

SUPPORTED_RANKS = (2, 3)

_VOLUME_DTYPES = {"f4": np.dtype("<f4"), "f8": np.dtype("<f8")}
_MASK_DTYPES = {"u1": np.dtype("u1")}


def _check_rank(shape: tuple[int, ...]) -> None:
    if len(shape) not in SUPPORTED_RANKS:
        raise BadShape(f"expected rank 2 or 3, got rank {len(shape)} shape {shape}")
    if any(n < 1 for n in shape):
        raise BadShape(f"every axis must have extent >= 1, got shape {shape}")


def _check_range(flat: np.ndarray) -> None:
    # NaN fails both comparisons, +/-inf fails one, so this covers finiteness.
    ok = (flat >= 0.0) & (flat <= 1.0)
    if not ok.all():
        i = int(np.argmin(ok))
        raise ValueOutOfRange(
            f"voxel value {flat[i]!r} at linear index {i} is outside [0.0, 1.0]"
        )


@dataclass(frozen=True)
class ProbabilityVolume:
    """A dense rank-2 or rank-3 array of per-voxel probabilities.

    Construction validates shape and value range; every entry must be finite
    and in [0.0, 1.0]. The stored array is float64 and C-contiguous.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        _check_rank(arr.shape)
        _check_range(arr.ravel())
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def rank(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def flat(self) -> np.ndarray:
        """The volume as a 1-D view in linear-index order."""
        return self.data.reshape(-1)


@dataclass(frozen=True)
class BinaryMask:
    """A rank-2 or rank-3 boolean array, same indexing rules as volumes."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=bool)
        _check_rank(arr.shape)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


def linear_index(shape: tuple[int, ...], coords: tuple[int, ...]) -> int:
    """Row-major linear index of ``coords`` in an array of ``shape``."""
    return int(np.ravel_multi_index(coords, shape))


def coords_of(shape: tuple[int, ...], index: int) -> tuple[int, ...]:
    """Inverse of :func:`linear_index`."""
    return tuple(int(c) for c in np.unravel_index(index, shape))


def _read_npy(path: Path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            arr = np.load(fh, allow_pickle=False)
    except OSError as e:
        raise UnreadableFile(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise UnsupportedFormat(f"{path} is not a readable NPY file: {e}") from e
    return arr


def _sidecar_for(path: Path) -> Path:
    return path.with_suffix(".json")


def _read_raw(path: Path, allowed: dict[str, np.dtype]) -> np.ndarray:
    sidecar = _sidecar_for(path)
    try:
        with open(sidecar, "r", encoding="utf-8") as fh:
            header = json.load(fh)
    except OSError as e:
        raise UnreadableFile(f"cannot read sidecar {sidecar}: {e}") from e
    except json.JSONDecodeError as e:
        raise UnsupportedFormat(f"sidecar {sidecar} is not valid JSON: {e}") from e

    try:
        shape = tuple(int(n) for n in header["shape"])
        dtype_tag = str(header["dtype"])
        order = str(header.get("order", "C"))
    except (KeyError, TypeError, ValueError) as e:
        raise UnsupportedFormat(f"sidecar {sidecar} is missing shape/dtype fields") from e
    if order != "C":
        raise UnsupportedFormat(f"sidecar {sidecar}: only C order is supported, got {order!r}")
    if dtype_tag not in allowed:
        raise UnsupportedFormat(
            f"sidecar {sidecar}: dtype {dtype_tag!r} not supported here "
            f"(expected one of {sorted(allowed)})"
        )
    _check_rank(shape)

    try:
        payload = np.fromfile(path, dtype=allowed[dtype_tag])
    except OSError as e:
        raise UnreadableFile(f"cannot read {path}: {e}") from e
    expected = int(np.prod(shape))
    if payload.size != expected:
        raise BadShape(
            f"{path}: header shape {list(shape)} needs {expected} values, "
            f"payload holds {payload.size}"
        )
    return payload.reshape(shape)


def load_volume(path: str | Path) -> ProbabilityVolume:
    """Load a probability volume from ``.npy`` or ``.bin`` (+ JSON sidecar).

    Raises UnreadableFile, UnsupportedFormat, BadShape, or ValueOutOfRange.
    """
    path = Path(path)
    if not path.is_file():
        raise UnreadableFile(f"no such file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".npy":
        arr = _read_npy(path)
        if arr.dtype.kind != "f" or arr.dtype.itemsize not in (4, 8):
            raise UnsupportedFormat(
                f"{path}: expected float32/float64 payload, got dtype {arr.dtype}"
            )
        _check_rank(arr.shape)
        return ProbabilityVolume(arr)
    if suffix == ".bin":
        return ProbabilityVolume(_read_raw(path, _VOLUME_DTYPES))
    raise UnsupportedFormat(f"{path}: unknown volume format {suffix!r} (use .npy or .bin)")


def load_mask(path: str | Path) -> BinaryMask:
    """Load a binary mask from ``.npy`` (bool) or ``.bin`` (u1 + sidecar)."""
    path = Path(path)
    if not path.is_file():
        raise UnreadableFile(f"no such file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".npy":
        arr = _read_npy(path)
        if arr.dtype != np.bool_:
            raise UnsupportedFormat(f"{path}: expected bool mask payload, got {arr.dtype}")
        _check_rank(arr.shape)
        return BinaryMask(arr)
    if suffix == ".bin":
        raw = _read_raw(path, _MASK_DTYPES)
        bad = (raw > 1)
        if bad.any():
            i = int(np.argmax(bad.ravel()))
            raise ValueOutOfRange(
                f"mask value {int(raw.ravel()[i])} at linear index {i} is not 0/1"
            )
        return BinaryMask(raw.astype(bool))
    raise UnsupportedFormat(f"{path}: unknown mask format {suffix!r} (use .npy or .bin)")


def _write_guard(path: Path):
    parent = path.parent
    if not parent.is_dir():
        raise UnwritableDestination(f"destination directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise UnwritableDestination(f"destination directory is not writable: {parent}")


def save_volume(vol: ProbabilityVolume, path: str | Path) -> Path:
    """Write a volume as ``.npy`` (float64) or ``.bin`` + JSON sidecar.

    Round trip is bit-exact: load_volume(save_volume(v)) equals v.
    """
    path = Path(path)
    _write_guard(path)
    suffix = path.suffix.lower()
    try:
        if suffix == ".npy":
            with open(path, "wb") as fh:
                np.save(fh, vol.data)
        elif suffix == ".bin":
            vol.data.tofile(path)
            header = {"shape": list(vol.shape), "dtype": "f8", "order": "C"}
            with open(_sidecar_for(path), "w", encoding="utf-8") as fh:
                json.dump(header, fh)
                fh.write("\n")
        else:
            raise UnsupportedFormat(f"{path}: unknown volume format {suffix!r}")
    except OSError as e:
        raise UnwritableDestination(f"cannot write {path}: {e}") from e
    return path


def save_mask(mask: BinaryMask, path: str | Path) -> Path:
    """Write a mask as ``.npy`` (bool) or ``.bin`` (u1) + JSON sidecar."""
    path = Path(path)
    _write_guard(path)
    suffix = path.suffix.lower()
    try:
        if suffix == ".npy":
            with open(path, "wb") as fh:
                np.save(fh, mask.data)
        elif suffix == ".bin":
            mask.data.astype("u1").tofile(path)
            header = {"shape": list(mask.shape), "dtype": "u1", "order": "C"}
            with open(_sidecar_for(path), "w", encoding="utf-8") as fh:
                json.dump(header, fh)
                fh.write("\n")
        else:
            raise UnsupportedFormat(f"{path}: unknown mask format {suffix!r}")
    except OSError as e:
        raise UnwritableDestination(f"cannot write {path}: {e}") from e
    return path
