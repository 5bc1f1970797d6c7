"""Framework-facing forward/backward bindings over the pbcount library.

The primary library speaks in its own volume and gradient types. Training
loops usually want something flatter: hand over a raw probability buffer,
get back the binned count distribution plus an opaque token, then spend
that token on a count label (or an upstream gradient) to receive a dense
gradient buffer aligned with the input. This package is exactly that
adapter and nothing more. Every number it returns is produced by the
public pbcount API, so outputs are bit-identical to calling the library
directly.

``forward`` snapshots the frozen region assignment (representative voxel
index and existence probability per region), so the input buffer is never
retained; the caller may reuse or free it immediately. Tokens are single
use: the first ``backward`` or ``backward_upstream`` call consumes one,
and any later use raises ``StaleToken``. Calls may be issued from several
threads at once, but a token is not a cross-thread handoff mechanism; the
thread that runs a forward pass should be the one that spends its token.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

import numpy as np

import pbcount as pc

__version__ = "0.1.0"

__all__ = [
    "StaleToken",
    "backward",
    "backward_upstream",
    "count",
    "forward",
    "version",
]


class StaleToken(RuntimeError):
    """A context token was reused, or never came from ``forward``."""


@dataclass(frozen=True)
class _Context:
    # Everything backward needs, copied out of the counting result so the
    # caller's buffer is not kept alive.
    shape: tuple[int, ...]
    existence_probs: tuple[float, ...]
    argmax_indices: tuple[int, ...]
    bins: int


_registry_lock = threading.Lock()
_registry: dict[int, _Context] = {}
_token_ids = itertools.count(1)


def _as_volume(buffer) -> pc.ProbabilityVolume:
    # ProbabilityVolume stores a C-contiguous float64 array; construction is
    # zero-copy when the host buffer already is one.
    return pc.ProbabilityVolume(np.asarray(buffer))


def _peek(token) -> _Context:
    with _registry_lock:
        try:
            ctx = _registry.get(token)
        except TypeError:
            ctx = None
    if ctx is None:
        raise StaleToken(f"token {token!r} was already spent or never issued")
    return ctx


def _spend(token) -> None:
    # Atomic pop: under a race, exactly one caller gets the context.
    with _registry_lock:
        spent = _registry.pop(token, None) is None
    if spent:
        raise StaleToken(f"token {token!r} was already spent or never issued")


def _scatter(ctx: _Context, dloss_dregion: np.ndarray) -> np.ndarray:
    # Same scatter CountGradient.to_dense performs: one entry per region at
    # its representative voxel, zero elsewhere.
    dense = np.zeros(ctx.shape)
    flat = dense.reshape(-1)
    for k, idx in enumerate(ctx.argmax_indices):
        flat[idx] = dloss_dregion[k]
    return dense


def forward(buffer, tau: float = 0.1, connectivity=26, min_size: int = 1,
            bins: int = pc.DEFAULT_BINS):
    """Count a probability buffer and open a one-shot gradient context.

    Returns ``(binned_pmf, region_descriptors, token)``: a fresh float64
    array of ``bins`` probabilities whose last entry pools the tail, the
    JSON-ready region list of ``pbcount.regions_to_json``, and the token a
    single later backward call spends. Validation failures raise the
    primary library's own exceptions.
    """
    vol = _as_volume(buffer)
    cfg = pc.LabelingConfig(tau=tau, connectivity=connectivity, min_size=min_size)
    result = pc.count_volume(vol, cfg, bins)
    ctx = _Context(
        shape=vol.shape,
        existence_probs=tuple(float(r.existence_prob) for r in result.regions),
        argmax_indices=tuple(int(r.argmax_index) for r in result.regions),
        bins=int(bins),
    )
    with _registry_lock:
        token = next(_token_ids)
        _registry[token] = ctx
    descriptors = pc.regions_to_json(result.regions, vol.shape)
    return np.array(result.binned.bin_probs, dtype=np.float64), descriptors, token


def backward(token, count_label: int) -> tuple[float, np.ndarray]:
    """Spend a token on an integer count label.

    Returns ``(loss, grad)``: the negative log binned probability of the
    label, and a dense float64 buffer of the forward input's shape that is
    nonzero only at each region's representative voxel. A rejected label
    leaves the token live; success consumes it.
    """
    ctx = _peek(token)
    loss, dloss_dregion = pc.count_loss_grad(ctx.existence_probs, count_label, ctx.bins)
    _spend(token)
    return loss, _scatter(ctx, dloss_dregion)


def backward_upstream(token, upstream) -> np.ndarray:
    """Spend a token on an upstream gradient over the binned pmf.

    ``upstream[b]`` is the host framework's dL/dq_b for the forward pmf;
    the return value is the dense voxel gradient buffer for that loss.
    Token semantics match ``backward``.
    """
    ctx = _peek(token)
    dloss_dregion = pc.binned_pmf_vjp(ctx.existence_probs, upstream, ctx.bins)
    _spend(token)
    return _scatter(ctx, dloss_dregion)


def count(buffer, tau: float = 0.1, connectivity=26, min_size: int = 1,
          bins: int = pc.DEFAULT_BINS) -> dict:
    """One-shot counting report as a JSON-ready dict, no gradient context."""
    vol = _as_volume(buffer)
    cfg = pc.LabelingConfig(tau=tau, connectivity=connectivity, min_size=min_size)
    return pc.count_volume(vol, cfg, bins).to_dict(vol.shape)


def version() -> str:
    """Bridge release plus the primary library build it binds."""
    return f"{__version__}+pbcount.{pc.__version__}"
