"""Independent reference implementations the tests compare against.

Everything here is deliberately naive and written from the definitions:
exhaustive enumeration over existence outcomes, depth-first flood fill,
leave-one-out differentiation, central difference quotients. None of it
shares code or algorithmic structure with the library; that is the point.
"""

from __future__ import annotations

import itertools

import numpy as np


def brute_force_count_pmf(p) -> np.ndarray:
    """Exact count pmf by summing over all 2^K existence outcomes."""
    p = np.asarray(p, dtype=np.float64)
    k = p.size
    pmf = np.zeros(k + 1)
    if k == 0:
        pmf[0] = 1.0
        return pmf
    outcomes = np.arange(1 << k, dtype=np.int64)
    bits = ((outcomes[:, None] >> np.arange(k)) & 1).astype(bool)
    weights = np.where(bits, p, 1.0 - p).prod(axis=1)
    np.add.at(pmf, bits.sum(axis=1), weights)
    return pmf


def bin_tail(pmf, bins: int) -> np.ndarray:
    """Pool a count pmf into bins 0..bins-2 plus a tail bin."""
    pmf = np.asarray(pmf, dtype=np.float64)
    out = np.zeros(bins)
    head = min(bins - 1, pmf.size)
    out[:head] = pmf[:head]
    out[bins - 1] = pmf[bins - 1:].sum()
    return out


def leave_one_out_loss_grad(p, count_label: int, bins: int = 5):
    """Loss and gradient of -ln(binned pmf at the label's bin).

    Differentiates through the definition: d pmf(c) / d p_k equals the
    leave-one-out pmf at c-1 minus the leave-one-out pmf at c, and the tail
    bin's derivative telescopes to the leave-one-out pmf at bins-2. All
    pmfs come from the brute-force enumerator.
    """
    p = np.asarray(p, dtype=np.float64)
    q = bin_tail(brute_force_count_pmf(p), bins)
    b = min(int(count_label), bins - 1)
    denom = max(q[b], 1e-300)
    grad = np.zeros(p.size)
    for k in range(p.size):
        loo = brute_force_count_pmf(np.delete(p, k))

        def at(c: int) -> float:
            return float(loo[c]) if 0 <= c < loo.size else 0.0

        dq = at(bins - 2) if b == bins - 1 else at(b - 1) - at(b)
        grad[k] = -dq / denom
    return -float(np.log(denom)), grad


def central_fd_grad(fn, x, step: float = 1e-5) -> np.ndarray:
    """Symmetric difference quotient of a scalar function, one coordinate
    at a time."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros(x.size)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad


def flood_fill_regions(data, tau: float, max_manhattan: int) -> list[list[int]]:
    """Connected components of data > tau by depth-first search.

    Neighbors are all offsets in {-1,0,1}^rank with Manhattan norm between
    1 and max_manhattan (1: faces, 2: +edges, 3: +corners). Components come
    back as sorted lists of linear indices, ordered by their smallest
    linear index (the scan order of their first voxel).
    """
    data = np.asarray(data)
    shape = data.shape
    offsets = [off for off in itertools.product((-1, 0, 1), repeat=data.ndim)
               if 0 < sum(abs(o) for o in off) <= max_manhattan]
    above = data > tau
    seen = np.zeros(shape, dtype=bool)
    components = []
    for start in np.ndindex(*shape):
        if not above[start] or seen[start]:
            continue
        seen[start] = True
        stack = [start]
        component = []
        while stack:
            cur = stack.pop()
            component.append(int(np.ravel_multi_index(cur, shape)))
            for off in offsets:
                nb = tuple(c + o for c, o in zip(cur, off))
                if (all(0 <= c < s for c, s in zip(nb, shape))
                        and above[nb] and not seen[nb]):
                    seen[nb] = True
                    stack.append(nb)
        components.append(sorted(component))
    return components


CONNECTIVITY_MANHATTAN = {"face": 1, "face+edge": 2, "face+edge+corner": 3}
