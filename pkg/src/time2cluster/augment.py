"""BAGs and the max-pooled (augmented) correlation matrix.

A BAG is a run of ``ks`` consecutive subsequences starting at ``i``. The
correlation between two BAGs is the largest correlation between any of
their members, i.e. a ``ks x ks`` max pool of the correlation matrix taken
at every position (pooling stride 1), so every subsequence keeps its own row.
BAGs near the end of the series are truncated rather than padded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidArgumentError
from .profile import CorrelationMatrix

# Cells per pooling chunk; bounds the scratch memory to a few copies of this.
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class BagSpec:
    start: int
    m: int
    ks: int
    effective_ks: int

    @classmethod
    def at(cls, start: int, m: int, ks: int, n_subsequences: int) -> "BagSpec":
        if not 0 <= start < n_subsequences:
            raise InvalidArgumentError(f"BAG start {start} outside [0, {n_subsequences})")
        if ks < 1:
            raise InvalidArgumentError("kernel size must be >= 1")
        return cls(start, m, ks, min(ks, n_subsequences - start))

    @property
    def members(self) -> range:
        return range(self.start, self.start + self.effective_ks)


@dataclass(frozen=True)
class AugmentedCorrelationMatrix:
    entries: np.ndarray
    ks: int
    m: int

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _entries(M) -> np.ndarray:
    return M.entries if isinstance(M, (CorrelationMatrix, AugmentedCorrelationMatrix)) else np.asarray(M, dtype=np.float64)


def bag_correlation(M, i: int, j: int, ks: int) -> float:
    """Largest correlation between a member of BAG ``i`` and a member of BAG ``j``."""
    E = _entries(M)
    N = E.shape[0]
    if ks < 1:
        raise InvalidArgumentError("kernel size must be >= 1")
    if not (0 <= i < N and 0 <= j < N):
        raise InvalidArgumentError(f"BAG indices ({i}, {j}) outside [0, {N})")
    return float(E[i : i + ks, j : j + ks].max())


def forward_window_max(a: np.ndarray, k: int, axis: int = -1) -> np.ndarray:
    """``out[..., t] = max(a[..., t:t+k])`` along `axis`, truncated at the end.

    Van Herk / Gil-Werman: split the axis into blocks of length k, take
    running maxima forward and backward inside each block, and combine the
    backward max at ``t`` with the forward max at ``t + k - 1``. Three passes,
    independent of k.
    """
    if k < 1:
        raise InvalidArgumentError("window must be >= 1")
    a = np.moveaxis(np.asarray(a), axis, -1)
    if k == 1:
        return np.moveaxis(a.copy(), -1, axis)
    n = a.shape[-1]
    nblocks = -(-(n + k - 1) // k)
    padded = np.full(a.shape[:-1] + (nblocks * k,), -np.inf)
    padded[..., :n] = a
    blocks = padded.reshape(a.shape[:-1] + (nblocks, k))
    fwd = np.maximum.accumulate(blocks, axis=-1).reshape(padded.shape)
    bwd = np.maximum.accumulate(blocks[..., ::-1], axis=-1)[..., ::-1].reshape(padded.shape)
    out = np.maximum(bwd[..., :n], fwd[..., k - 1 : k - 1 + n])
    return np.moveaxis(out, -1, axis)


def augment_matrix(M, ks: int) -> AugmentedCorrelationMatrix:
    """Max-pool `M` with a forward ``ks x ks`` kernel at every cell.

    The 2-D maximum is separable, so a row pass followed by a column pass
    gives ``A[i, j] = max(M[i:i+ks, j:j+ks])`` in O(N^2).
    """
    ks = int(ks)
    if ks < 1:
        raise InvalidArgumentError("kernel size must be >= 1")
    E = _entries(M)
    m = getattr(M, "m", 0)
    if ks == 1:
        A = E.copy()
    else:
        N = E.shape[0]
        A = np.empty_like(E, dtype=np.float64)
        step = max(1, _CHUNK_CELLS // max(N, 1))
        for s in range(0, N, step):
            A[s : s + step] = forward_window_max(E[s : s + step], ks, axis=1)
        for s in range(0, N, step):
            A[:, s : s + step] = forward_window_max(A[:, s : s + step], ks, axis=0)
    A.setflags(write=False)
    return AugmentedCorrelationMatrix(A, ks, m)
