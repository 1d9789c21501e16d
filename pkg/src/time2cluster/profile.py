"""Distance profiles and the all-pairs subsequence correlation matrix.

Two routes compute the same numbers:

* ``naive`` z-normalizes every subsequence explicitly and takes dot
  products. It is O(n m) per row and serves as the reference.
* ``fast`` computes sliding dot products with an FFT and converts them to
  Pearson correlations from per-window means and stds (the MASS recipe).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .core import (
    FLAT_EPSILON,
    InvalidArgumentError,
    InvalidWindowError,
    ResourceError,
    as_series,
    rolling_mean_std,
    znorm,
)

DEFAULT_MEM_CAP = 2 * 1024**3
_SLACK = 1e-9
# Upper bound on the complex scratch buffer used per FFT chunk.
_CHUNK_BYTES = 32 * 1024**2


@dataclass(frozen=True)
class DistanceProfile:
    query_start: int
    m: int
    correlations: np.ndarray

    @property
    def distances(self) -> np.ndarray:
        return np.sqrt(np.maximum(2.0 * self.m * (1.0 - self.correlations), 0.0))


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson correlation between every pair of length-`m` subsequences."""

    entries: np.ndarray
    m: int

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def corr_to_dist(rho, m: int):
    """z-normalized Euclidean distance for a Pearson correlation: sqrt(2m(1 - rho))."""
    r = np.asarray(rho, dtype=np.float64)
    if m < 1:
        raise InvalidArgumentError("m must be positive")
    if np.any(r > 1 + _SLACK) or np.any(r < -1 - _SLACK):
        raise InvalidArgumentError("correlation must lie in [-1, 1]")
    r = np.clip(r, -1.0, 1.0)
    d = np.sqrt(2.0 * m * (1.0 - r))
    return float(d) if d.ndim == 0 else d


def dist_to_corr(d, m: int):
    """Inverse of :func:`corr_to_dist`: 1 - d^2 / (2m), clamped to [-1, 1]."""
    dd = np.asarray(d, dtype=np.float64)
    if m < 1:
        raise InvalidArgumentError("m must be positive")
    upper = math.sqrt(4.0 * m) * (1 + _SLACK)
    if np.any(dd < 0) or np.any(dd > upper):
        raise InvalidArgumentError(f"distance must lie in [0, sqrt(4m)={math.sqrt(4 * m):.6g}]")
    r = np.clip(1.0 - dd * dd / (2.0 * m), -1.0, 1.0)
    return float(r) if r.ndim == 0 else r


def _check_window(n: int, m: int):
    if m < 2:
        raise InvalidWindowError(f"window length must be >= 2, got m={m}")
    if m > n:
        raise InvalidWindowError(f"window length m={m} exceeds series length n={n}")


def _naive_rows(x: np.ndarray, m: int, rows) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(x, m)
    z = np.array([znorm(w) for w in windows])
    out = np.empty((len(rows), z.shape[0]))
    for k, i in enumerate(rows):
        out[k] = z @ z[i] / m
    return out


class _FastRows:
    """Sliding-dot-product machinery shared by all rows of one series."""

    def __init__(self, x: np.ndarray, m: int):
        # Centring first keeps the mean-product cancellation well conditioned.
        self.x = x - x.mean()
        self.m = m
        self.n = x.size
        self.N = self.n - m + 1
        self.L = sp_fft.next_fast_len(self.n + m - 1, real=True)
        self.fx = sp_fft.rfft(self.x, self.L)
        self.mu, self.sd = rolling_mean_std(self.x, m)
        self.flat = self.sd < FLAT_EPSILON
        self.windows = np.lib.stride_tricks.sliding_window_view(self.x, m)

    def rows(self, start: int, stop: int) -> np.ndarray:
        m, N = self.m, self.N
        q = self.windows[start:stop, ::-1]
        fq = sp_fft.rfft(q, self.L, axis=1)
        qt = sp_fft.irfft(fq * self.fx, self.L, axis=1)[:, m - 1 : m - 1 + N]
        mu_q = self.mu[start:stop, None]
        sd_q = self.sd[start:stop, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = (qt - m * mu_q * self.mu[None, :]) / (m * sd_q * self.sd[None, :])
        rho[self.flat[start:stop], :] = 0.0
        rho[:, self.flat] = 0.0
        np.clip(rho, -1.0, 1.0, out=rho)
        idx = np.arange(start, stop)
        rho[idx - start, idx] = 1.0
        return rho

    def chunk_rows(self) -> int:
        per_row = (self.L // 2 + 1) * 16 + self.L * 8
        return max(1, _CHUNK_BYTES // per_row)


def distance_profile(ts, query_start: int, m: int, method: str = "fast") -> DistanceProfile:
    """Correlation of subsequence `query_start` with every subsequence of `ts`.

    Flat subsequences (std below ``FLAT_EPSILON``) correlate 0 with
    everything except themselves.
    """
    ts = as_series(ts)
    m = int(m)
    _check_window(ts.n, m)
    N = ts.n - m + 1
    if not 0 <= query_start < N:
        raise InvalidArgumentError(f"query_start={query_start} outside [0, {N})")
    if method == "naive":
        row = _naive_rows(ts.values, m, [query_start])[0]
        np.clip(row, -1.0, 1.0, out=row)
        row[query_start] = 1.0
    elif method == "fast":
        row = _FastRows(ts.values, m).rows(query_start, query_start + 1)[0]
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    row.setflags(write=False)
    return DistanceProfile(int(query_start), m, row)


def correlation_matrix(
    ts,
    m: int,
    method: str = "fast",
    mem_cap: int = DEFAULT_MEM_CAP,
    threads: int = 1,
) -> CorrelationMatrix:
    """All-pairs Pearson correlation matrix; row ``j`` is the profile of subsequence ``j``.

    Parameters
    ----------
    ts : TimeSeries or array_like
    m : int
        Subsequence length, at least 2.
    method : {"fast", "naive"}
    mem_cap : int
        Maximum bytes allowed for the ``N x N`` float64 result.
    threads : int
        Worker threads for the row chunks. Results do not depend on it.
    """
    ts = as_series(ts)
    m = int(m)
    _check_window(ts.n, m)
    N = ts.n - m + 1
    if N < 2:
        raise InvalidWindowError(
            f"need at least two subsequences (n - m + 1 >= 2), got n={ts.n}, m={m}"
        )
    need = N * N * 8
    if need > mem_cap:
        raise ResourceError(
            f"correlation matrix needs {need / 2**20:.1f} MiB for {N} subsequences, "
            f"above the memory cap of {mem_cap / 2**20:.1f} MiB; "
            "downsample the series (keep every k-th point, a larger stride) or raise the cap"
        )

    if method == "naive":
        M = _naive_rows(ts.values, m, range(N))
        np.clip(M, -1.0, 1.0, out=M)
        np.fill_diagonal(M, 1.0)
    elif method == "fast":
        engine = _FastRows(ts.values, m)
        M = np.empty((N, N))
        step = engine.chunk_rows()
        bounds = [(s, min(s + step, N)) for s in range(0, N, step)]

        def fill(b):
            M[b[0] : b[1]] = engine.rows(*b)

        if threads > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(fill, bounds))
        else:
            for b in bounds:
                fill(b)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    M.setflags(write=False)
    return CorrelationMatrix(M, m)
