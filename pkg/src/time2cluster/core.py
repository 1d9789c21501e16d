"""Time-series container, subsequence bookkeeping and shared conventions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Subsequences whose population std falls below this are treated as flat.
FLAT_EPSILON = 1e-12


class InvalidArgumentError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class InvalidWindowError(InvalidArgumentError):
    """Raised when a window length does not fit the series."""


class ResourceError(MemoryError):
    """Raised when an operation would exceed a configured resource cap."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver stops before reaching its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class NoPeriodicityError(ValueError):
    """Raised when no periodic structure is found in a series.

    The partial moving-dist curve is attached as ``curve`` so callers can
    still inspect it.
    """

    def __init__(self, message: str, curve=None):
        super().__init__(message)
        self.curve = curve


@dataclass(frozen=True)
class TimeSeries:
    """An immutable, finite, real-valued time series.

    Parameters
    ----------
    values : array_like
        The observations. Converted to a read-only ``float64`` array.
    name : str, optional
        Free-form label carried through reports.
    sample_rate_hz : float, optional
        Sampling rate; purely informational.
    """

    values: np.ndarray
    name: Optional[str] = None
    sample_rate_hz: Optional[float] = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if arr.size < 1:
            raise InvalidArgumentError("a time series needs at least one value")
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise InvalidArgumentError(
                f"time series contains non-finite value at index {int(bad[0])}"
            )
        if self.sample_rate_hz is not None and not self.sample_rate_hz > 0:
            raise InvalidArgumentError("sample_rate_hz must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SubsequenceSpec:
    """Location of one subsequence: 0-based ``start``, ``length`` and the stride used."""

    start: int
    length: int
    stride: int = 1

    def slice(self) -> slice:
        return slice(self.start, self.start + self.length)


def as_series(ts) -> TimeSeries:
    """Wrap raw arrays so every public function accepts either form."""
    if isinstance(ts, TimeSeries):
        return ts
    return TimeSeries(ts)


def extract_subsequences(ts, m: int, stride: int = 1) -> list[SubsequenceSpec]:
    """Enumerate the subsequences of length `m` taken every `stride` points.

    Starts run 0, stride, 2*stride, ... up to the last start that still fits,
    so the count is ``(n - m) // stride + 1``.
    """
    ts = as_series(ts)
    m = int(m)
    stride = int(stride)
    if stride < 1:
        raise InvalidArgumentError(f"stride must be >= 1, got {stride}")
    if m < 1:
        raise InvalidWindowError(f"window length must be >= 1, got {m}")
    if m > ts.n:
        raise InvalidWindowError(
            f"window length m={m} exceeds series length n={ts.n}"
        )
    return [SubsequenceSpec(i, m, stride) for i in range(0, ts.n - m + 1, stride)]


def znorm(values: Sequence[float], flat_epsilon: float = FLAT_EPSILON) -> np.ndarray:
    """Z-normalize with the population standard deviation.

    Sequences whose std is below `flat_epsilon` map to all zeros.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidArgumentError("znorm needs a 1-D sequence of length >= 2")
    mu = x.mean()
    sd = x.std()
    if sd < flat_epsilon:
        return np.zeros_like(x)
    return (x - mu) / sd


def rolling_mean_std(values: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and population std of every length-`m` window.

    Computed per window rather than from running sums so that constant
    stretches come out with a std of (numerically) zero.
    """
    windows = np.lib.stride_tricks.sliding_window_view(values, m)
    mu = windows.mean(axis=1)
    sd = windows.std(axis=1)
    return mu, sd


def make_rng(seed) -> np.random.Generator:
    """The one RNG constructor every stochastic path goes through."""
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def child_seed(seed: int, index: int) -> int:
    """Derive an independent 64-bit seed from ``(seed, index)``.

    Parallel sweeps use this so results never depend on execution order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
