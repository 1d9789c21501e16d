"""Window-size estimation from moving-average residuals.

For a periodic series the moving average over ``w`` points flattens out
whenever ``w`` is a whole number of periods. Summing the log distance of
the moving average from its own mean over all positions gives a curve in
``w`` whose valleys sit at 1x, 2x, 3x, ... the period. The estimate is the
mean of ``valley_k / k``; its spread gives the confidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import peak_prominences

from .core import InvalidArgumentError, NoPeriodicityError, as_series

LOG_EPSILON = 1e-12
MIN_MINIMA = 3
# Valleys shallower than this fraction of the curve's range are sampling ripple.
MIN_PROMINENCE = 0.1


@dataclass(frozen=True)
class MovingDistCurve:
    w_values: np.ndarray
    scores: np.ndarray
    local_minima: np.ndarray


@dataclass(frozen=True)
class WindowEstimate:
    window: float
    confidence: float
    residuals: np.ndarray
    curve: MovingDistCurve

    @property
    def minima_windows(self) -> np.ndarray:
        return self.curve.w_values[self.curve.local_minima]


@dataclass
class WindowMetaSeries:
    batch_length: int
    bounds: list
    estimates: list
    per_point: np.ndarray
    rejected: dict = field(default_factory=dict)


def _centred_cumsum(values: np.ndarray):
    # Extended precision on centred data keeps long running sums exact to ~1e-15.
    centre = float(values.mean())
    cs = np.zeros(values.size + 1, dtype=np.longdouble)
    np.cumsum(values.astype(np.longdouble) - centre, out=cs[1:])
    return cs, centre


def moving_average(ts, w: int) -> np.ndarray:
    """Mean of every length-`w` window, via a running sum.

    Differences of one cumulative sum, as in the classic cumsum trick; the
    sum is taken in extended precision on mean-centred values.
    """
    x = as_series(ts).values
    w = int(w)
    if not 1 <= w <= x.size:
        raise InvalidArgumentError(f"window w={w} must lie in [1, n={x.size}]")
    cs, centre = _centred_cumsum(x)
    return np.asarray((cs[w:] - cs[:-w]) / w + centre, dtype=np.float64)


def _score(ma: np.ndarray, log_epsilon: float) -> float:
    return float(np.log(np.abs(ma - ma.mean()) + log_epsilon).sum())


def moving_dist(ts, w: int, log_epsilon: float = LOG_EPSILON) -> float:
    """``sum(log(|MA - mean(MA)| + log_epsilon))`` for the `w`-point moving average."""
    x = as_series(ts).values
    if not 1 <= w <= x.size // 2:
        raise InvalidArgumentError(f"window w={w} must lie in [1, n/2={x.size // 2}]")
    return _score(moving_average(x, w), log_epsilon)


def moving_dist_curve(ts, s: int, e: int, log_epsilon: float = LOG_EPSILON,
                      min_prominence: float = MIN_PROMINENCE) -> MovingDistCurve:
    """Moving-dist for every ``w`` in ``[s, e]`` and the curve's interior local minima.

    Candidates are the sign changes of the first difference. Those whose
    prominence is below `min_prominence` times the curve's range are
    dropped: integer window lengths make the curve ripple by a fraction of a
    percent, which would otherwise register as valleys. ``0`` keeps every
    candidate.
    """
    x = as_series(ts).values
    if not 1 <= s < e <= x.size // 2:
        raise InvalidArgumentError(f"need 1 <= s < e <= n/2, got s={s}, e={e}, n={x.size}")
    cs, _ = _centred_cumsum(x)
    w_values = np.arange(s, e + 1)
    scores = np.empty(w_values.size)
    for k, w in enumerate(w_values):
        # The centring constant cancels in MA - mean(MA).
        ma = np.asarray((cs[w:] - cs[:-w]) / w, dtype=np.float64)
        scores[k] = _score(ma, log_epsilon)
    minima = np.flatnonzero(np.diff(np.sign(np.diff(scores))) > 0) + 1
    span = float(scores.max() - scores.min())
    if min_prominence > 0 and minima.size and span > 0:
        prom = peak_prominences(-scores, minima)[0]
        minima = minima[prom >= min_prominence * span]
    return MovingDistCurve(w_values, scores, minima)


def estimate_from_minima(minima_windows: Sequence[float]) -> tuple[float, float, np.ndarray]:
    """Window, confidence and residuals for valleys observed at `minima_windows`."""
    found = np.asarray(minima_windows, dtype=float)
    if found.size == 0:
        raise InvalidArgumentError("no minima given")
    res = found / np.arange(1, found.size + 1)
    window = float(res.mean())
    return window, 1.0 - float(res.std()) / window, res


def multi_window_finder(ts, s: int = 10, e_init: Optional[int] = None,
                        log_epsilon: float = LOG_EPSILON,
                        min_prominence: float = MIN_PROMINENCE) -> WindowEstimate:
    """Dominant window size of `ts` and a confidence in ``(-inf, 1]``.

    Sweeps ``w`` over ``[s, e]``, doubling ``e`` (up to ``n/2``) until the
    moving-dist curve shows at least three interior local minima. Raises
    :class:`NoPeriodicityError` if ``n/2`` is reached first.
    """
    x = as_series(ts).values
    n = x.size
    if n < 3 * s:
        raise InvalidArgumentError(f"series of length {n} is too short for s={s} (need n >= 3s)")
    cap = n // 2
    e = min(1000, cap) if e_init is None else min(int(e_init), cap)
    if e <= s:
        raise InvalidArgumentError(f"sweep end e={e} must exceed s={s}")
    while True:
        curve = moving_dist_curve(x, s, e, log_epsilon, min_prominence)
        if curve.local_minima.size >= MIN_MINIMA:
            break
        if e >= cap:
            raise NoPeriodicityError(
                f"found {curve.local_minima.size} local minima for w in [{s}, {e}]; "
                f"need at least {MIN_MINIMA}",
                curve,
            )
        e = min(2 * e, cap)
    window, confidence, res = estimate_from_minima(curve.w_values[curve.local_minima])
    return WindowEstimate(window, confidence, res, curve)


def _batches(n: int, batch_length: int):
    starts = list(range(0, n, batch_length))
    bounds = [(a, min(a + batch_length, n)) for a in starts]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] < batch_length / 2:
        last = bounds.pop()
        bounds[-1] = (bounds[-1][0], last[1])
    return bounds


def variable_window(ts, batch_length: int = 5000, s: int = 10,
                    min_confidence: float = 0.5) -> WindowMetaSeries:
    """Run the window finder on consecutive non-overlapping batches.

    A short tail (under half a batch) is merged into the previous batch.
    Batches where no periodicity is found, or whose confidence is below
    `min_confidence`, get ``None``; rejected estimates are kept in
    ``rejected`` keyed by batch number. ``per_point`` is NaN there.
    """
    x = as_series(ts).values
    if batch_length < 30 * s:
        raise InvalidArgumentError(f"batch_length must be >= 30*s = {30 * s}")
    bounds = _batches(x.size, batch_length)
    estimates = []
    rejected = {}
    per_point = np.full(x.size, np.nan)
    for b, (lo, hi) in enumerate(bounds):
        try:
            est = multi_window_finder(x[lo:hi], s=s)
        except (NoPeriodicityError, InvalidArgumentError) as exc:
            rejected[b] = exc
            estimates.append(None)
            continue
        if not est.confidence >= min_confidence:
            rejected[b] = est
            estimates.append(None)
            continue
        estimates.append(est)
        per_point[lo:hi] = est.window
    return WindowMetaSeries(batch_length, bounds, estimates, per_point, rejected)


def window_success_rate(pairs: Sequence[tuple[float, float]], threshold: float = 0.5) -> float:
    """Fraction of ``(ground_truth, estimate)`` pairs with relative error <= `threshold`."""
    pairs = list(pairs)
    if not pairs:
        raise InvalidArgumentError("no estimates to score")
    hits = 0
    for gt, est in pairs:
        if not gt > 0:
            raise InvalidArgumentError("ground-truth windows must be positive")
        if est is not None and math.isfinite(est) and abs(gt - est) / gt <= threshold:
            hits += 1
    return hits / len(pairs)
