"""
Estimating the window length
============================

The moving average over a whole number of periods is almost flat, so the
log-distance curve has valleys at 1, 2, 3, ... periods. The estimate is the
mean of ``valley_k / k``.
"""

import numpy as np

from time2cluster import NoPeriodicityError, multi_window_finder, scenario, variable_window

t = np.arange(10_000)
rng = np.random.default_rng(0)
est = multi_window_finder(np.sin(2 * np.pi * t / 240) + 0.3 * rng.standard_normal(t.size))
print(f"period 240 + noise: window {est.window:.1f}, confidence {est.confidence:.3f}")
print("valleys at", est.minima_windows.tolist())

try:
    multi_window_finder(rng.standard_normal(10_000))
except NoPeriodicityError as exc:
    print("white noise:", exc)

# Behaviours with different cycle lengths: estimate per batch.
sc = scenario("walkrun", seed=0)
meta = variable_window(sc.series, batch_length=2000)
for (lo, hi), e in zip(meta.bounds, meta.estimates):
    print(f"points {lo:5d}-{hi:5d}: " + ("no estimate" if e is None else f"window {e.window:.1f}"))

# The recommended m for clustering is the detected window.
print(f"scenario period {sc.period}; first batch suggests m={round(meta.estimates[0].window)}")
