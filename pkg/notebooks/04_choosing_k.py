"""
Choosing K and checking robustness
==================================

Inertia against K for a three-behaviour series, then the effect of window
length and spike contamination on a two-behaviour series.
"""

from time2cluster import (
    KMeansConfig, elbow_sweep, robustness_sweep, scenario, sensitivity_sweep,
)

sc = scenario("walkrunplay", seed=0)
curve = elbow_sweep(sc.series, sc.m, sc.ks, range(1, 7), KMeansConfig(1, n_restarts=5))
for k, inertia, rel in zip(curve.ks_tested[1:], curve.inertias[1:], curve.relative_drops()):
    print(f"K={k}: inertia {inertia:12.0f}  removes {100 * rel:5.1f}% of the previous")
print("largest relative drop at K =", curve.largest_relative_drop_k())

wr = scenario("walkrun", seed=0)
cfg = KMeansConfig(2, n_restarts=3)
for row in sensitivity_sweep(wr.series, wr.labels, [100, 200, 400], 2, cfg=cfg):
    print(f"m={row['m']}: macro-F1 {row['macro_f1']:.3f}, ARI {row['ari']:.3f}")

for row in robustness_sweep(wr.series, wr.labels, 200, 200, 2, [0.0, 0.01, 0.05], repeats=3, cfg=cfg):
    print(f"{100 * row['fraction']:.0f}% spikes: macro-F1 {row['mean_macro_f1']:.3f}")
