"""
Confidence drops where the series stops repeating
=================================================

White noise appended to structured data still gets a cluster label, but its
confidence is low because nearby windows barely resemble each other.
"""

import numpy as np

from time2cluster import KMeansConfig, expand_labels, scenario, time2cluster

sc = scenario("noisetail", seed=1)
res = time2cluster(sc.series, sc.m, sc.ks, KMeansConfig(sc.k, seed=1))
_, conf = expand_labels(res.labels, res.confidence, sc.series.n, sc.m)

for label, name in [(0, "slow cycle"), (1, "fast cycle"), (2, "white noise")]:
    sel = sc.labels == label
    print(f"{name:12s} mean confidence {conf[sel].mean():.3f}  (10th pct {np.percentile(conf[sel], 10):.3f})")

# A crude segmentation: flag stretches whose confidence stays below 0.5.
low = conf < 0.5
edges = np.flatnonzero(np.diff(low.astype(int))) + 1
print("low-confidence run boundaries:", edges.tolist(), "| noise starts at", int(np.argmax(sc.labels == 2)))
