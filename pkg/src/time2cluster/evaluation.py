"""Clustering quality metrics and the experiment harnesses built on them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cluster import ClusterResult, KMeansConfig, expand_labels, kmeans_pp, time2cluster
from .core import InvalidArgumentError, TimeSeries, as_series, child_seed, make_rng, znorm
from .profile import DEFAULT_MEM_CAP

# Largest cluster count for which the class/cluster matching is enumerated.
EXHAUSTIVE_MATCH_LIMIT = 8


@dataclass(frozen=True)
class LabelVector:
    labels: np.ndarray
    num_classes: int

    @classmethod
    def of(cls, labels) -> "LabelVector":
        arr = np.asarray(labels, dtype=np.int64)
        if arr.size and arr.min() < 0:
            raise InvalidArgumentError("labels must be non-negative")
        return cls(arr, int(arr.max()) + 1 if arr.size else 0)


@dataclass
class MetricsReport:
    macro_f1: float
    ari: float
    purity: float
    per_class_f1: list
    matching: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "ari": self.ari,
            "purity": self.purity,
            "per_class_f1": self.per_class_f1,
            "matching": {str(k): v for k, v in self.matching.items()},
        }


def _pair(truth, pred):
    t = np.asarray(getattr(truth, "labels", truth))
    p = np.asarray(getattr(pred, "labels", pred))
    if t.shape != p.shape or t.ndim != 1:
        raise InvalidArgumentError(f"label vectors differ in length ({t.size} vs {p.size})")
    return t, p


def contingency(truth, pred):
    """Contingency table plus the class and cluster ids labelling its axes."""
    t, p = _pair(truth, pred)
    classes, ti = np.unique(t, return_inverse=True)
    clusters, pi = np.unique(p, return_inverse=True)
    table = np.zeros((classes.size, clusters.size), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table, classes, clusters


def _f1_table(table):
    class_sizes = table.sum(axis=1, keepdims=True)
    cluster_sizes = table.sum(axis=0, keepdims=True)
    # F1 = 2 / (1/P + 1/R) = 2 n_ck / (|class| + |cluster|)
    return 2.0 * table / (class_sizes + cluster_sizes)


def _best_matching(f1):
    kt, kp = f1.shape
    if max(kt, kp) <= EXHAUSTIVE_MATCH_LIMIT:
        if kt <= kp:
            perms = np.array(list(itertools.permutations(range(kp), kt)), dtype=np.int64)
            totals = f1[np.arange(kt)[None, :], perms].sum(axis=1)
            best = perms[int(np.argmax(totals))]
            return {c: int(best[c]) for c in range(kt)}
        perms = np.array(list(itertools.permutations(range(kt), kp)), dtype=np.int64)
        totals = f1[perms, np.arange(kp)[None, :]].sum(axis=1)
        best = perms[int(np.argmax(totals))]
        return {int(best[k]): k for k in range(kp)}
    rows, cols = linear_sum_assignment(f1, maximize=True)
    return {int(r): int(c) for r, c in zip(rows, cols)}


def f1_matching(truth, pred):
    """Per-class F1 under the one-to-one class/cluster matching maximizing total F1.

    Returns ``(per_class_f1, matching)`` where `matching` maps true class ids
    to predicted cluster ids. Classes left without a cluster score 0.
    """
    table, classes, clusters = contingency(truth, pred)
    f1 = _f1_table(table)
    match = _best_matching(f1)
    per_class = [float(f1[c, match[c]]) if c in match else 0.0 for c in range(classes.size)]
    mapping = {int(classes[c]): int(clusters[k]) for c, k in match.items()}
    return per_class, mapping


def macro_f1(truth, pred) -> float:
    """Mean per-class F1 under the best one-to-one class/cluster matching."""
    per_class, _ = f1_matching(truth, pred)
    return float(np.mean(per_class))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2.0


def adjusted_rand_index(truth, pred) -> float:
    """Hubert-Arabie adjusted Rand index from the contingency table."""
    table, _, _ = contingency(truth, pred)
    n = table.sum()
    if n < 2:
        raise InvalidArgumentError("ARI needs at least two points")
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # Both partitions trivial (one block each, or all singletons).
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def purity(truth, pred) -> float:
    table, _, _ = contingency(truth, pred)
    return float(table.max(axis=0).sum() / table.sum())


def evaluate(truth, pred) -> MetricsReport:
    per_class, mapping = f1_matching(truth, pred)
    return MetricsReport(
        macro_f1=float(np.mean(per_class)),
        ari=adjusted_rand_index(truth, pred),
        purity=purity(truth, pred),
        per_class_f1=per_class,
        matching=mapping,
    )


def inject_spikes(ts, fraction: float, magnitude: float = 5.0, seed: int = 0) -> TimeSeries:
    """Replace ``floor(fraction * n)`` random points with ``mean +/- magnitude * std``."""
    ts = as_series(ts)
    if not 0.0 <= fraction <= 0.2:
        raise InvalidArgumentError(f"spike fraction must lie in [0, 0.2], got {fraction}")
    count = int(np.floor(fraction * ts.n))
    values = ts.values.copy()
    if count:
        rng = make_rng(seed)
        idx = rng.choice(ts.n, size=count, replace=False)
        signs = rng.choice(np.array([-1.0, 1.0]), size=count)
        values[idx] = ts.values.mean() + signs * magnitude * ts.values.std()
    return TimeSeries(values, name=ts.name, sample_rate_hz=ts.sample_rate_hz)


def score_timepoints(result: ClusterResult, truth, n: int, m: int) -> MetricsReport:
    """Expand subsequence labels to timepoints and score them against `truth`."""
    conf = result.confidence if result.confidence is not None else np.ones(result.labels.size)
    point_labels, _ = expand_labels(result.labels, conf, n, m)
    return evaluate(truth, point_labels)


def _kcfg(k, seed, base: Optional[KMeansConfig]):
    if base is None:
        return KMeansConfig(k, seed=seed)
    return KMeansConfig(k, base.max_iters, base.tol, base.n_restarts, seed)


def robustness_sweep(
    ts,
    truth,
    m: int,
    ks: int,
    k: int,
    fractions: Sequence[float],
    repeats: int = 50,
    seed: int = 0,
    *,
    magnitude: float = 5.0,
    cfg: Optional[KMeansConfig] = None,
    method: str = "fast",
    mem_cap: int = DEFAULT_MEM_CAP,
    threads: int = 1,
) -> list[dict]:
    """Macro-F1 under increasing spike contamination.

    Every repeat injects spikes with the child seed of ``(seed, index)`` and
    clusters with the same kmeans seed, so the zero-fraction row reproduces
    the clean run exactly.
    """
    ts = as_series(ts)
    if repeats < 1:
        raise InvalidArgumentError("repeats must be >= 1")
    kcfg = _kcfg(k, seed, cfg)
    rows = []
    clean = None
    for fi, frac in enumerate(fractions):
        scores = []
        for r in range(repeats):
            if frac == 0 and clean is not None:
                scores.append(clean)
                continue
            noisy = inject_spikes(ts, frac, magnitude, child_seed(seed, fi * repeats + r))
            res = time2cluster(noisy, m, ks, kcfg, method=method, mem_cap=mem_cap, threads=threads)
            f1 = score_timepoints(res, truth, ts.n, m).macro_f1
            scores.append(f1)
            if frac == 0:
                clean = f1
        rows.append({
            "fraction": float(frac),
            "mean_macro_f1": float(np.mean(scores)),
            "std_macro_f1": float(np.std(scores)),
            "repeats": repeats,
        })
    return rows


def sensitivity_sweep(
    ts,
    truth,
    m_values: Sequence[int],
    k: int,
    seed: int = 0,
    ks_rule: Optional[Callable[[int], int]] = None,
    *,
    cfg: Optional[KMeansConfig] = None,
    method: str = "fast",
    mem_cap: int = DEFAULT_MEM_CAP,
    threads: int = 1,
) -> list[dict]:
    """Macro-F1 and ARI of the pipeline for each window length (``ks = ks_rule(m)``, default ``m``)."""
    ts = as_series(ts)
    rule = ks_rule or (lambda m: m)
    kcfg = _kcfg(k, seed, cfg)
    rows = []
    for m in m_values:
        ks = int(rule(int(m)))
        res = time2cluster(ts, int(m), ks, kcfg, method=method, mem_cap=mem_cap, threads=threads)
        rep = score_timepoints(res, truth, ts.n, int(m))
        rows.append({"m": int(m), "ks": ks, "macro_f1": rep.macro_f1, "ari": rep.ari})
    return rows


def baseline_euclidean_kmeans(ts, m: int, k: int, cfg: Optional[KMeansConfig] = None, threads: int = 1) -> ClusterResult:
    """kmeans++ on the z-normalized raw subsequences (stride 1), no pooling."""
    ts = as_series(ts)
    if not 2 <= m <= ts.n:
        raise InvalidArgumentError(f"window length m={m} must lie in [2, n={ts.n}]")
    windows = np.lib.stride_tricks.sliding_window_view(ts.values, m)
    Z = np.array([znorm(w) for w in windows])
    return kmeans_pp(Z, _kcfg(k, cfg.seed if cfg else 0, cfg), threads=threads)
