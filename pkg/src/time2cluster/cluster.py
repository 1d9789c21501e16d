"""kmeans++ on augmented-matrix rows, the end-to-end pipeline and confidence scores."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .augment import AugmentedCorrelationMatrix, augment_matrix
from .core import InvalidArgumentError, as_series, child_seed, make_rng
from .profile import DEFAULT_MEM_CAP, correlation_matrix

# Relative slack when checking that a Lloyd step did not raise the inertia.
_MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iters: int = 300
    tol: float = 1e-6
    n_restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgumentError("k must be >= 1")
        if self.max_iters < 1 or self.n_restarts < 1:
            raise InvalidArgumentError("max_iters and n_restarts must be positive")
        if self.tol < 0:
            raise InvalidArgumentError("tol must be non-negative")


@dataclass
class ClusterResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    iterations_run: int
    confidence: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)
    augmented: Optional[AugmentedCorrelationMatrix] = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.centers.shape[0]


@dataclass
class ElbowCurve:
    ks_tested: list
    inertias: list
    diagnostics: dict = field(default_factory=dict)

    def drops(self) -> np.ndarray:
        """``inertia(K_prev) - inertia(K)`` for each tested K after the first."""
        return -np.diff(np.asarray(self.inertias, dtype=float))

    def largest_drop_k(self) -> int:
        """K reached by the largest single decrease in inertia."""
        return int(self.ks_tested[1 + int(np.argmax(self.drops()))])

    def relative_drops(self) -> np.ndarray:
        """Fraction of the previous inertia removed at each tested K after the first."""
        inert = np.asarray(self.inertias, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = (inert[:-1] - inert[1:]) / inert[:-1]
        return np.nan_to_num(frac, nan=0.0)

    def largest_relative_drop_k(self) -> int:
        """K at which the inertia falls by the largest fraction of its previous value."""
        return int(self.ks_tested[1 + int(np.argmax(self.relative_drops()))])

    def sharpest_bend_k(self) -> int:
        """K where the decrease before it most exceeds the decrease after it."""
        d = self.drops()
        if d.size < 2:
            raise InvalidArgumentError("need at least three K values to locate a bend")
        bend = d[:-1] - d[1:]
        return int(self.ks_tested[1 + int(np.argmax(bend))])


def _sq_dists(X, x_sq, C):
    d = x_sq[:, None] - 2.0 * (X @ C.T) + np.einsum("ij,ij->i", C, C)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _seed_centers(X, x_sq, k, rngs):
    """kmeans++ starts for every restart at once; returns ``(R, k, d)``."""
    n = X.shape[0]
    R = len(rngs)
    idx = np.empty((R, k), dtype=np.int64)
    idx[:, 0] = [int(rng.integers(n)) for rng in rngs]
    closest = _sq_dists(X, x_sq, X[idx[:, 0]])
    for s in range(1, k):
        for r, rng in enumerate(rngs):
            total = closest[:, r].sum()
            if total > 0:
                idx[r, s] = int(rng.choice(n, p=closest[:, r] / total))
            else:
                idx[r, s] = int(rng.integers(n))
        np.minimum(closest, _sq_dists(X, x_sq, X[idx[:, s]]), out=closest)
    return X[idx]


def _assign(X, x_sq, centers):
    R, k, dim = centers.shape
    d = _sq_dists(X, x_sq, centers.reshape(R * k, dim)).reshape(X.shape[0], R, k)
    labels = d.argmin(axis=2)
    own = np.take_along_axis(d, labels[:, :, None], axis=2)[:, :, 0]
    return labels, own


def _lloyd(X, x_sq, cfg: KMeansConfig):
    """Lloyd iterations for all restarts in lockstep.

    Restarts share each pass over `X`; a restart stops updating once its
    relative inertia change drops below ``cfg.tol``.
    """
    n = X.shape[0]
    k, R = cfg.k, cfg.n_restarts
    rngs = [make_rng(child_seed(cfg.seed, r)) for r in range(R)]
    centers = _seed_centers(X, x_sq, k, rngs)
    labels, own = _assign(X, x_sq, centers)
    history = [[float(own[:, r].sum())] for r in range(R)]
    iters = np.zeros(R, dtype=np.int64)
    empty_events = 0
    active = np.arange(R)
    cols = np.arange(n)
    for _ in range(cfg.max_iters):
        if active.size == 0:
            break
        onehot = np.zeros((active.size * k, n))
        for a, r in enumerate(active):
            onehot[a * k + labels[:, r], cols] = 1.0
        sums = (onehot @ X).reshape(active.size, k, -1)
        counts = onehot.sum(axis=1).reshape(active.size, k)
        for a, r in enumerate(active):
            nonempty = counts[a] > 0
            centers[r, nonempty] = sums[a, nonempty] / counts[a, nonempty, None]
            if not nonempty.all():
                # Move each empty center onto the worst-served point.
                order = np.argsort(-own[:, r], kind="stable")
                for c, p in zip(np.flatnonzero(~nonempty), order):
                    centers[r, c] = X[p]
                    empty_events += 1
        new_labels, new_own = _assign(X, x_sq, centers[active])
        still = []
        for a, r in enumerate(active):
            labels[:, r] = new_labels[:, a]
            own[:, r] = new_own[:, a]
            new = float(new_own[:, a].sum())
            prev = history[r][-1]
            assert new <= prev * (1 + _MONOTONE_SLACK) + 1e-12, (
                f"Lloyd step raised inertia from {prev!r} to {new!r}"
            )
            history[r].append(new)
            iters[r] += 1
            if prev - new > cfg.tol * prev:
                still.append(r)
        active = np.array(still, dtype=np.int64)
    return labels, centers, history, iters, empty_events


def _exact_inertia(X, labels, centers):
    total = 0.0
    for c in range(centers.shape[0]):
        members = X[labels == c]
        if members.size:
            total += float(((members - centers[c]) ** 2).sum())
    return total


def kmeans_pp(points, cfg: KMeansConfig, threads: int = 1) -> ClusterResult:
    """Lloyd's algorithm from kmeans++ (D^2-sampled) starts, best of ``cfg.n_restarts``.

    Restart ``r`` draws from an RNG seeded with ``child_seed(cfg.seed, r)``.
    All restarts advance together so each pass over `points` serves every
    restart; `threads` is accepted for interface symmetry and does not change
    the result. The winner is the restart with the lowest inertia, ties going
    to the lower ordinal. Cluster ids are renumbered in order of first
    appearance.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidArgumentError("points must be a non-empty 2-D array")
    if cfg.k > X.shape[0]:
        raise InvalidArgumentError(f"k={cfg.k} exceeds the number of points ({X.shape[0]})")
    x_sq = np.einsum("ij,ij->i", X, X)
    all_labels, all_centers, history, iters, empty_events = _lloyd(X, x_sq, cfg)
    final = [h[-1] for h in history]
    best = min(range(cfg.n_restarts), key=lambda r: (final[r], r))
    labels = all_labels[:, best]
    centers = all_centers[best]

    _, first = np.unique(labels, return_index=True)
    present = labels[np.sort(first)]
    order = np.concatenate([present, np.setdiff1d(np.arange(cfg.k), present)])
    remap = np.empty(cfg.k, dtype=np.int64)
    remap[order] = np.arange(cfg.k)
    labels = remap[labels]
    centers = centers[order]

    counts = np.bincount(labels, minlength=cfg.k)
    diagnostics = {
        "restart_inertias": final,
        "restart_histories": history,
        "best_restart": best,
        "empty_cluster_repairs": empty_events,
        "empty_clusters": np.flatnonzero(counts == 0).tolist(),
    }
    return ClusterResult(
        labels=labels,
        centers=centers,
        inertia=_exact_inertia(X, labels, centers),
        iterations_run=int(iters[best]),
        diagnostics=diagnostics,
    )


def confidence_score(A, labels, radius: int, exclusion: int = 0) -> np.ndarray:
    """Per-index support from same-label neighbours.

    ``conf[i]`` is the mean over neighbours ``j`` (``exclusion < |i - j| <=
    radius``, clipped to the valid range) of ``max(0, A[i, j])`` when
    ``labels[j] == labels[i]`` and 0 otherwise. Indices whose neighbourhood
    is empty after the exclusion fall back to ``exclusion=0``.
    """
    E = A.entries if isinstance(A, AugmentedCorrelationMatrix) else np.asarray(A, dtype=float)
    labels = np.asarray(labels)
    N = E.shape[0]
    if labels.shape != (N,):
        raise InvalidArgumentError(f"labels length {labels.size} does not match matrix size {N}")
    if radius < 1:
        raise InvalidArgumentError("radius must be >= 1")
    if exclusion < 0:
        raise InvalidArgumentError("exclusion must be >= 0")

    def accumulate(lo):
        total = np.zeros(N)
        count = np.zeros(N)
        for d in range(lo + 1, min(radius, N - 1) + 1):
            vals = np.maximum(np.diagonal(E, d), 0.0)
            same = labels[:-d] == labels[d:]
            contrib = np.where(same, vals, 0.0)
            total[:-d] += contrib
            count[:-d] += 1
            vals = np.maximum(np.diagonal(E, -d), 0.0)
            contrib = np.where(same, vals, 0.0)
            total[d:] += contrib
            count[d:] += 1
        return total, count

    total, count = accumulate(exclusion)
    conf = np.zeros(N)
    ok = count > 0
    conf[ok] = total[ok] / count[ok]
    if exclusion > 0 and not ok.all():
        t0, c0 = accumulate(0)
        fill = ~ok & (c0 > 0)
        conf[fill] = t0[fill] / c0[fill]
    return np.clip(conf, 0.0, 1.0)


def default_confidence_neighbourhood(m: int, ks: int) -> tuple[int, int]:
    """(radius, exclusion) used by :func:`time2cluster`.

    BAGs ``i`` and ``j`` share raw samples whenever ``|i - j| <= ks + m - 2``,
    which pins their pooled correlation at 1 whatever the data. Those
    neighbours are skipped and the next ``ks`` on each side are scored.
    """
    exclusion = ks + m - 2
    return exclusion + ks, exclusion


def expand_labels(labels, confidence, n: int, m: int):
    """Map per-subsequence labels to per-timepoint labels.

    Each timepoint takes the label with the largest summed confidence among
    the subsequences covering it (ties to the lower id); its confidence is
    the mean confidence of those covering subsequences carrying that label.
    """
    labels = np.asarray(labels, dtype=np.int64)
    conf = np.asarray(confidence, dtype=np.float64)
    N = n - m + 1
    if labels.shape != (N,) or conf.shape != (N,):
        raise InvalidArgumentError(f"expected {N} subsequence labels for n={n}, m={m}")
    k = int(labels.max()) + 1
    t = np.arange(n)
    hi = np.minimum(t, N - 1) + 1
    lo = np.maximum(t - m + 1, 0)
    sums = np.empty((k, n))
    counts = np.empty((k, n))
    for c in range(k):
        mask = labels == c
        cs = np.concatenate([[0.0], np.cumsum(np.where(mask, conf, 0.0))])
        cc = np.concatenate([[0], np.cumsum(mask)])
        sums[c] = cs[hi] - cs[lo]
        counts[c] = cc[hi] - cc[lo]
    score = np.where(counts > 0, sums, -np.inf)
    point_labels = score.argmax(axis=0)
    won_sum = sums[point_labels, t]
    won_count = counts[point_labels, t]
    point_conf = np.clip(won_sum / won_count, 0.0, 1.0)
    return point_labels, point_conf


def _augmented(ts, m, ks, method, mem_cap, threads, timings):
    t0 = time.perf_counter()
    M = correlation_matrix(ts, m, method=method, mem_cap=mem_cap, threads=threads)
    t1 = time.perf_counter()
    A = augment_matrix(M, ks)
    t2 = time.perf_counter()
    del M
    timings["correlation_matrix_s"] = t1 - t0
    timings["augment_s"] = t2 - t1
    return A


def time2cluster(
    ts,
    m: int,
    ks: int,
    cfg: KMeansConfig,
    *,
    method: str = "fast",
    mem_cap: int = DEFAULT_MEM_CAP,
    threads: int = 1,
    confidence_radius: Optional[int] = None,
    confidence_exclusion: Optional[int] = None,
    augmented: Optional[AugmentedCorrelationMatrix] = None,
) -> ClusterResult:
    """Cluster every subsequence of `ts` and score each label.

    Builds the correlation matrix, max-pools it with kernel `ks`, runs
    kmeans++ on the rows of the pooled matrix and attaches confidence scores.
    Labels are per subsequence (length ``n - m + 1``); use
    :func:`expand_labels` for per-timepoint labels.

    A precomputed `augmented` matrix for the same ``(ts, m, ks)`` skips the
    first two stages.
    """
    ts = as_series(ts)
    timings = {}
    if augmented is None:
        A = _augmented(ts, m, ks, method, mem_cap, threads, timings)
    else:
        A = augmented
        if A.size != ts.n - m + 1:
            raise InvalidArgumentError("augmented matrix does not match the series and m")
    t0 = time.perf_counter()
    result = kmeans_pp(A.entries, cfg, threads=threads)
    t1 = time.perf_counter()
    radius, exclusion = default_confidence_neighbourhood(m, ks)
    if confidence_radius is not None:
        radius = confidence_radius
    if confidence_exclusion is not None:
        exclusion = confidence_exclusion
    radius = max(radius, exclusion + 1)
    result.confidence = confidence_score(A, result.labels, radius, exclusion)
    t2 = time.perf_counter()
    timings["kmeans_s"] = t1 - t0
    timings["confidence_s"] = t2 - t1
    result.diagnostics["timings"] = timings
    result.diagnostics["confidence_radius"] = radius
    result.diagnostics["confidence_exclusion"] = exclusion
    result.augmented = A
    return result


def elbow_sweep(
    ts,
    m: int,
    ks: int,
    k_range: Sequence[int],
    cfg: KMeansConfig,
    *,
    method: str = "fast",
    mem_cap: int = DEFAULT_MEM_CAP,
    threads: int = 1,
    augmented: Optional[AugmentedCorrelationMatrix] = None,
) -> ElbowCurve:
    """Inertia of the clustering for each K in `k_range`, sharing one augmented matrix.

    Picking the knee is left to the caller. :class:`ElbowCurve` offers three
    readings: largest absolute drop, largest relative drop, sharpest bend.
    """
    ts = as_series(ts)
    ks_tested = [int(k) for k in k_range]
    if not ks_tested:
        raise InvalidArgumentError("k_range is empty")
    A = augmented if augmented is not None else _augmented(ts, m, ks, method, mem_cap, threads, {})
    if max(ks_tested) > A.size:
        raise InvalidArgumentError(f"K={max(ks_tested)} exceeds the {A.size} subsequences")
    inertias = []
    for k in ks_tested:
        sub = KMeansConfig(k, cfg.max_iters, cfg.tol, cfg.n_restarts, cfg.seed)
        inertias.append(kmeans_pp(A.entries, sub, threads=threads).inertia)
    violations = [
        ks_tested[i + 1]
        for i in range(len(ks_tested) - 1)
        if ks_tested[i + 1] > ks_tested[i] and inertias[i + 1] > inertias[i] * (1 + 1e-9)
    ]
    return ElbowCurve(ks_tested, inertias, {"non_monotone_at": violations})
