"""Acceptance criteria, one test per criterion.

Each test records a one-line verdict; the lines are printed in the
terminal summary (see ``conftest.py``) and when the module is run directly
with ``python3 tests/test_acceptance.py``.
"""

import itertools
import time
from math import comb

import numpy as np
import pytest

from time2cluster import (
    KMeansConfig,
    adjusted_rand_index,
    augment_matrix,
    baseline_euclidean_kmeans,
    corr_to_dist,
    correlation_matrix,
    dist_to_corr,
    elbow_sweep,
    expand_labels,
    macro_f1,
    multi_window_finder,
    robustness_sweep,
    scenario,
    sensitivity_sweep,
    time2cluster,
    variable_window,
    window_success_rate,
)
from time2cluster.cli import main as cli_main
from time2cluster.cluster import _augmented
from time2cluster.evaluation import score_timepoints
from time2cluster.synthgen import SegmentSpec, generate

RESULTS = {}
SEEDS = range(10)
# Restart histories from every clustering run below, checked by criterion 11.
HISTORIES = []


def record(key, ok, detail, hard=True):
    RESULTS[key] = (bool(ok), detail, hard)
    return ok


def report_lines():
    lines = []
    for key in sorted(RESULTS, key=lambda k: int(k.split()[0].lstrip("C"))):
        ok, detail, hard = RESULTS[key]
        tag = "PASS" if ok else ("FAIL" if hard else "WARN")
        lines.append(f"[{tag}] {key}: {detail}")
    return lines


def _track(result):
    HISTORIES.extend(result.diagnostics.get("restart_histories", []))
    return result


# ---------------------------------------------------------------- oracles

def naive_corr(x, m):
    w = np.lib.stride_tricks.sliding_window_view(x, m)
    mu = w.mean(axis=1, keepdims=True)
    sd = w.std(axis=1, keepdims=True)
    z = (w - mu) / sd
    return z @ z.T / m


def block_max_oracle(M, ks):
    N = M.shape[0]
    out = np.empty_like(M)
    for i in range(N):
        for j in range(N):
            best = -np.inf
            for a in range(i, min(i + ks, N)):
                for b in range(j, min(j + ks, N)):
                    best = max(best, M[a, b])
            out[i, j] = best
    return out


def brute_macro_f1(truth, pred):
    classes = sorted(set(truth.tolist()))
    clusters = sorted(set(pred.tolist()))

    def f1(c, k):
        tp = np.sum((truth == c) & (pred == k))
        if tp == 0:
            return 0.0
        return 2 * tp / (np.sum(truth == c) + np.sum(pred == k))

    best = 0.0
    if len(classes) <= len(clusters):
        for perm in itertools.permutations(clusters, len(classes)):
            best = max(best, sum(f1(c, k) for c, k in zip(classes, perm)))
    else:
        for perm in itertools.permutations(classes, len(clusters)):
            best = max(best, sum(f1(c, k) for c, k in zip(perm, clusters)))
    return best / len(classes)


# ---------------------------------------------------------------- criteria

def test_c01_distance_profile_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for s in range(50):
        n = int(rng.integers(70, 513))
        m = int(rng.integers(4, 65))
        x = np.cumsum(np.random.default_rng(s).standard_normal(n))
        fast = corr_to_dist(correlation_matrix(x, m).entries, m)
        ref = corr_to_dist(np.clip(naive_corr(x, m), -1, 1), m)
        worst = max(worst, float(np.abs(fast - ref).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 30
    record("C1 distance-profile oracle", ok, f"max |err| {worst:.2e} (<= 1e-6), {elapsed:.1f}s (< 30s)")
    assert ok


def test_c02_pooling_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    mismatches = 0
    cases = 0
    for N in range(1, 13):
        for _ in range(3):
            R = rng.uniform(-1, 1, (N, N))
            M = (R + R.T) / 2
            np.fill_diagonal(M, 1.0)
            for ks in (1, 2, 3, 5):
                cases += 1
                if not np.array_equal(augment_matrix(M, ks).entries, block_max_oracle(M, ks)):
                    mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 5
    record("C2 pooling oracle", ok, f"{mismatches}/{cases} mismatches (exact), {elapsed:.2f}s (< 5s)")
    assert ok


def test_c03_identities():
    rho = np.linspace(-1, 1, 10_000)
    worst = 0.0
    bounds_ok = True
    for m in (2, 10, 100):
        worst = max(worst, float(np.abs(dist_to_corr(corr_to_dist(rho, m), m) - rho).max()))
        bounds_ok &= abs(corr_to_dist(1.0, m)) <= 1e-12
        bounds_ok &= abs(corr_to_dist(-1.0, m) - np.sqrt(4 * m)) <= 1e-12
    ok = worst <= 1e-9 and bounds_ok
    record("C3 corr/dist identities", ok,
           f"round-trip max err {worst:.1e} (<= 1e-9); bounds 0 and sqrt(4m) {'hold' if bounds_ok else 'FAIL'}")
    assert ok


def test_c04_phase_shift_separation():
    t0 = time.perf_counter()
    rows = []
    for seed in SEEDS:
        sc = scenario("walkrun", seed=seed)
        res = _track(time2cluster(sc.series, sc.m, sc.ks, KMeansConfig(sc.k, seed=seed)))
        rep = score_timepoints(res, sc.labels, sc.series.n, sc.m)
        base = baseline_euclidean_kmeans(sc.series, sc.m, sc.k, KMeansConfig(sc.k, seed=seed))
        HISTORIES.extend(base.diagnostics.get("restart_histories", []))
        ones = np.ones(base.labels.size)
        base_labels, _ = expand_labels(base.labels, ones, sc.series.n, sc.m)
        base_ari = adjusted_rand_index(sc.labels, base_labels)
        rows.append((seed, rep.ari, rep.macro_f1, base_ari))
    elapsed = time.perf_counter() - t0
    passed = [r for r in rows if r[1] >= 0.8 and r[2] >= 0.9 and r[3] <= 0.3]
    ok = len(passed) == len(rows) and elapsed < 300
    arr = np.array(rows)
    record("C4 phase-shift separation", ok,
           f"{len(passed)}/10 seeds; min ARI {arr[:, 1].min():.3f} (>= 0.8), min F1 {arr[:, 2].min():.3f} "
           f"(>= 0.9), max baseline ARI {arr[:, 3].max():.3f} (<= 0.3), {elapsed:.0f}s (< 300s)")
    assert ok


def test_c05_three_classes_and_elbow():
    f1s = []
    elbows = []
    abs_elbows = []
    for seed in SEEDS:
        sc = scenario("walkrunplay", seed=seed)
        A = _augmented(sc.series, sc.m, sc.ks, "fast", 2 << 30, 1, {})
        res = _track(time2cluster(sc.series, sc.m, sc.ks, KMeansConfig(3, seed=seed), augmented=A))
        f1s.append(score_timepoints(res, sc.labels, sc.series.n, sc.m).macro_f1)
        curve = elbow_sweep(sc.series, sc.m, sc.ks, range(1, 7), KMeansConfig(1, seed=seed), augmented=A)
        elbows.append(curve.largest_relative_drop_k())
        abs_elbows.append(curve.largest_drop_k())
    hits = sum(k == 3 for k in elbows)
    f1_ok = min(f1s) >= 0.85
    ok = f1_ok and hits >= 8
    record("C5 three classes + elbow", ok,
           f"min F1 {min(f1s):.3f} (>= 0.85) over 10 seeds; elbow (largest relative drop) at K=3 in "
           f"{hits}/10 (>= 8); absolute-drop reading gives K=3 in {sum(k == 3 for k in abs_elbows)}/10")
    assert ok


def test_c06_confidence_noise_tail():
    gaps = []
    in_range = True
    for seed in SEEDS:
        sc = scenario("noisetail", seed=seed)
        res = _track(time2cluster(sc.series, sc.m, sc.ks, KMeansConfig(sc.k, seed=seed)))
        conf = res.confidence
        in_range &= bool(conf.min() >= 0 and conf.max() <= 1)
        _, point_conf = expand_labels(res.labels, conf, sc.series.n, sc.m)
        noise = sc.labels == 2
        gaps.append(point_conf[~noise].mean() - point_conf[noise].mean())
    ok = in_range and min(gaps) >= 0.2
    record("C6 confidence on noise tail", ok,
           f"min structured-minus-noise gap {min(gaps):.3f} (>= 0.2) over 10 seeds; "
           f"all confidences in [0,1]: {in_range}")
    assert ok


def test_c07_window_sensitivity():
    sc = scenario("walkrun", seed=0)
    p = sc.period
    m_values = [int(round(f * p)) for f in np.linspace(0.5, 2.0, 7)]
    rows = sensitivity_sweep(sc.series, sc.labels, m_values, sc.k, seed=0)
    f1 = [r["macro_f1"] for r in rows]
    spread = max(f1) - min(f1)
    ok = spread <= 0.15
    record("C7 window sensitivity", ok,
           f"macro-F1 range {spread:.3f} (<= 0.15) over m={m_values}; F1s " + ", ".join(f"{v:.3f}" for v in f1))
    assert ok


def test_c08_spike_robustness():
    t0 = time.perf_counter()
    sc = scenario("walkrun", seed=0)
    rows = robustness_sweep(sc.series, sc.labels, sc.m, sc.ks, sc.k, [0.0, 0.01], repeats=50, seed=0)
    again = robustness_sweep(sc.series, sc.labels, sc.m, sc.ks, sc.k, [0.01], repeats=3, seed=0)
    first3 = robustness_sweep(sc.series, sc.labels, sc.m, sc.ks, sc.k, [0.01], repeats=3, seed=0)
    elapsed = time.perf_counter() - t0
    clean, spiked = rows[0]["mean_macro_f1"], rows[1]["mean_macro_f1"]
    deterministic = again == first3
    ok = abs(clean - spiked) <= 0.05 and deterministic and elapsed < 600
    record("C8 spike robustness", ok,
           f"clean F1 {clean:.3f}, 1% spikes {spiked:.3f} +/- {rows[1]['std_macro_f1']:.3f} "
           f"(|diff| {abs(clean - spiked):.3f} <= 0.05, 50 repeats), deterministic: {deterministic}, "
           f"{elapsed:.0f}s (< 600s)")
    assert ok


def test_c09_window_finder():
    t = np.arange(10_000)
    est = multi_window_finder(np.sin(2 * np.pi * t / 240))
    a_ok = 216 <= est.window <= 264 and est.confidence >= 0.9

    b_ok = True
    for period in (40, 97, 240):
        mins = multi_window_finder(np.sin(2 * np.pi * t / period)).minima_windows
        b_ok &= mins.size >= 3 and all(
            abs(w - (i + 1) * mins[0]) <= 0.1 * (i + 1) * mins[0] for i, w in enumerate(mins))

    rng = np.random.default_rng(9)
    x = np.concatenate([np.sin(2 * np.pi * np.arange(5000) / 50),
                        np.sin(2 * np.pi * np.arange(5000) / 20)]) + 0.1 * rng.standard_normal(10_000)
    meta = variable_window(x, batch_length=5000)
    w = [e.window if e is not None else np.nan for e in meta.estimates]
    c_ok = len(w) == 2 and abs(w[0] - 50) <= 10 and abs(w[1] - 20) <= 4

    prng = np.random.default_rng(7)
    pairs = []
    for i in range(20):
        period = int(prng.integers(20, 400))
        ts, _ = generate([SegmentSpec("sinusoid", 10_000, period=period, phase_jitter=0.3,
                                      noise_std=0.2)], seed=i)
        try:
            pairs.append((period, multi_window_finder(ts).window))
        except ValueError:
            pairs.append((period, None))
    rate = window_success_rate(pairs)
    d_ok = rate >= 0.9
    ok = a_ok and b_ok and c_ok and d_ok
    record("C9 window finder", ok,
           f"(a) window {est.window:.1f}, confidence {est.confidence:.3f}; (b) harmonic minima {b_ok}; "
           f"(c) batches {w[0]:.1f} / {w[1]:.1f}; (d) success rate {rate:.2f} (>= 0.9)")
    assert ok


def test_c10_metrics():
    rng = np.random.default_rng(1010)
    f1_err = 0.0
    for _ in range(200):
        n = int(rng.integers(5, 40))
        truth = rng.integers(0, int(rng.integers(1, 6)), n)
        pred = rng.integers(0, int(rng.integers(1, 6)), n)
        f1_err = max(f1_err, abs(macro_f1(truth, pred) - brute_macro_f1(truth, pred)))
    perm_ok = True
    for _ in range(20):
        truth = rng.integers(0, 4, 60)
        perm = rng.permutation(4)
        perm_ok &= abs(adjusted_rand_index(truth, perm[truth]) - 1.0) <= 1e-12
    truth = np.repeat(np.arange(4), 50)
    shuffles = [adjusted_rand_index(truth, np.random.default_rng(s).permutation(truth)) for s in range(1000)]
    mean_ari = float(np.mean(shuffles))
    ok = f1_err <= 1e-12 and perm_ok and abs(mean_ari) <= 0.05
    record("C10 metric correctness", ok,
           f"macro-F1 vs brute force max err {f1_err:.1e} (200 pairs); ARI=1 under relabeling: {perm_ok}; "
           f"mean shuffled ARI {mean_ari:+.4f} (|.| <= 0.05)")
    assert ok


def test_c11_kmeans_invariants(tmp_path):
    sc = scenario("walkrun", seed=0)
    runs = len(HISTORIES)
    if not HISTORIES:
        _track(time2cluster(sc.series, sc.m, sc.ks, KMeansConfig(sc.k)))
    bad = sum(
        any(b > a * (1 + 1e-9) + 1e-9 for a, b in zip(h, h[1:])) for h in HISTORIES
    )
    src = tmp_path / "walkrun.csv"
    assert cli_main(["synth", "walkrun", "--out", str(src), "--seed", "3"]) == 0
    outputs = []
    for i, threads in enumerate(("1", "1", "4")):
        out = tmp_path / f"run{i}"
        assert cli_main(["cluster", "--input", str(src), "-m", "200", "-k", "2", "--seed", "3",
                         "--threads", threads, "--out", str(out)]) == 0
        outputs.append((out / "labels.csv").read_bytes())
    identical = outputs[0] == outputs[1] == outputs[2]
    ok = bad == 0 and identical
    record("C11 kmeans invariants", ok,
           f"{bad} non-monotone restart histories out of {len(HISTORIES)} "
           f"(from {'earlier acceptance runs' if runs else 'a fresh run'}); "
           f"labels.csv byte-identical across reruns and threads 1/4: {identical}")
    assert ok


def test_c12_quadratic_growth():
    times = {}
    for n in (2000, 4000, 8000):
        x = np.cumsum(np.random.default_rng(n).standard_normal(n))
        best = np.inf
        for _ in range(2):
            t0 = time.perf_counter()
            correlation_matrix(x, 100)
            best = min(best, time.perf_counter() - t0)
        times[n] = best
    ratios = [times[4000] / times[2000], times[8000] / times[4000]]
    ok = max(ratios) <= 5.5
    record("C12 quadratic growth", ok,
           "times " + ", ".join(f"n={n}: {t:.3f}s" for n, t in times.items())
           + f"; doubling ratios {ratios[0]:.2f}, {ratios[1]:.2f} (<= 5.5); reported only",
           hard=False)
    if not ok:
        pytest.skip("timing ratio above 5.5 on this machine; reported, not enforced")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
