import itertools
from math import comb

import numpy as np
import pytest

from time2cluster import (
    InvalidArgumentError,
    KMeansConfig,
    LabelVector,
    SegmentSpec,
    TimeSeries,
    adjusted_rand_index,
    baseline_euclidean_kmeans,
    evaluate,
    generate,
    inject_spikes,
    macro_f1,
    purity,
    robustness_sweep,
    sensitivity_sweep,
)
from time2cluster.evaluation import score_timepoints


def brute_macro_f1(truth, pred):
    """Enumerate every injective class -> cluster map; unmatched classes score 0."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    classes = sorted(set(truth.tolist()))
    clusters = sorted(set(pred.tolist()))

    def f1(c, k):
        tp = np.sum((truth == c) & (pred == k))
        if tp == 0:
            return 0.0
        p = tp / np.sum(pred == k)
        r = tp / np.sum(truth == c)
        return 2 / (1 / p + 1 / r)

    best = 0.0
    slots = clusters + [None] * len(classes)
    for assign in itertools.permutations(slots, len(classes)):
        used = [a for a in assign if a is not None]
        if len(used) != len(set(used)):
            continue
        total = sum(f1(c, a) for c, a in zip(classes, assign) if a is not None)
        best = max(best, total)
    return best / len(classes)


def brute_ari(truth, pred):
    """Pair-counting definition straight from the contingency table."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    n = truth.size
    cells = {}
    for t, p in zip(truth, pred):
        cells[(t, p)] = cells.get((t, p), 0) + 1
    index = sum(comb(v, 2) for v in cells.values())
    a = sum(comb(int(np.sum(truth == t)), 2) for t in set(truth.tolist()))
    b = sum(comb(int(np.sum(pred == p)), 2) for p in set(pred.tolist()))
    expected = a * b / comb(n, 2)
    return (index - expected) / ((a + b) / 2 - expected)


class TestMacroF1:
    def test_identity_and_swap(self):
        t = [0, 0, 1, 1, 2]
        assert macro_f1(t, t) == 1.0
        assert macro_f1(t, [2, 2, 0, 0, 1]) == 1.0

    def test_worked_example(self):
        # class 0: P=1, R=1/2 -> 2/3; class 1: P=2/3, R=1 -> 4/5
        assert macro_f1([0, 0, 1, 1], [0, 1, 1, 1]) == pytest.approx((2 / 3 + 0.8) / 2, abs=1e-12)

    def test_unmatched_class_scores_zero(self):
        rep = evaluate([0, 0, 1, 1, 2, 2], [0, 0, 0, 0, 1, 1])
        assert sorted(rep.per_class_f1) == pytest.approx([0.0, 2 / 3, 1.0])
        assert rep.macro_f1 == pytest.approx(np.mean(rep.per_class_f1), abs=1e-9)

    def test_against_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            kt, kp = rng.integers(1, 5, size=2)
            n = int(rng.integers(5, 40))
            t = rng.integers(0, kt, n)
            p = rng.integers(0, kp, n)
            assert macro_f1(t, p) == pytest.approx(brute_macro_f1(t, p), abs=1e-12)

    def test_large_k_uses_assignment(self):
        rng = np.random.default_rng(1)
        t = rng.integers(0, 12, 300)
        perm = rng.permutation(12)
        assert macro_f1(t, perm[t]) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            macro_f1([0, 1], [0])


class TestARI:
    def test_identity_and_permutation(self):
        t = np.array([0, 0, 1, 1, 2, 2, 2])
        assert adjusted_rand_index(t, t) == 1.0
        assert adjusted_rand_index(t, np.array([5, 3, 1])[t]) == 1.0

    def test_worked_example(self):
        # contingency [[2,0],[1,1]]: index 1, a=2, b=3, expected 1, max 2.5 -> 0
        assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(0.0, abs=1e-12)
        assert brute_ari([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_against_pair_counting(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            t = rng.integers(0, 4, 30)
            p = rng.integers(0, 3, 30)
            assert adjusted_rand_index(t, p) == pytest.approx(brute_ari(t, p), abs=1e-12)

    def test_chance_level(self):
        rng = np.random.default_rng(3)
        t = np.repeat([0, 1, 2], 100)
        vals = [adjusted_rand_index(t, rng.permutation(t)) for _ in range(300)]
        assert abs(np.mean(vals)) < 0.05

    def test_trivial_partitions(self):
        assert adjusted_rand_index([0, 0, 0], [1, 1, 1]) == 1.0
        with pytest.raises(InvalidArgumentError):
            adjusted_rand_index([0], [0])


class TestPurity:
    def test_examples(self):
        assert purity([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
        assert purity([0, 0, 1, 1], [0, 1, 2, 3]) == 1.0
        assert purity([0, 0, 1, 1], [0, 0, 0, 0]) == 0.5
        with pytest.raises(InvalidArgumentError):
            purity([0], [0, 1])


def test_label_vector():
    lv = LabelVector.of([0, 2, 1])
    assert lv.num_classes == 3
    with pytest.raises(InvalidArgumentError):
        LabelVector.of([-1, 0])
    assert macro_f1(lv, LabelVector.of([0, 2, 1])) == 1.0


class TestSpikes:
    def test_zero_fraction(self):
        ts = TimeSeries(np.arange(100.0))
        np.testing.assert_array_equal(inject_spikes(ts, 0.0, seed=1).values, ts.values)

    def test_count_and_values(self):
        x = np.sin(np.arange(10000) / 7.0)
        ts = TimeSeries(x)
        out = inject_spikes(ts, 0.01, magnitude=5, seed=4).values
        changed = np.flatnonzero(out != x)
        assert changed.size == 100
        np.testing.assert_allclose(np.abs(out[changed] - x.mean()), 5 * x.std())

    def test_deterministic(self):
        ts = TimeSeries(np.random.default_rng(0).standard_normal(500))
        a = inject_spikes(ts, 0.05, seed=9).values
        b = inject_spikes(ts, 0.05, seed=9).values
        np.testing.assert_array_equal(a, b)

    def test_range(self):
        with pytest.raises(InvalidArgumentError):
            inject_spikes(np.zeros(10), 0.3)


def _small_two_behaviour(seed=0):
    segs = [
        SegmentSpec("sinusoid", 900, period=40, phase_jitter=0.4, noise_std=0.1, label=0),
        SegmentSpec("sinusoid", 900, period=18, phase_jitter=0.4, noise_std=0.1, label=1),
    ]
    return generate(segs, seed=seed)


class TestSweeps:
    def test_robustness_zero_row_is_clean_run(self):
        from time2cluster import time2cluster

        ts, truth = _small_two_behaviour()
        cfg = KMeansConfig(2, n_restarts=3)
        rows = robustness_sweep(ts, truth, 40, 40, 2, [0.0, 0.01], repeats=3, seed=5, cfg=cfg)
        clean = score_timepoints(time2cluster(ts, 40, 40, KMeansConfig(2, n_restarts=3, seed=5)),
                                 truth, ts.n, 40).macro_f1
        assert rows[0]["mean_macro_f1"] == pytest.approx(clean)
        assert rows[0]["std_macro_f1"] == 0.0
        assert all(r["std_macro_f1"] >= 0 for r in rows)
        again = robustness_sweep(ts, truth, 40, 40, 2, [0.0, 0.01], repeats=3, seed=5, cfg=cfg)
        assert rows == again

    def test_sensitivity_single_row(self):
        from time2cluster import time2cluster

        ts, truth = _small_two_behaviour(1)
        rows = sensitivity_sweep(ts, truth, [40], 2, seed=2, cfg=KMeansConfig(2, n_restarts=3))
        ref = score_timepoints(time2cluster(ts, 40, 40, KMeansConfig(2, n_restarts=3, seed=2)),
                               truth, ts.n, 40)
        assert rows == [{"m": 40, "ks": 40, "macro_f1": ref.macro_f1, "ari": ref.ari}]
        rows = sensitivity_sweep(ts, truth, [20, 40, 60], 2, ks_rule=lambda m: m // 2,
                                 cfg=KMeansConfig(2, n_restarts=2))
        assert [r["ks"] for r in rows] == [10, 20, 30]
        assert all(0 <= r["macro_f1"] <= 1 for r in rows)


class TestBaseline:
    def test_aligned_data_is_easy(self):
        # Rising then falling ramp: all windows inside one regime z-normalize identically.
        n, m = 400, 10
        x = np.concatenate([np.arange(n, dtype=float), -np.arange(n, dtype=float)])
        res = baseline_euclidean_kmeans(x, m, 2, KMeansConfig(2, seed=0))
        starts = np.arange(x.size - m + 1)
        inside = (starts + m <= n) | (starts >= n)
        truth = (starts >= n).astype(int)
        assert adjusted_rand_index(truth[inside], res.labels[inside]) == 1.0

    def test_deterministic(self):
        ts, _ = _small_two_behaviour()
        a = baseline_euclidean_kmeans(ts, 40, 2, KMeansConfig(2, seed=1))
        b = baseline_euclidean_kmeans(ts, 40, 2, KMeansConfig(2, seed=1))
        np.testing.assert_array_equal(a.labels, b.labels)
