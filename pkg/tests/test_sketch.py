import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import sort_oracle, within
from uddsketch import (
    EmptySketchError,
    IncompatibleSketchError,
    MissingBucketError,
    SaturationError,
    UDDSketch,
    alpha0_for,
    alpha_after,
    bucket_index,
    error_bound,
    gamma_of_alpha,
    merge,
    min_buckets_for,
)
from uddsketch.core import BucketStore

Q_GRID = [i / 100 for i in range(101)]


def _iterate(a, k):
    for _ in range(k):
        a = 2 * a / (1 + a * a)
    return a


def _with_store(sketch, items):
    sketch.store = BucketStore(items)
    return sketch


class TestConstruction:
    def test_new(self):
        s = UDDSketch(0.001, 1024)
        assert s.k == 0 and s.n == 0 and len(s.store) == 0
        assert s.current_alpha == 0.001
        assert s.current_gamma == pytest.approx(1.002002002002002, rel=1e-15)
        assert UDDSketch(0.5, 2).current_gamma == 3.0

    @pytest.mark.parametrize("alpha0,m", [(1.5, 1024), (0.0, 1024), (0.01, 1), (0.01, 2.5)])
    def test_bad_parameters(self, alpha0, m):
        with pytest.raises(ValueError):
            UDDSketch(alpha0, m)


class TestInsertDelete:
    def test_first_insert(self):
        s = UDDSketch(0.01, 16)
        s.insert(1.0)
        assert dict(s.store.items()) == {0: 1}

    def test_two_collapses(self):
        s = UDDSketch(0.5, 2)
        for x in (1.0, 3.0, 27.0):
            s.insert(x)
        assert dict(s.store.items()) == {0: 1, 1: 2}
        assert s.k == 2
        assert s.current_gamma == 81.0
        assert s.current_alpha == pytest.approx(80 / 82, rel=1e-12)

    def test_repeated_value_never_collapses(self):
        s = UDDSketch(0.01, 2)
        for _ in range(1000):
            s.insert(42.0)
        assert s.k == 0 and len(s.store) == 1 and s.n == 1000

    @pytest.mark.parametrize("x", [0.0, -2.0, math.nan, math.inf])
    def test_insert_domain(self, x):
        with pytest.raises(ValueError):
            UDDSketch(0.01, 8).insert(x)

    def test_delete(self):
        s = UDDSketch(0.01, 8)
        s.insert(5.0)
        s.delete(5.0)
        assert s.n == 0 and len(s.store) == 0

        with pytest.raises(MissingBucketError):
            UDDSketch(0.01, 8).delete(5.0)

        s = UDDSketch(0.01, 8)
        s.insert(1.0)
        s.insert(1.0)
        s.delete(1.0)
        assert dict(s.store.items()) == {0: 1}

    def test_delete_after_collapse(self):
        s = UDDSketch(0.01, 4)
        early = [1.0, 2.0, 3.0]
        for x in early + [100.0, 1e4, 1e6]:
            s.insert(x)
        assert s.k > 0
        k = s.k
        for x in early:
            s.delete(x)
        assert s.n == 3 and s.k == k

    def test_saturation_refuses_insert(self):
        s = UDDSketch(0.5, 2)
        s.insert(1.0)
        s.insert(1e300)
        before = (dict(s.store.items()), s.k, s.current_gamma, s.current_alpha)
        with pytest.raises(SaturationError):
            s.insert(1e-300)
        assert (dict(s.store.items()), s.k, s.current_gamma, s.current_alpha) == before
        assert s.n == 2


class TestUniformCollapse:
    def test_pair_merge(self):
        s = _with_store(UDDSketch(0.01, 64), [(5, 3), (6, 7)])
        s.uniform_collapse()
        assert dict(s.store.items()) == {3: 10}

    def test_empty(self):
        s = UDDSketch(0.01, 64)
        g = s.current_gamma
        s.uniform_collapse()
        assert len(s.store) == 0 and s.k == 1 and s.current_gamma == g * g

    def test_negative_indices(self):
        s = _with_store(UDDSketch(0.01, 64), [(-3, 1), (-2, 2), (-5, 4)])
        s.uniform_collapse()
        assert dict(s.store.items()) == {-1: 3, -2: 4}
        assert s.store.keys() == [-2, -1]

    @given(st.dictionaries(st.integers(-10**6, 10**6), st.integers(1, 10**6), max_size=200))
    def test_conserves_total_and_maps_ceil_half(self, buckets):
        s = _with_store(UDDSketch(0.01, 64), buckets.items())
        s.uniform_collapse()
        expected = {}
        for i, c in buckets.items():
            j = math.ceil(i / 2)
            expected[j] = expected.get(j, 0) + c
        assert dict(s.store.items()) == expected
        assert s.n == sum(buckets.values())
        assert s.store.keys() == sorted(expected)

    def test_alpha_update(self):
        s = UDDSketch(0.1, 8)
        s.uniform_collapse()
        assert s.current_alpha == pytest.approx(0.2 / 1.01, rel=1e-14)

    def test_lineage(self):
        r = random.Random(9)
        for _ in range(200):
            a0 = 10 ** r.uniform(-8, -3)
            s = UDDSketch(a0, 8)
            k = r.randint(1, 10)
            for _ in range(k):
                s.uniform_collapse()
            assert s.current_gamma == pytest.approx(gamma_of_alpha(a0) ** (2**k), rel=1e-9)
            assert s.current_alpha == pytest.approx(alpha_after(a0, k), rel=1e-9)

    def test_index_map_under_squaring(self):
        r = random.Random(10)
        checked = 0
        while checked < 20_000:
            x = 10 ** r.uniform(-100, 100)
            g = gamma_of_alpha(10 ** r.uniform(-5, -0.5))
            lx, lg = math.log(x), math.log(g)
            # skip values within 1e-6 relative of any bucket edge at either gamma
            if abs(lx / lg - round(lx / lg)) * lg < 1e-6:
                continue
            if abs(lx / (2 * lg) - round(lx / (2 * lg))) * 2 * lg < 1e-6:
                continue
            assert bucket_index(x, g * g) == math.ceil(bucket_index(x, g) / 2)
            checked += 1


class TestQuantile:
    def test_single_bucket(self):
        s = UDDSketch(0.01, 8)
        for _ in range(5):
            s.insert(1.0)
        est = s.quantile(0.5)
        assert est.value == pytest.approx(2 / (s.current_gamma + 1), rel=1e-15)
        assert within(est.value, 1.0, 0.01)
        assert est.guaranteed_alpha == 0.01

    def test_extremes(self):
        s = UDDSketch(0.01, 64)
        data = [3.0, 0.2, 17.0, 9.0, 1.1]
        s.update(data)
        assert within(s.quantile(0).value, min(data), s.current_alpha)
        assert within(s.quantile(1).value, max(data), s.current_alpha)

    def test_median_of_thousand(self):
        s = UDDSketch(0.01, 1024)
        s.update(float(i) for i in range(1, 1001))
        assert sort_oracle(range(1, 1001), 0.5) == 500
        assert abs(s.quantile(0.5).value - 500) <= 0.01 * 500 * (1 + 1e-9)

    def test_empty(self):
        with pytest.raises(EmptySketchError):
            UDDSketch(0.01, 8).quantile(0.5)

    def test_bad_q(self):
        s = UDDSketch(0.01, 8)
        s.insert(1.0)
        with pytest.raises(ValueError):
            s.quantile(1.2)

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=1000),
        st.sampled_from([2, 3, 8, 32, 256]),
        st.floats(1e-6, 0.2),
    )
    def test_accuracy_property(self, data, m, alpha0):
        s = UDDSketch(alpha0, m)
        s.update(data)
        assert len(s.store) <= m
        assert s.n == len(data)
        prev = -math.inf
        for q in Q_GRID:
            est = s.quantile(q)
            assert within(est.value, sort_oracle(data, q), s.current_alpha)
            assert est.guaranteed_alpha >= alpha0
            assert est.value >= prev
            prev = est.value

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=600), st.sampled_from([4, 16, 64]))
    def test_error_bound_from_range(self, data, m):
        lo, hi = min(data), max(data)
        a0 = 1e-4
        s = UDDSketch(a0, m)
        s.update(data)
        # the last collapse was forced by m + 1 occupied buckets, which needs
        # a range of more than m - 1 bucket widths
        strict = math.tanh(math.log(hi / lo) / (m - 1))
        assert s.current_alpha <= max(strict, a0) * (1 + 1e-9)

    def test_nominal_bound_can_be_exceeded(self):
        # integer bucket boundaries: 5 values spanning ~3.3 widths occupy 5 buckets
        data = [27.0, 61.0, 137.0, 310.0, 702.0]
        s = UDDSketch(1e-4, 4)
        s.update(data)
        nominal = error_bound(27.0, 702.0, 4)
        assert nominal == pytest.approx(0.6720784389125771, rel=1e-12)
        assert s.current_alpha == pytest.approx(0.6746342166075338, rel=1e-12)
        assert s.current_alpha > nominal
        assert s.current_alpha <= math.tanh(math.log(702.0 / 27.0) / 3)


class TestRecurrence:
    def test_alpha_after(self):
        assert alpha_after(0.123, 0) == 0.123
        assert alpha_after(0.1, 1) == pytest.approx(0.2 / 1.01, rel=1e-14)
        with mpmath.workdps(50):
            expected = float(_iterate(mpmath.mpf("0.001"), 3))
        assert alpha_after(0.001, 3) == pytest.approx(expected, rel=1e-12)
        assert alpha_after(0.001, 3) == pytest.approx(_iterate(0.001, 3), rel=1e-12)

    def test_alpha0_for(self):
        for target in (0.01, 0.001, 0.3):
            for k in (1, 2, 10, 20):
                a0 = alpha0_for(target, k)
                assert a0 < target
                assert _iterate(a0, k) == pytest.approx(target, rel=1e-9)
                assert alpha_after(a0, k) == pytest.approx(target, rel=1e-9)
        with mpmath.workdps(50):
            expected = float(mpmath.tanh(mpmath.atanh(mpmath.mpf("0.01")) / 1024))
        assert alpha0_for(0.01) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("args", [(0.0, 1), (1.0, 3), (0.1, -1)])
    def test_alpha_after_domain(self, args):
        with pytest.raises(ValueError):
            alpha_after(*args)

    @pytest.mark.parametrize("args", [(0.0, 1), (0.1, 0)])
    def test_alpha0_for_domain(self, args):
        with pytest.raises(ValueError):
            alpha0_for(*args)


class TestMinBuckets:
    def test_degenerate(self):
        assert min_buckets_for(0.01, 5.0, 5.0) == 2

    def test_power_of_two_range(self):
        assert min_buckets_for(0.6, 1.0, 2.0**128) == 128
        # tanh(ln(2**128) / m) is 3/5 at m = 128 and larger at m = 127
        assert error_bound(1.0, 2.0**128, 127) > 0.6
        assert error_bound(1.0, 2.0**128, 128) == pytest.approx(0.6, rel=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            min_buckets_for(0.01, 2.0, 1.0)
        with pytest.raises(ValueError):
            min_buckets_for(1.0, 1.0, 2.0)

    def test_minimal(self):
        r = random.Random(11)
        for _ in range(300):
            lo = 10 ** r.uniform(-6, 3)
            hi = lo * 10 ** r.uniform(0.01, 8)
            t = 10 ** r.uniform(-4, -0.5)
            m = min_buckets_for(t, lo, hi)
            assert error_bound(lo, hi, m) <= t * (1 + 1e-12)
            assert m == 2 or error_bound(lo, hi, m - 1) > t * (1 + 1e-12)

    def test_simulation(self):
        rng = np.random.default_rng(12)
        for _ in range(60):
            lo = 10 ** rng.uniform(-4, 2)
            hi = lo * 10 ** rng.uniform(0.1, 6)
            target = 10 ** rng.uniform(-3, -1)
            m = min_buckets_for(target, lo, hi)
            k = int(rng.integers(1, 12))
            s = UDDSketch(alpha0_for(target, k), m)
            data = np.exp(rng.uniform(math.log(lo), math.log(hi), 2000))
            data[:2] = [lo, hi]
            s.update(data.tolist())
            assert s.current_alpha <= target * (1 + 1e-9)


class TestMerge:
    def test_identity(self):
        a = UDDSketch(0.01, 32)
        a.update([1.0, 5.0, 9.0, 120.0])
        out = merge(a, UDDSketch(0.01, 32))
        assert out == a
        out = merge(UDDSketch(0.01, 32), a)
        assert out == a

    def test_entrywise_sum(self):
        a = _with_store(UDDSketch(0.01, 1024), [(0, 1), (2, 3)])
        b = _with_store(UDDSketch(0.01, 1024), [(0, 2), (5, 1)])
        out = merge(a, b)
        assert dict(out.store.items()) == {0: 3, 2: 3, 5: 1}
        assert dict(a.store.items()) == {0: 1, 2: 3}

    def test_different_lineage_depths(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            xs = np.exp(rng.normal(0, 2, int(rng.integers(1, 500)))).tolist()
            ys = np.exp(rng.normal(1, 3, int(rng.integers(1, 500)))).tolist()
            a0 = 10 ** rng.uniform(-5, -2)
            a = UDDSketch(a0, 64)
            b = UDDSketch(alpha_after(a0, 1), 64)
            a.update(xs)
            b.update(ys)
            out = merge(a, b)
            assert out.n == len(xs) + len(ys)
            assert len(out.store) <= 64
            assert out.current_gamma >= max(a.current_gamma, b.current_gamma) * (1 - 1e-9)
            both = xs + ys
            for q in Q_GRID[::5]:
                assert within(out.quantile(q).value, sort_oracle(both, q), out.current_alpha)

    def test_in_place(self):
        a = UDDSketch(0.01, 16)
        a.update([1.0, 2.0])
        b = UDDSketch(0.01, 16)
        b.update([3.0])
        assert a.merge(b) is a and a.n == 3

    def test_incompatible(self):
        with pytest.raises(IncompatibleSketchError):
            merge(UDDSketch(0.01, 16), UDDSketch(0.03, 16))
        with pytest.raises(IncompatibleSketchError):
            merge(UDDSketch(0.01, 16), UDDSketch(0.01, 32))


def test_collapse_loop_terminates():
    s = UDDSketch(1e-3, 2)
    for x in (0.5, 2.0, 7.0, 1e3, 1e-3):
        s.insert(x)
        assert len(s.store) <= 2
    max_index = max(abs(bucket_index(x, gamma_of_alpha(1e-3))) for x in (0.5, 2.0, 7.0, 1e3, 1e-3))
    assert s.k <= math.ceil(math.log2(max_index)) + 1
