import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metagrad import EPS_STEP, GradientSamplePair, Meta, Moment2, compute_alpha, rescale_diff_variance

nonneg = st.floats(0.0, 1e6)


class TestComputeAlpha:
    def test_sentinel_gives_zero(self):
        assert compute_alpha(1.0, 0.0, 0.0, -np.inf) == 0.0

    def test_unclipped(self):
        # raw 1 / (1 + 1) = 0.5 is below the bound 1 / (2 - 0.5) = 2/3
        assert compute_alpha(1.0, 1.0, 0.0, 0.5) == pytest.approx(0.5)

    def test_clipped(self):
        # raw 4 / 6 is clipped to 1 / (2 - 0) = 0.5
        assert compute_alpha(4.0, 1.0, 1.0, 0.0) == pytest.approx(0.5)

    def test_no_clip(self):
        assert compute_alpha(4.0, 1.0, 1.0, 0.0, clip=False) == pytest.approx(2 / 3)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            compute_alpha(1.0, -1.0, 0.0, 0.0)

    def test_elementwise(self):
        a = compute_alpha(np.array([1.0, 4.0]), np.array([1.0, 1.0]), np.array([0.0, 1.0]), np.array([0.5, 0.0]))
        np.testing.assert_allclose(a, [0.5, 0.5])

    @settings(max_examples=200, deadline=None)
    @given(vp=nonneg, vm=nonneg, vd=nonneg, prev=st.one_of(st.just(-np.inf), st.floats(-1e6, 0.999999)))
    def test_range(self, vp, vm, vd, prev):
        a = float(compute_alpha(vp, vm, vd, prev))
        assert 0.0 <= a < 1.0

    def test_clip_chain(self):
        prev = -np.inf
        for i in range(101):
            prev = compute_alpha(1.0, 0.0, 0.0, prev)
            assert prev == pytest.approx(1 - 1 / (i + 1), abs=1e-15)


class TestRescale:
    def test_scalar(self):
        assert rescale_diff_variance(2.0, 0.25) == 0.5

    def test_zero_step(self):
        np.testing.assert_array_equal(rescale_diff_variance(np.array([3.0, 7.0]), 0.0), [0.0, 0.0])

    @pytest.mark.parametrize("h", [1e-3, 1e-2, 1e-1, 1.0])
    def test_constant_ratio_scales_quadratically(self, h):
        c = 0.7
        m = Moment2(0.5)
        for _ in range(5):
            m.step(np.array([c * h]) / h)
        assert rescale_diff_variance(m.m2, h**2)[0] == pytest.approx(c**2 * h**2, rel=1e-12)


class TestGradientSamplePair:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            GradientSamplePair(np.zeros(2), np.zeros(3), 0.0)

    def test_negative_norm(self):
        with pytest.raises(ValueError):
            GradientSamplePair(np.zeros(2), np.zeros(2), -1.0)


class TestMetaStep:
    def test_first_iteration(self):
        meta = Meta(lr=0.1)
        prop = np.array([2.0, -0.5])
        var_prop = np.array([3.0, 0.25])
        step = meta.step(prop, np.zeros(2), var_prop, np.zeros(2))
        np.testing.assert_array_equal(meta.mean, prop)
        np.testing.assert_array_equal(meta.var, var_prop)
        np.testing.assert_allclose(step, -0.1 * prop / (np.sqrt(var_prop) + EPS_STEP), rtol=1e-15)

    def test_hand_example(self):
        meta = Meta(lr=1.0)
        meta.mean = np.array([0.0])
        meta.var = np.array([1.0])
        meta.alpha_prev = np.array([0.5])
        meta.step(np.array([2.0]), np.array([1.0]), 1.0, 0.0)
        assert meta.alpha[0] == pytest.approx(0.5)
        assert meta.mean[0] == pytest.approx(1.5)
        assert meta.var[0] == pytest.approx(0.5)

    def test_perfect_averaging(self):
        rng = np.random.default_rng(0)
        v = 2.0
        props = rng.normal(3.0, np.sqrt(v), size=500)
        meta = Meta(lr=1.0)
        for i, p in enumerate(props):
            meta.step(np.array([p]), np.zeros(1), v, 0.0)
            # oracle: explicit running average
            assert meta.mean[0] == pytest.approx(np.mean(props[: i + 1]), abs=1e-12)
            assert meta.var[0] == pytest.approx(v / (i + 1), abs=1e-12)

    def test_shape_mismatch(self):
        meta = Meta()
        meta.step(np.zeros(2), np.zeros(2), 1.0, 0.0)
        with pytest.raises(ValueError):
            meta.step(np.zeros(3), np.zeros(3), 1.0, 0.0)
        with pytest.raises(ValueError):
            meta.step(np.zeros(2), np.zeros(3), 1.0, 0.0)

    def test_bad_lr(self):
        with pytest.raises(ValueError):
            Meta(lr=0.0)

    def test_nan_propagates(self):
        meta = Meta()
        step = meta.step(np.array([np.nan]), np.zeros(1), 1.0, 0.0)
        assert np.isnan(step[0])

    @settings(max_examples=100, deadline=None)
    @given(
        mean=st.floats(-1e3, 1e3), var=nonneg, prop=st.floats(-1e3, 1e3), diff=st.floats(-1e3, 1e3),
        vp=st.floats(1e-6, 1e6), vd=nonneg, prev=st.floats(-10, 0.99),
    )
    def test_convexity_and_direction(self, mean, var, prop, diff, vp, vd, prev):
        meta = Meta(lr=0.5)
        meta.mean, meta.var, meta.alpha_prev = np.array([mean]), np.array([var]), np.array([prev])
        step = meta.step(np.array([prop]), np.array([diff]), vp, vd)
        carried = mean + diff
        lo, hi = min(carried, prop), max(carried, prop)
        slack = 1e-9 * (1 + abs(lo) + abs(hi))
        assert lo - slack <= meta.mean[0] <= hi + slack
        assert meta.var[0] >= 0
        assert 0 <= meta.alpha[0] < 1
        if meta.mean[0] != 0:
            assert np.sign(step[0]) == -np.sign(meta.mean[0])
