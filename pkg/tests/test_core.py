"""Tests for deterministic logistic-map arithmetic and the lam=4 law."""

import numpy as np
import pytest

from randlogistic.core import (
    SupportInterval,
    beta_invariant_cdf,
    beta_invariant_density,
    deterministic_support_interval,
    fixed_point,
    fixed_point_band,
    iterate_deterministic,
    logistic_step,
)


class TestLogisticStep:
    def test_maximum_of_the_map(self):
        assert logistic_step(0.5, 4.0) == 1.0

    def test_fixed_point_identity(self):
        x_star = 1.0 - 1.0 / 3.9
        assert logistic_step(x_star, 3.9) == pytest.approx(x_star, abs=1e-15)

    def test_hand_evaluation(self):
        # 3.87 * 0.3 * 0.7 = 0.8127
        assert logistic_step(0.3, 3.87) == pytest.approx(0.8127, abs=1e-12)

    def test_rejects_invalid_inputs(self):
        with pytest.raises(ValueError):
            logistic_step(-0.1, 3.9)
        with pytest.raises(ValueError):
            logistic_step(1.1, 3.9)
        with pytest.raises(ValueError):
            logistic_step(0.5, 0.0)
        with pytest.raises(ValueError):
            logistic_step(0.5, 4.2)

    def test_bounded_by_quarter_lambda(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            x = rng.uniform(0.0, 1.0)
            lam = rng.uniform(1e-6, 4.0)
            y = logistic_step(x, lam)
            assert 0.0 <= y <= lam / 4.0


class TestIterate:
    def test_one_maps_to_zero(self):
        assert iterate_deterministic(0.5, 4.0, 2).tolist() == [0.5, 1.0, 0.0]

    def test_fixed_point_is_constant(self):
        lam = 3.2
        x_star = fixed_point(lam)
        orbit = iterate_deterministic(x_star, lam, 10)
        assert np.allclose(orbit, x_star, atol=1e-12)

    def test_matches_manual_applications(self):
        # three applications of 3.9 * x * (1 - x) starting from 0.2
        x1 = 3.9 * 0.2 * 0.8
        x2 = 3.9 * x1 * (1.0 - x1)
        x3 = 3.9 * x2 * (1.0 - x2)
        orbit = iterate_deterministic(0.2, 3.9, 3)
        assert orbit == pytest.approx([0.2, x1, x2, x3], abs=1e-15)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            iterate_deterministic(0.2, 3.9, -1)


class TestFixedPoint:
    def test_known_values(self):
        assert fixed_point(4.0) == 0.75
        assert fixed_point(2.0) == 0.5
        assert fixed_point(3.87) == pytest.approx(0.7416020671834626, abs=1e-15)

    def test_below_one_has_no_interior_fixed_point(self):
        with pytest.raises(ValueError, match="origin"):
            fixed_point(1.0)
        with pytest.raises(ValueError):
            fixed_point(0.5)

    def test_band_endpoints(self):
        band = fixed_point_band(3.87, 4.0)
        assert band.lo == pytest.approx(0.7416020671834626, abs=1e-15)
        assert band.hi == 0.75


class TestSupportInterval:
    def test_full_support_at_four(self):
        interval = deterministic_support_interval(4.0)
        assert interval.as_pair() == (0.0, 1.0)
        assert not interval.degenerate

    def test_chaotic_band_value(self):
        interval = deterministic_support_interval(3.87)
        assert interval.lo == pytest.approx(0.1216873125, abs=1e-12)
        assert interval.hi == pytest.approx(0.9675, abs=1e-15)

    def test_lambda_two_is_a_point(self):
        interval = deterministic_support_interval(2.0)
        assert interval.degenerate
        assert interval.lo == interval.hi == 0.5

    def test_forward_invariance(self):
        # above lam = 2 any point of the interval stays inside it under one
        # more step (below that the attractor is the fixed point instead)
        rng = np.random.default_rng(1)
        for lam in (2.5, 3.2, 3.57, 3.87, 3.95, 4.0):
            interval = deterministic_support_interval(lam)
            if interval.degenerate:
                continue
            xs = rng.uniform(interval.lo, interval.hi, 200)
            ys = lam * xs * (1.0 - xs)
            assert np.all(ys >= interval.lo - 1e-12)
            assert np.all(ys <= interval.hi + 1e-12)

    def test_invalid_pairs_rejected(self):
        with pytest.raises(ValueError):
            SupportInterval(0.5, 0.4)
        with pytest.raises(ValueError):
            SupportInterval(0.5, 0.5)  # needs the degenerate flag
        with pytest.raises(ValueError):
            SupportInterval(-0.1, 0.5)


class TestArcsineLaw:
    def test_density_at_half(self):
        assert beta_invariant_density(0.5) == pytest.approx(2.0 / np.pi, abs=1e-15)

    def test_density_symmetry(self):
        xs = np.linspace(0.01, 0.49, 25)
        assert np.allclose(beta_invariant_density(xs), beta_invariant_density(1.0 - xs))

    def test_density_normalizes(self):
        # midpoint rule avoids the endpoint poles
        n = 200_000
        xs = (np.arange(n) + 0.5) / n
        integral = beta_invariant_density(xs).sum() / n
        assert integral == pytest.approx(1.0, abs=1e-3)

    def test_density_pole_rejected(self):
        for bad in (0.0, 1.0):
            with pytest.raises(ValueError):
                beta_invariant_density(bad)

    def test_cdf_values(self):
        assert beta_invariant_cdf(0.0) == 0.0
        assert beta_invariant_cdf(1.0) == pytest.approx(1.0, abs=1e-15)
        assert beta_invariant_cdf(0.5) == pytest.approx(0.5, abs=1e-15)
        # (2/pi) * arcsin(1/2) = 1/3
        assert beta_invariant_cdf(0.25) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_cdf_monotone(self):
        xs = np.linspace(0.0, 1.0, 1001)
        assert np.all(np.diff(beta_invariant_cdf(xs)) >= 0)

    def test_invariance_under_the_map(self):
        # inverse-CDF samples of the arcsine law, pushed through the lam = 4
        # map, must still follow the arcsine law
        n = 1_000_000
        u = (np.arange(n) + 0.5) / n
        rng = np.random.default_rng(2)
        rng.shuffle(u)
        x = np.sin(0.5 * np.pi * u) ** 2
        y = np.sort(4.0 * x * (1.0 - x))
        empirical = np.arange(1, n + 1) / n
        ks = np.abs(empirical - beta_invariant_cdf(y)).max()
        assert ks <= 0.01
