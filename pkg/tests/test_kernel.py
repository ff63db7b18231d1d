"""Tests for the closed-form transition kernel and its derived operations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randlogistic.core import fixed_point, fixed_point_band
from randlogistic.ensemble import DiscreteWeighted, SeedPolicy, sample_initial, step_ensemble
from randlogistic.kernel import (
    IntervalSet,
    PiecewiseConstant,
    TwoPoint,
    UniformInterval,
    bin_transition_masses,
    image_interval,
    n_step_prob,
    push_forward,
    transition_density,
    transition_prob,
)
from randlogistic.measure import EmpiricalMeasure

LAW = UniformInterval(3.87, 4.0)


class TestParameterLaws:
    def test_uniform_validation(self):
        with pytest.raises(ValueError):
            UniformInterval(4.0, 3.87)
        with pytest.raises(ValueError):
            UniformInterval(0.0, 2.0)
        with pytest.raises(ValueError):
            UniformInterval(3.0, 4.5)

    def test_two_point_validation(self):
        with pytest.raises(ValueError):
            TwoPoint(3.0, 2.0)
        with pytest.raises(ValueError):
            TwoPoint(2.0, 3.0, 1.5)
        assert TwoPoint(4.0, 4.0, 1.0).describe() == "pointmass(4)"

    def test_piecewise_must_integrate_to_one(self):
        with pytest.raises(ValueError):
            PiecewiseConstant((3.0, 4.0), (0.5,))
        law = PiecewiseConstant((3.0, 3.5, 4.0), (1.0, 1.0))
        assert law.cdf(3.5) == pytest.approx(0.5)

    def test_piecewise_sample_inverts_cdf(self):
        law = PiecewiseConstant((3.0, 3.2, 4.0), (2.5, 0.625))
        u = np.linspace(0.001, 0.999, 501)
        lam = law.sample(u)
        assert np.allclose(law.cdf(lam), u, atol=1e-12)

    def test_sampling_stays_in_support(self):
        u = np.array([1e-12, 0.5, 1 - 1e-12])
        lam = LAW.sample(u)
        assert np.all((lam >= 3.87) & (lam <= 4.0))
        assert set(TwoPoint(2.7, 3.0, 0.25).sample(np.array([0.1, 0.9]))) == {2.7, 3.0}


class TestIntervalSet:
    def test_normalization_merges_and_drops(self):
        s = IntervalSet.from_pairs([(0.5, 0.7), (0.1, 0.3), (0.3, 0.4), (0.2, 0.2)])
        assert s.intervals == ((0.1, 0.4), (0.5, 0.7))

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            IntervalSet.from_pairs([(0.1, 0.4), (0.3, 0.5)])

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            IntervalSet.from_pairs([(-0.1, 0.5)])
        with pytest.raises(ValueError):
            IntervalSet.from_pairs([(0.5, 1.2)])

    def test_total_length_and_contains(self):
        s = IntervalSet.from_pairs([(0.1, 0.2), (0.6, 0.9)])
        assert s.total_length == pytest.approx(0.4)
        assert s.contains(np.array([0.15, 0.5, 0.6])).tolist() == [True, False, True]


class TestImageInterval:
    def test_at_one_half(self):
        img = image_interval(0.5, LAW)
        assert img.as_pair() == pytest.approx((0.9675, 1.0))

    def test_hand_value(self):
        # x (1 - x) = 0.09 at x = 0.1
        img = image_interval(0.1, LAW)
        assert img.lo == pytest.approx(0.34830, abs=1e-12)
        assert img.hi == pytest.approx(0.36, abs=1e-12)

    def test_fixed_point_image_is_interior(self):
        x = fixed_point(0.5 * (3.87 + 4.0))
        img = image_interval(x, LAW)
        assert 0.0 < img.lo < img.hi < 1.0

    def test_degenerate_states_rejected(self):
        for bad in (0.0, 1.0):
            with pytest.raises(ValueError):
                image_interval(bad, LAW)

    def test_only_uniform_laws(self):
        with pytest.raises(ValueError):
            image_interval(0.5, TwoPoint(3.9, 4.0))


class TestTransitionProb:
    def test_image_inside_target(self):
        A = IntervalSet.single(0.95, 1.0)
        assert transition_prob(0.5, A, LAW) == 1.0

    def test_full_space(self):
        for law in (LAW, TwoPoint(2.7, 3.0), PiecewiseConstant((3.87, 4.0), (1 / 0.13,))):
            assert transition_prob(0.37, IntervalSet.full(), law) == pytest.approx(1.0)

    def test_disjoint_target(self):
        A = IntervalSet.single(0.0, 0.9675)
        assert transition_prob(0.5, A, LAW) == 0.0

    def test_two_point_weighted_indicators(self):
        law = TwoPoint(2.7, 3.0, 0.3)
        s = 0.5 * 0.5
        # target holding only the alpha image
        A = IntervalSet.single(2.7 * s - 0.01, 2.7 * s + 0.01)
        assert transition_prob(0.5, A, law) == pytest.approx(0.3)
        both = IntervalSet.from_pairs([(2.7 * s - 0.01, 2.7 * s + 0.01), (3.0 * s - 0.01, 3.0 * s + 0.01)])
        assert transition_prob(0.5, both, law) == pytest.approx(1.0)

    def test_single_cell_piecewise_equals_uniform(self):
        piecewise = PiecewiseConstant((3.87, 4.0), (1.0 / 0.13,))
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.uniform(0.05, 0.95)
            lo = rng.uniform(0.0, 0.9)
            A = IntervalSet.single(lo, lo + rng.uniform(0.01, 0.1))
            assert transition_prob(x, A, piecewise) == pytest.approx(
                transition_prob(x, A, LAW), abs=1e-12
            )

    def test_degenerate_state_rejected(self):
        with pytest.raises(ValueError):
            transition_prob(0.0, IntervalSet.full(), LAW)

    @given(
        x=st.floats(0.05, 0.95),
        cuts=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=8, unique=True),
    )
    @settings(max_examples=150, deadline=None)
    def test_additivity_and_monotonicity(self, x, cuts):
        cuts = sorted(cuts)
        pieces = [(cuts[i], cuts[i + 1]) for i in range(0, len(cuts) - 1, 2)]
        odd = pieces[0::2]
        even = pieces[1::2]
        p_union = transition_prob(x, IntervalSet.from_pairs(pieces), LAW)
        p_split = sum(transition_prob(x, IntervalSet.from_pairs([p]), LAW) for p in pieces)
        assert p_union == pytest.approx(p_split, abs=1e-12)
        if odd:
            assert transition_prob(x, IntervalSet.from_pairs(odd), LAW) <= p_union + 1e-12
        if even:
            assert transition_prob(x, IntervalSet.from_pairs(even), LAW) <= p_union + 1e-12

    def test_monte_carlo_agreement(self):
        # 100 random (x, A) pairs against 1e6 parameter draws
        rng = np.random.default_rng(99)
        lam = 3.87 + 0.13 * rng.random(1_000_000)
        for _ in range(100):
            x = rng.uniform(0.01, 0.99)
            k = rng.integers(1, 4)
            cuts = np.sort(rng.uniform(0.0, 1.0, 2 * k))
            A = IntervalSet.from_pairs([(cuts[2 * i], cuts[2 * i + 1]) for i in range(k)])
            p = transition_prob(x, A, LAW)
            mc = A.contains(lam * x * (1.0 - x)).mean()
            tol = 4.0 * np.sqrt(p * (1.0 - p) / 1e6) + 1e-6
            assert abs(p - mc) <= tol


class TestTransitionDensity:
    def test_inside_image(self):
        # 1 / (0.13 * 0.25)
        assert transition_density(0.5, 0.98, LAW) == pytest.approx(30.76923076923077, abs=1e-10)

    def test_outside_image(self):
        assert transition_density(0.5, 0.5, LAW) == 0.0

    def test_two_point_has_no_density(self):
        with pytest.raises(ValueError, match="atoms"):
            transition_density(0.5, 0.98, TwoPoint(3.9, 4.0))

    def test_integrates_to_transition_prob(self):
        x = 0.37
        lo, hi = 0.5, 0.95
        nodes = lo + (np.arange(10_000) + 0.5) * (hi - lo) / 10_000
        integral = sum(transition_density(x, float(y), LAW) for y in nodes) * (hi - lo) / 10_000
        assert integral == pytest.approx(
            transition_prob(x, IntervalSet.single(lo, hi), LAW), abs=1e-6
        )

    def test_integrates_to_one_over_image(self):
        x = 0.41
        img = image_interval(x, LAW)
        nodes = img.lo + (np.arange(10_000) + 0.5) * img.length / 10_000
        integral = sum(transition_density(x, float(y), LAW) for y in nodes) * img.length / 10_000
        assert integral == pytest.approx(1.0, abs=1e-9)

    def test_matches_finite_difference_of_transition_prob(self):
        x, y, h = 0.43, 0.9, 1e-6
        window = IntervalSet.single(y - h, y + h)
        fd = transition_prob(x, window, LAW) / (2 * h)
        assert fd == pytest.approx(transition_density(x, y, LAW), rel=1e-6)

    def test_piecewise_density(self):
        law = PiecewiseConstant((3.0, 3.5, 4.0), (1.6, 0.4))
        x = 0.5
        assert transition_density(x, 3.25 * 0.25, law) == pytest.approx(1.6 / 0.25)
        assert transition_density(x, 2.0 * 0.25, law) == 0.0


class TestBinMasses:
    def test_rows_are_probability_vectors(self):
        edges = np.linspace(0.0, 1.0, 65)
        for law in (LAW, TwoPoint(4.0, 4.0, 1.0), PiecewiseConstant((3.87, 4.0), (1 / 0.13,))):
            masses = bin_transition_masses(0.5, edges, law)
            assert masses.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(masses >= 0)

    def test_matches_transition_prob_per_bin(self):
        edges = np.linspace(0.0, 1.0, 33)
        masses = bin_transition_masses(0.37, edges, LAW)
        for j in (0, 10, 20, 31):
            A = IntervalSet.single(edges[j], edges[j + 1])
            assert masses[j] == pytest.approx(transition_prob(0.37, A, LAW), abs=1e-14)

    def test_point_mass_on_the_last_bin_edge(self):
        # lam = 4 from x = 1/2 lands exactly on 1.0; mass goes to the last bin
        edges = np.linspace(0.0, 1.0, 11)
        masses = bin_transition_masses(0.5, edges, TwoPoint(4.0, 4.0, 1.0))
        assert masses[-1] == 1.0


class TestPushForward:
    def test_point_mass_spreads_uniformly_over_image(self):
        mu = EmpiricalMeasure(np.linspace(0, 1, 101), np.eye(100)[50])  # mass in [0.5, 0.51)
        out = push_forward(mu, LAW, quadrature_nodes=1)
        # with one node at 0.505 the image is (3.87 s, 4 s), uniform
        s = 0.505 * 0.495
        expected = bin_transition_masses(0.505, mu.bin_edges, LAW)
        assert np.allclose(out.masses, expected, atol=1e-15)
        inside = (mu.bin_edges[1:] > 3.87 * s) & (mu.bin_edges[:-1] < 4.0 * s)
        assert np.all(out.masses[~inside] == 0.0)

    def test_total_mass_is_one(self):
        mu = EmpiricalMeasure.uniform(50)
        out = push_forward(mu, LAW)
        assert out.masses.sum() == pytest.approx(1.0, abs=1e-15)

    def test_needs_at_least_one_node(self):
        with pytest.raises(ValueError):
            push_forward(EmpiricalMeasure.uniform(10), LAW, quadrature_nodes=0)


class TestNStepProb:
    def test_one_step_is_exact(self):
        A = IntervalSet.from_pairs([(0.2, 0.4), (0.9, 0.99)])
        assert n_step_prob(0.37, A, LAW, 1) == transition_prob(0.37, A, LAW)

    def test_full_space_stays_one(self):
        for n in (1, 2, 3):
            assert n_step_prob(0.37, IntervalSet.full(), LAW, n, grid=256) == pytest.approx(
                1.0, abs=1e-9
            )

    def test_against_monte_carlo_paths(self):
        # the two-step image of 1/2 lies entirely below the fixed-point band,
        # so the probability is exactly zero; four steps reach it
        band = fixed_point_band(3.87, 4.0)
        A0 = IntervalSet.single(band.lo, band.hi)
        p2 = n_step_prob(0.5, A0, LAW, 2, grid=2048)
        p4 = n_step_prob(0.5, A0, LAW, 4, grid=2048)

        e = sample_initial(DiscreteWeighted((0.5,), (1.0,)), 1_000_000, SeedPolicy(4242))
        mc = {}
        for _ in range(4):
            e = step_ensemble(e, LAW)
            mc[e.step] = float(A0.contains(e.particles).mean())

        assert p2 == 0.0 and mc[2] == 0.0
        sigma = np.sqrt(mc[4] * (1.0 - mc[4]) / 1e6)
        assert p4 > 0.0
        assert abs(p4 - mc[4]) <= 3.0 * sigma

    def test_needs_positive_step_count(self):
        with pytest.raises(ValueError):
            n_step_prob(0.5, IntervalSet.full(), LAW, 0)
