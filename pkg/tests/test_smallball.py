import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlaw import ensembles as en
from circlaw import smallball as sb
from circlaw.seeding import make_rng

import props


B = en.bernoulli()


class TestWalkSample:
    def test_zero_coefficients(self):
        assert np.all(sb.walk_sample(B, np.zeros(5), seed=1, count=100) == 0)

    def test_point_mass_sums_coefficients(self):
        v = np.array([1.0, 2.0, 3.0j])
        s = sb.walk_sample(en.point_mass(1.0), v, seed=2, count=10)
        assert np.allclose(s, v.sum())

    def test_bernoulli_pair_histogram(self):
        s = sb.walk_sample(B, np.ones(2), seed=3, count=100_000).real
        for val, p in [(-2, 0.25), (0, 0.5), (2, 0.25)]:
            freq = np.mean(s == val)
            assert abs(freq - p) <= 5 * math.sqrt(p * (1 - p) / len(s))


class TestWalkPmf:
    def test_lattice_and_dict_paths_agree(self):
        vals, probs = B.enumeration()
        v = np.array([1.0, 1.0, 2.0, 3.0])
        lat = sb.walk_pmf(v, vals, probs)
        # break the lattice detection with an irrational rotation, rotate back;
        # nearby float keys from different addition orders are re-merged here
        rot = np.exp(0.123j)
        dic = sb.walk_pmf(v * rot, vals * 1.0, probs)
        got: dict[complex, float] = {}
        for z, p in zip(*dic):
            key = complex(np.round(z / rot, 9))
            got[key] = got.get(key, 0.0) + p
        want = dict(zip(np.round(lat[0], 9).tolist(), lat[1].tolist()))
        for k, p in want.items():
            assert got[k] == pytest.approx(p, abs=1e-12)

    def test_cap_falls_back(self):
        vals, probs = B.enumeration()
        assert sb.walk_pmf(np.arange(1, 40, dtype=float) * 1.0001, vals, probs,
                           cap=100) is None


class TestSmallBall:
    def test_bernoulli_four_ones_exact(self):
        p = sb.small_ball_prob(B, np.ones(4), 0.5)
        assert p.method == "exact_enumeration"
        assert p.value == 6 / 16

    def test_all_ones_family_matches_binomial(self):
        for n in (4, 8, 12):
            p = sb.small_ball_prob(B, np.ones(n), 0.5)
            assert p.value == math.comb(n, n // 2) / 2**n

    def test_r_zero_continuous_walk(self):
        p = sb.small_ball_prob(en.complex_gaussian(), np.ones(4), 0.0, budget=20_000)
        assert p.method == "monte_carlo"
        assert p.value <= 3 * p.stderr + 1e-3

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            sb.small_ball_prob(B, np.ones(2), -0.1)

    def test_midpoint_candidates_beat_support_points(self):
        # two atoms at distance 1: the best closed ball of radius 1/2 covers both
        d = en.discrete([0.0, 1.0], [0.5, 0.5])
        p = sb.small_ball_prob(d, np.ones(1), 0.5)
        assert p.value == 1.0

    def test_mc_close_to_exact(self):
        p_exact = sb.small_ball_prob(B, np.ones(8), 0.5)
        samples = sb.walk_sample(B, np.ones(8), seed=9, count=50_000).real
        mc = np.mean(np.abs(samples) <= 0.5)
        assert abs(mc - p_exact.value) <= 5 * math.sqrt(p_exact.value / 50_000) + 1e-3


class TestCharFn:
    def test_at_origin(self):
        assert sb.char_fn_f(B, 0.0) == pytest.approx(1.0)

    def test_bernoulli_closed_form(self):
        for z in (0.3, 0.3 + 0.9j, -1.7 + 0.2j):
            assert sb.char_fn_f(B, z) == pytest.approx(
                math.cos(2 * math.pi * np.real(z)) ** 2, abs=1e-12)

    @given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
    @settings(max_examples=50, deadline=None)
    def test_symmetry_and_range(self, z):
        f = sb.char_fn_f(B, z)
        assert 0.0 <= f <= 1.0
        assert sb.char_fn_f(B, -z) == pytest.approx(f, abs=1e-12)

    def test_gaussian_closed_forms_match_mc(self):
        rng = make_rng(55, 0)
        for dist in (en.real_gaussian(), en.complex_gaussian()):
            draws = dist.sample(rng, 200_000)
            for z in (0.2, 0.1 + 0.2j):
                emp = np.abs(np.mean(np.exp(2j * np.pi * np.real(draws * z)))) ** 2
                assert sb.char_fn_f(dist, z) == pytest.approx(emp, abs=0.01)


class TestAlphaNorm:
    def test_zero(self):
        assert sb.alpha_norm(B, 0.0) == 0.0

    def test_bernoulli_fractional_part_formula(self):
        for w in (0.3, 0.77 + 0.4j, 1.26 - 3j):
            frac = abs(2 * np.real(w) - round(2 * np.real(w)))
            assert sb.alpha_norm(B, w) == pytest.approx(frac / math.sqrt(2), abs=1e-12)

    def test_gaussian_theta_series_matches_mc(self):
        dist = en.complex_gaussian()
        rng = make_rng(56, 0)
        a = dist.sample(rng, 200_000)
        b = dist.sample(rng, 200_000)
        for w in (0.2, 0.5 + 0.3j):
            x = np.real(w * (a - b))
            emp = math.sqrt(np.mean((x - np.round(x)) ** 2))
            assert sb.alpha_norm(dist, w) == pytest.approx(emp, abs=0.01)


class TestConcProb:
    def test_bernoulli_mu_law(self):
        vals, probs = sb.mu_law(B, 1.0)
        law = dict(zip(vals.tolist(), probs.tolist()))
        assert law == {0j: 0.75, (-2 + 0j): 0.125, (2 + 0j): 0.125}

    def test_single_coefficient_exact_value(self):
        expected = 0.75 + 0.25 * math.exp(-4 * math.pi)
        est = sb.conc_prob_mc(B, 1.0, [1.0])
        assert est.method == "exact_enumeration"
        assert est.value == pytest.approx(expected, abs=1e-15)

    def test_zero_tuple(self):
        assert sb.conc_prob_mc(B, 0.5, np.zeros(4)).value == pytest.approx(1.0)

    def test_fourier_empty_tuple(self):
        est = sb.conc_prob_fourier(B, 1.0, [])
        assert est.value == pytest.approx(1.0, abs=1e-10)

    def test_fourier_matches_exact(self):
        expected = 0.75 + 0.25 * math.exp(-4 * math.pi)
        est = sb.conc_prob_fourier(B, 1.0, [1.0])
        assert est.value == pytest.approx(expected, abs=1e-6)

    def test_small_mu_limit(self):
        est = sb.conc_prob_fourier(B, 0.001, np.ones(3))
        assert est.value > 0.995

    def test_mc_agrees_with_exact(self):
        exact = sb.conc_prob_exact(B, 0.5, np.ones(3))
        law = sb.mu_law(B, 0.5)
        rng = make_rng(77, 0)
        idx = np.searchsorted(np.cumsum(law[1]), rng.random((50_000, 3)), side="right")
        w = law[0][np.minimum(idx, len(law[0]) - 1)].sum(axis=1)
        emp = np.mean(np.exp(-math.pi * np.abs(w) ** 2))
        assert abs(emp - exact.value) < 0.01

    def test_mu_validation(self):
        with pytest.raises(ValueError):
            sb.conc_prob_fourier(B, 0.0, [1.0])
        with pytest.raises(ValueError):
            sb.conc_prob_mc(B, 1.5, [1.0])


class TestScalarCosineInequality:
    def test_cos_bound_on_half_period(self):
        # cos(2 pi t) <= 1 - 8 ||t||^2 on [0, 1/2]; the constant 8 is sharp at 1/2
        t = np.linspace(0.0, 0.5, 20_001)
        assert np.all(np.cos(2 * np.pi * t) <= 1 - 8 * t**2 + 1e-12)


class TestLemmaProperties:
    def test_pmu_properties_small(self):
        rng = np.random.default_rng(101)
        for i in range(25):
            props.check_pmu_properties(props.random_dist(rng), rng, seed=1000 + 10 * i)

    def test_concball_small(self):
        rng = np.random.default_rng(102)
        for i in range(10):
            props.check_concball(props.random_dist(rng), rng, seed=2000 + i)
            props.check_concball_sparse(props.random_dist(rng), rng, seed=3000 + i)

    def test_alpha_norm_properties_small(self):
        rng = np.random.default_rng(103)
        for _ in range(10):
            dist = props.random_dist(rng)
            props.check_alpha_norm_props(dist, rng)
            props.check_f_vs_norm(dist, rng)
        assert props.check_alpha_norm_lower_bound(en.bernoulli()) >= 2**-10
