import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlaw import gaps
from circlaw.ensembles import bernoulli, complex_gaussian
from circlaw.seeding import make_rng
from circlaw.smallball import alpha_norm_many


class TestEnumerate:
    def test_rank_one_interval(self):
        pts = gaps.enumerate_gap(gaps.gap([1.0], [3.0]))
        assert sorted(pts.distinct_points.real.tolist()) == [-3, -2, -1, 0, 1, 2, 3]
        assert pts.multiplicity_total == 7
        assert pts.exact_arithmetic

    def test_collision_collapses(self):
        pts = gaps.enumerate_gap(gaps.gap([1.0, 2.0], [1.0, 1.0]))
        assert len(pts.distinct_points) == 7
        assert pts.multiplicity_total == 9

    def test_gaussian_integer_box(self):
        pts = gaps.enumerate_gap(gaps.gap([1.0, 1.0j], [1.0, 1.0]))
        assert len(pts.distinct_points) == 9

    def test_cap_error_carries_product(self):
        with pytest.raises(gaps.GapSizeError) as exc:
            gaps.enumerate_gap(gaps.gap([1.0], [100.0]), cap=10)
        assert exc.value.total == 201

    def test_fractional_dims_floor(self):
        pts = gaps.enumerate_gap(gaps.gap([1.0], [2.9]))
        assert len(pts.distinct_points) == 5

    def test_rational_generators_stay_exact(self):
        pts = gaps.enumerate_gap(gaps.gap([0.5, 0.25], [2.0, 1.0]))
        assert pts.exact_arithmetic
        assert len(pts.distinct_points) == 11   # 0.25-lattice from -1.25 to 1.25

    def test_irrational_generators_use_float_path(self):
        pts = gaps.enumerate_gap(gaps.gap([1.0, math.sqrt(2)], [2.0, 2.0]))
        assert not pts.exact_arithmetic
        assert len(pts.distinct_points) == 25


class TestProperDilateDispersion:
    def test_proper_and_improper_fixtures(self):
        assert gaps.is_proper(gaps.gap([1.0, 3.0], [1.0, 1.0]))
        assert not gaps.is_proper(gaps.gap([1.0, 2.0], [1.0, 1.0]))
        assert gaps.is_proper(gaps.gap([2.5], [4.0]))

    def test_dilate(self):
        g = gaps.gap([1.0, 1.0j], [2.0, 3.0])
        assert gaps.dilate(g, 1.0).dims == g.dims
        assert gaps.dilate(g, 2.0).dims == (4.0, 6.0)
        assert gaps.dilate(g, 2.0).generators == g.generators

    def test_doubling_property_scanned_constant(self):
        rng = make_rng(61, 0)
        for _ in range(20):
            r = int(rng.integers(1, 3))
            gens = rng.integers(1, 5, r) + 1j * rng.integers(-2, 3, r)
            dims = rng.integers(1, 5, r).astype(float)
            g = gaps.gap(gens.tolist(), dims.tolist())
            base = len(gaps.enumerate_gap(g).distinct_points)
            for t in (1.5, 2.0, 3.0):
                big = len(gaps.enumerate_gap(gaps.dilate(g, t)).distinct_points)
                assert big <= 4.0 * t**r * base   # C_r = 4 suffices on these

    def test_dispersion_interval_family(self):
        for s in (1, 2, 5, 10, 20):
            assert gaps.dispersion(gaps.gap([1.0], [float(s)])) == pytest.approx(
                (2 * s + 1) / 3)

    def test_dispersion_inside_unit_ball(self):
        assert gaps.dispersion(gaps.gap([0.1], [5.0])) == 1.0

    def test_dispersion_far_generator(self):
        for s in (1, 3, 7):
            assert gaps.dispersion(gaps.gap([10.0], [float(s)])) == 2 * s + 1

    def test_permutation_invariance(self):
        a = gaps.gap([1.0, 2.0j, 3.0], [1.0, 2.0, 1.0])
        b = gaps.gap([3.0, 1.0, 2.0j], [1.0, 1.0, 2.0])
        pa = gaps.enumerate_gap(a)
        pb = gaps.enumerate_gap(b)
        assert np.array_equal(np.sort_complex(pa.distinct_points),
                              np.sort_complex(pb.distinct_points))
        assert gaps.dispersion(a) == gaps.dispersion(b)
        assert gaps.is_proper(a) == gaps.is_proper(b)

    def test_dispersion_monotone_under_dilation(self):
        g = gaps.gap([1.0, 5.0], [3.0, 2.0])
        last = 0.0
        for t in (1.0, 1.5, 2.0, 3.0):
            d = gaps.dispersion(gaps.dilate(g, t))
            assert d >= last - 1e-12
            last = d


class TestEpsilonNet:
    def test_single_point(self):
        net = gaps.epsilon_net([1.0 + 2.0j], 1.0)
        assert net.tolist() == [1.0 + 2.0j]

    def test_two_far_points(self):
        assert len(gaps.epsilon_net([0.0, 10.0], 1.0)) == 2

    def test_greedy_from_left_on_integers(self):
        net = gaps.epsilon_net(np.arange(10, dtype=complex), 2.5)
        assert net.real.tolist() == [0, 3, 6, 9]

    @given(st.lists(st.complex_numbers(max_magnitude=20, allow_nan=False,
                                       allow_infinity=False), min_size=1, max_size=40),
           st.floats(0.1, 5.0))
    @settings(max_examples=60, deadline=None)
    def test_separated_and_dominating(self, pts, eps):
        net = gaps.epsilon_net(pts, eps)
        arr = np.asarray(pts, dtype=complex)
        for i, z in enumerate(net):
            for w in net[i + 1:]:
                assert abs(z - w) > eps
        assert np.all(np.min(np.abs(arr[:, None] - net[None, :]), axis=1) <= eps)

    def test_entropy_sandwich_on_instances(self):
        rng = make_rng(62, 0)
        for _ in range(10):
            pts = rng.standard_normal(60) * 3 + 1j * rng.standard_normal(60)
            for eps in (0.5, 1.0):
                n_eps = len(gaps.epsilon_net(pts, eps))
                n_2eps = len(gaps.epsilon_net(pts, 2 * eps))
                assert n_2eps <= n_eps


class TestPigeonhole:
    def test_singleton(self):
        assert gaps.pigeonhole_check([0.0], [0.0], 1.0)

    def test_random_integer_sets(self):
        rng = make_rng(63, 0)
        for _ in range(20):
            q = rng.integers(-10, 11, 30) + 1j * rng.integers(-10, 11, 30)
            centers = rng.standard_normal(4) * 5 + 1j * rng.standard_normal(4) * 5
            assert gaps.pigeonhole_check(q, centers, r=float(rng.uniform(0.5, 4.0)))

    def test_empty_intersection_trivial(self):
        assert gaps.pigeonhole_check([100.0], [0.0], 1.0)


class TestLacunaryBasis:
    def test_contained_gap_gives_empty_basis(self):
        lb = gaps.lacunary_basis(gaps.gap([0.1], [5.0]), K=10.0, R=1.0)
        assert lb.d == 0
        assert len(lb.primary) == 0

    def test_interval_toy_case(self):
        lb = gaps.lacunary_basis(gaps.gap([1.0], [100.0]), K=10.0, R=1.0)
        assert lb.d == 2
        assert np.allclose(np.abs(lb.primary), [100.0, 10.0])
        assert np.allclose(lb.ratios, 1.0)        # real generators: Im(w'/w) = 0
        assert lb.count_in_R == 3
        assert lb.many_vectors_ratio() <= 8.0

    def test_two_scale_complex_gap(self):
        lb = gaps.lacunary_basis(gaps.gap([1.0, 1e-3j], [50.0, 50.0]), K=8.0, R=1.0)
        assert lb.d >= 1
        _assert_lacunary_invariants(lb)

    def test_k_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            gaps.lacunary_basis(gaps.gap([1.0], [5.0]), K=1.5, R=1.0)

    def test_random_gaps_invariants_and_depth_bound(self):
        rng = make_rng(64, 0)
        worst = 0.0
        for _ in range(40):
            r = int(rng.integers(1, 4))
            mags = 10.0 ** rng.uniform(-1, 2, r)
            phases = np.exp(2j * np.pi * rng.random(r))
            dims = rng.integers(1, 6, r).astype(float)
            g = gaps.gap((mags * phases).tolist(), dims.tolist())
            K = float(rng.choice([2.0, 4.0, 8.0]))
            R = float(rng.choice([0.0, 1.0, 2.0]))
            lb = gaps.lacunary_basis(g, K=K, R=R)
            _assert_lacunary_invariants(lb)
            worst = max(worst, lb.depth_bound_constant())
        assert worst <= 8.0


def _assert_lacunary_invariants(lb):
    for i in range(lb.d - 1):
        assert abs(lb.primary[i]) >= lb.K * abs(lb.primary[i + 1])
    for i in range(lb.d):
        assert abs(lb.primary[i]) > lb.R
        assert abs(lb.secondary[i]) <= abs(lb.primary[i])
        assert 1.0 <= lb.ratios[i] <= 1.0 + lb.K + 1e-9


class TestLevelSet:
    def test_dispersion_one_is_trivial(self):
        g = gaps.gap([0.1], [3.0])          # contained in the unit ball
        area, stderr = gaps.level_set_measure(g, bernoulli(), 0.0, 0.1,
                                              samples=2000, seed=1)
        assert gaps.dispersion(g) == 1.0
        assert area <= math.pi + 1e-9      # bound D^{-1+Ceps} ~ 1 covers it

    def test_matches_fine_grid_oracle(self):
        g = gaps.gap([1.0], [20.0])
        dist = bernoulli()
        eps = 0.1
        area, stderr = gaps.level_set_measure(g, dist, 0.0, eps,
                                              samples=60_000, seed=2)
        d = gaps.dispersion(g)
        thr = d**eps / 20.0
        m = 2000
        xs = np.linspace(-1, 1, m)
        grid = xs[:, None] + 1j * xs[None, :]
        inside = np.abs(grid) <= 1.0
        ok = alpha_norm_many(dist, grid.ravel()).reshape(m, m) <= thr
        oracle = 4.0 * np.mean(ok & inside)
        assert abs(area - oracle) <= 3 * stderr + 2e-3

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            gaps.level_set_measure(gaps.gap([1.0], [2.0]), bernoulli(), 0.0, 0.1,
                                   samples=10, seed=0)


class TestForwardLo:
    def test_rank_one_exact_dp(self):
        g = gaps.gap([1.0], [10.0])
        p, disp = gaps.forward_lo_experiment(bernoulli(), 1.0, g)
        assert disp == 7.0
        assert p.method == "exact_enumeration"
        # independent oracle: 100-step lazy walk pmf via direct convolution
        pmf = np.array([1.0])
        kernel = np.array([0.125, 0.75, 0.125])
        for _ in range(100):
            pmf = np.convolve(pmf, kernel)
        offsets = 2.0 * (np.arange(len(pmf)) - 100)
        oracle = float(np.sum(pmf * np.exp(-math.pi * offsets**2)))
        assert p.value == pytest.approx(oracle, rel=1e-12)

    def test_zero_generator_trivial(self):
        g = gaps.gap([0.0], [5.0])
        p, disp = gaps.forward_lo_experiment(bernoulli(), 1.0, g)
        assert p.value == pytest.approx(1.0)
        assert disp == 1.0

    def test_mu_scales_dispersion_dims(self):
        g = gaps.gap([1.0], [8.0])
        _, disp = gaps.forward_lo_experiment(bernoulli(), 0.25, g)
        # sqrt(0.25) * 8 = 4 -> interval {-4..4}
        assert disp == pytest.approx(9 / 3)

    def test_tuple_length_cap(self):
        with pytest.raises(ValueError):
            gaps.forward_lo_tuple(gaps.gap([1.0], [200.0]))

    def test_ratio_to_dispersion_power_stays_bounded(self):
        # P_1 / D^{-1+eps} at eps = 0.25 shows no growth trend in L
        eps = 0.25
        ls, ratios = [], []
        for L in (4, 8, 16, 32):
            p, disp = gaps.forward_lo_experiment(bernoulli(), 1.0,
                                                 gaps.gap([1.0], [float(L)]))
            ls.append(math.log(L))
            ratios.append(math.log(p.value / disp ** (-1 + eps)))
        slope = np.polyfit(ls, ratios, 1)[0]
        assert slope <= 0.05


class TestWeakElements:
    def test_zero_is_weak_for_l_above_one(self):
        g = gaps.gap([1.0], [30.0])
        weak, size = gaps.weak_element_survey(g, k=10, l=2.0, grid=[0.0])
        assert weak.tolist() == [0.0]
        assert size == 1

    def test_l_below_one_leaves_nothing_weak(self):
        g = gaps.gap([1.0], [30.0])
        grid = np.linspace(-5, 5, 21).astype(complex)
        weak, size = gaps.weak_element_survey(g, k=10, l=1.0, grid=grid)
        assert len(weak) == 0
        assert size == 0

    def test_interval_survey_bound(self):
        g = gaps.gap([1.0], [100.0])
        d0 = gaps.dispersion(g)
        k, l = 50, 2.0
        xs = np.arange(-30, 31, 3, dtype=float)
        grid = (xs[:, None] + 1j * xs[None, :]).ravel()
        weak, net24 = gaps.weak_element_survey(g, k=k, l=l, grid=grid,
                                               cap=1_000_000)
        # net size within the lemma's shape with a scanned constant
        assert net24 <= 1 + 8.0 * l**4 / k * d0
