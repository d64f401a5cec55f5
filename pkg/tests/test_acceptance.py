"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see per-criterion lines and
timings.  All tolerances are pinned here; runtime budgets are asserted
against the wall clock.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import stats

from circlaw import gaps, inverse_lo, lsv, pipeline, smallball as sb, spectral
from circlaw.ensembles import bernoulli, complex_gaussian, real_gaussian
from circlaw.linalg import eigenvalues, lu_logdet
from circlaw.seeding import make_rng, mix_seed

import props
from test_linalg import char_poly_roots, matched_distance


@contextmanager
def criterion(number: int, description: str, budget_s: float):
    start = time.perf_counter()
    failed = None
    try:
        yield
    except BaseException as exc:
        failed = exc
        raise
    finally:
        elapsed = time.perf_counter() - start
        status = "FAIL" if failed else "PASS"
        print(f"[{status}] criterion {number} ({elapsed:6.2f}s / budget "
              f"{budget_s:g}s): {description}")
        if failed is None:
            assert elapsed < budget_s, f"criterion {number} over budget"


def test_criterion_01_exact_anticoncentration_oracle():
    with criterion(1, "exact small-ball oracle for Bernoulli all-ones tuples", 1.0):
        for n in range(4, 21, 2):
            p = sb.small_ball_prob(bernoulli(), np.ones(n), 0.5)
            assert p.method == "exact_enumeration"
            assert p.value == math.comb(n, n // 2) / 2**n
            assert 0.5 <= math.sqrt(n) * p.value <= 1.0


def test_criterion_02_fourier_against_exact_and_mc():
    with criterion(2, "Fourier quadrature vs exact enumeration and Monte Carlo", 30.0):
        rng = make_rng(2002, 0)
        tuples = [np.ones(k) for k in (1, 3, 7, 12)]
        for _ in range(4):
            k = int(rng.integers(2, 13))
            tuples.append(rng.integers(-2, 3, k).astype(complex))
        for mu in (0.25, 0.5, 1.0):
            for v in tuples:
                exact = sb.conc_prob_exact(bernoulli(), mu, v)
                four = sb.conc_prob_fourier(bernoulli(), mu, v)
                assert exact is not None
                assert abs(four.value - exact.value) < 1e-6
        for v in (np.ones(4), np.array([1.0, 0.5 + 0.5j, 2.0])):
            four = sb.conc_prob_fourier(complex_gaussian(), 0.5, v)
            mc = sb.conc_prob_mc(complex_gaussian(), 0.5, v, trials=1_000_000,
                                 seed=77)
            assert abs(four.value - mc.value) <= 3 * (four.stderr + mc.stderr)


def test_criterion_03_lemma_property_suite():
    with criterion(3, "P_mu, concball and alpha-norm lemma suite on 200 instances",
                   120.0):
        rng = np.random.default_rng(30003)
        for i in range(200):
            dist = props.random_dist(rng)
            props.check_pmu_properties(dist, rng, seed=50_000 + 31 * i)
            props.check_concball(dist, rng, seed=60_000 + 31 * i)
            props.check_concball_sparse(dist, rng, seed=70_000 + 31 * i)
            props.check_alpha_norm_props(dist, rng)
            props.check_f_vs_norm(dist, rng)
        assert props.check_alpha_norm_lower_bound(bernoulli()) >= 2**-10
        assert props.check_alpha_norm_lower_bound(complex_gaussian()) >= 2**-10


def test_criterion_04_gap_oracle_suite():
    with criterion(4, "GAP enumeration/properness/dispersion oracles + lacunary",
                   60.0):
        assert not gaps.is_proper(gaps.gap([1.0, 2.0], [1.0, 1.0]))
        assert gaps.is_proper(gaps.gap([1.0, 3.0], [1.0, 1.0]))
        assert len(gaps.enumerate_gap(gaps.gap([1.0, 2.0], [1.0, 1.0])).distinct_points) == 7
        assert len(gaps.enumerate_gap(gaps.gap([1.0, 1.0j], [1.0, 1.0])).distinct_points) == 9
        for s in (1, 2, 5, 10, 37):
            assert gaps.dispersion(gaps.gap([1.0], [float(s)])) == (2 * s + 1) / 3

        rng = make_rng(40004, 0)
        worst_fit = 0.0
        for _ in range(100):
            r = int(rng.integers(1, 4))
            mags = 10.0 ** rng.uniform(-1, 2, r)
            phases = np.exp(2j * np.pi * rng.random(r))
            dims = rng.integers(1, 6, r).astype(float)
            K = float(rng.choice([2.0, 4.0, 8.0]))
            R = float(rng.choice([0.0, 1.0, 2.0]))
            lb = gaps.lacunary_basis(gaps.gap((mags * phases).tolist(),
                                              dims.tolist()), K=K, R=R)
            for i in range(lb.d - 1):
                assert abs(lb.primary[i]) >= K * abs(lb.primary[i + 1])
            for i in range(lb.d):
                assert abs(lb.primary[i]) > R
                assert abs(lb.secondary[i]) <= abs(lb.primary[i])
            worst_fit = max(worst_fit, lb.depth_bound_constant())
        assert worst_fit <= 8.0


def test_criterion_05_forward_lo_trend():
    with criterion(5, "forward Littlewood-Offord decay slope over rank-1 GAPs",
                   120.0):
        logs = []
        for L in (4, 8, 16, 32):
            p, disp = gaps.forward_lo_experiment(bernoulli(), 1.0,
                                                 gaps.gap([1.0], [float(L)]))
            assert p.method == "exact_enumeration"
            logs.append((math.log(disp), math.log(p.value)))
        xs = np.array([x for x, _ in logs])
        ys = np.array([y for _, y in logs])
        slope = np.polyfit(xs, ys, 1)[0]
        assert slope <= -0.75


def test_criterion_06_eigensolver_validation():
    with criterion(6, "eigenvalues vs characteristic-polynomial roots, 500 matrices",
                   60.0):
        rng = make_rng(60006, 0)
        tol = 1e-10
        for i in range(500):
            n = 2 + i % 7
            A = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            res = eigenvalues(A, tol=tol)
            assert matched_distance(res.eigenvalues, char_poly_roots(A)) < 1e-6
            assert abs(res.eigenvalues.sum() - np.trace(A)) <= n * tol * np.linalg.norm(A, "fro")
            ld = lu_logdet(A)
            if not ld.is_singular and np.linalg.cond(A) < 1e6:
                assert np.sum(np.log(np.abs(res.eigenvalues))) == pytest.approx(
                    ld.log_abs_det, rel=1e-6)


def test_criterion_07_singularity_oracle():
    with criterion(7, "Bernoulli singularity probabilities, exact and MC", 60.0):
        exact2 = lsv.singularity_prob(bernoulli(), 2)
        assert exact2.method == "exact_enumeration" and exact2.value == 0.5
        mc2 = _mc_singularity(2, trials=100_000, seed=7007)
        assert abs(mc2 - 0.5) <= 0.005
        exact3 = lsv.singularity_prob(bernoulli(), 3)
        assert exact3.value == 320 / 512
        trials3 = 20_000
        mc3 = _mc_singularity(3, trials=trials3, seed=7008)
        sigma = math.sqrt(exact3.value * (1 - exact3.value) / trials3)
        assert abs(mc3 - exact3.value) <= 3 * sigma


def _mc_singularity(n, trials, seed):
    # vectorized determinant over the trial axis; integer dets are exact
    rng = make_rng(seed, 0)
    mats = (2.0 * rng.integers(0, 2, size=(trials, n, n)) - 1.0)
    dets = np.linalg.det(mats)
    return float(np.mean(np.abs(dets) < 0.5))


def _sup_distance_table(path):
    by_n = {}
    for r in pipeline.read_rows(path):
        if r["statistic"] == "sup_distance":
            by_n.setdefault(int(r["n"]), []).append(float(r["value"]))
    ns = sorted(by_n)
    means = np.array([np.mean(by_n[n]) for n in ns])
    serrs = np.array([np.std(by_n[n], ddof=1) / math.sqrt(len(by_n[n])) for n in ns])
    return ns, means, serrs


def _assert_decreasing_with_one_soft_inversion(means, serrs):
    inversions = 0
    for i in range(len(means) - 1):
        if means[i + 1] >= means[i]:
            inversions += 1
            assert means[i + 1] - means[i] <= 2 * (serrs[i] + serrs[i + 1])
    assert inversions <= 1


def test_criterion_08_circular_law_convergence(tmp_path):
    with criterion(8, "dense circular-law convergence and rate fit", 900.0):
        for name, ensemble in (("gaussian", complex_gaussian()),
                               ("bernoulli", bernoulli())):
            cfg = pipeline.ExperimentConfig(
                ensemble=ensemble, n_list=(64, 128, 256, 512), trials=5,
                seed=20240808, grid_spacing=0.02, quiet=True)
            path = pipeline.run_circlaw(cfg, out=str(tmp_path / f"c8_{name}.csv"))
            ns, means, serrs = _sup_distance_table(path)
            assert ns == [64, 128, 256, 512]
            _assert_decreasing_with_one_soft_inversion(means, serrs)
            assert means[-1] < 0.1
            eta, r2 = pipeline.fit_rate(path)
            assert eta > 0.2
            assert r2 > 0.9


def test_criterion_09_sparse_circular_law(tmp_path):
    with criterion(9, "sparse circular law, matched alpha=1 and alpha->0 checks",
                   600.0):
        cfg = pipeline.ExperimentConfig(
            ensemble=complex_gaussian(), n_list=(512,), trials=5,
            seed=20240809, grid_spacing=0.02, sparse=pipeline.SparseSpec(0.8),
            quiet=True)
        path = pipeline.run_sparse_circlaw(cfg, out=str(tmp_path / "c9_a08.csv"))
        _, means, _ = _sup_distance_table(path)
        assert means[0] < 0.15

        cfg_dense = pipeline.ExperimentConfig(
            ensemble=complex_gaussian(), n_list=(256,), trials=5,
            seed=20240809, grid_spacing=0.02, quiet=True)
        dense_path = pipeline.run_circlaw(cfg_dense, out=str(tmp_path / "c9_d.csv"))
        cfg_dense.sparse = pipeline.SparseSpec(1.0)
        sparse_path = pipeline.run_sparse_circlaw(cfg_dense,
                                                  out=str(tmp_path / "c9_s.csv"))
        dense_vals = [float(r["value"]) for r in pipeline.read_rows(dense_path)
                      if r["statistic"] == "sup_distance"]
        sparse_vals = [float(r["value"]) for r in pipeline.read_rows(sparse_path)
                       if r["statistic"] == "sup_distance"]
        assert stats.ks_2samp(dense_vals, sparse_vals).pvalue > 0.01

        n, trials = 200, 50
        a0 = pipeline.degenerate_alpha0_check(n, trials, seed=909,
                                              out=str(tmp_path / "c9_a0.csv"))
        rows = pipeline.read_rows(a0)
        zr = np.array([float(r["value"]) for r in rows
                       if r["statistic"] == "zero_row_fraction"])
        oa = np.array([float(r["value"]) for r in rows
                       if r["statistic"] == "origin_atom_fraction"])
        p = math.exp(-1)
        sigma = math.sqrt(p * (1 - p) / (n * trials))
        assert abs(zr.mean() - p) <= 5 * sigma + 1e-3   # (1-1/n)^n vs e^{-1} bias
        assert 0.32 <= zr.mean() <= 0.42
        assert oa.mean() >= zr.mean() - 2 * sigma


def test_criterion_10_lsv_tails():
    with criterion(10, "least-singular-value tails, row distances, monotonicity",
                   600.0):
        for dist in (bernoulli(), complex_gaussian()):
            for M in (None, -(1 + 1j)):
                for n in (50, 100):
                    res = lsv.lsv_tail(dist, n, M, B=3.0, trials=200, seed=1010)
                    assert res.failures == 0
                    assert res.hits == 0

        d = lsv.row_distance_experiment(real_gaussian(), 20, trials=10_000,
                                        seed=1011)
        assert stats.kstest(d, stats.halfnorm.cdf).statistic < 0.05

        shared = lsv.lsv_tail(complex_gaussian(), 40, None, B=0.5, trials=100,
                              seed=1012)
        hits = [shared.hits_at(b) for b in (0.25, 0.5, 0.75, 1.0, 2.0, 3.0)]
        assert all(a >= b for a, b in zip(hits, hits[1:]))


def test_criterion_11_pipeline_determinism(tmp_path):
    with criterion(11, "byte-identical CSVs for identical (config, seed)", 120.0):
        cfg = pipeline.ExperimentConfig(
            ensemble=bernoulli(), n_list=(16, 32), trials=3, seed=111,
            grid_spacing=0.05, quiet=True)
        a = pipeline.run_circlaw(cfg, out=str(tmp_path / "d1.csv")).read_bytes()
        b = pipeline.run_circlaw(cfg, out=str(tmp_path / "d2.csv")).read_bytes()
        assert a == b
        cfg.jobs = 8
        c = pipeline.run_circlaw(cfg, out=str(tmp_path / "d3.csv")).read_bytes()
        assert a == c
        cfg_sp = pipeline.ExperimentConfig(
            ensemble=bernoulli(), n_list=(16, 32), trials=3, seed=111,
            grid_spacing=0.05, sparse=pipeline.SparseSpec(0.7), quiet=True)
        s1 = pipeline.run_sparse_circlaw(cfg_sp, out=str(tmp_path / "s1.csv")).read_bytes()
        s2 = pipeline.run_sparse_circlaw(cfg_sp, out=str(tmp_path / "s2.csv")).read_bytes()
        assert s1 == s2


def test_criterion_12_secondary_note():
    # The plots component is a separate package (plots/) with its own test
    # suite; the primary criteria above run with it entirely absent.
    print("[NOTE] criterion 12: covered by the plots package test suite "
          "(plots/tests), which runs without importing this package")
