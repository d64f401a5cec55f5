"""Least-singular-value tail experiments.

Empirical tail frequencies of sigma_min(M + N) <= n^(-B) (equivalently
||(M+N)^(-1)|| >= n^B; singular samples count as hits), condition-number
tails, exact singularity probabilities for small discrete matrices, and
the row-distance toy experiment behind the Gaussian case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import linalg
from .ensembles import AtomDistribution, SparseSpec, sample_matrix, sample_sparse_matrix
from .smallball import ProbEstimate
from .seeding import make_rng, mix_seed

MDescriptor = Union[None, complex, np.ndarray]


@dataclass
class LsvTailResult:
    n: int
    ensemble: str
    m_descriptor: str
    B: float
    trials: int
    hits: int
    failures: int
    statistics: np.ndarray      # per-trial sigma_min (or condition number)

    @property
    def rate(self) -> float:
        return self.hits / self.trials

    @property
    def stderr(self) -> float:
        p = self.rate
        return math.sqrt(max(p * (1 - p), 1.0 / self.trials) / self.trials)

    def hits_at(self, B: float, condition: bool = False) -> int:
        """Re-threshold the shared per-trial statistics at another B."""
        thr = float(self.n) ** (B if condition else -B)
        vals = self.statistics[np.isfinite(self.statistics)]
        return int(np.sum(vals >= thr) if condition else np.sum(vals <= thr))


def _resolve_m(M: MDescriptor, n: int) -> tuple[Optional[np.ndarray], str]:
    if M is None:
        return None, "zero"
    if np.isscalar(M):
        return complex(M) * np.eye(n, dtype=np.complex128), f"scalar:{complex(M):g}"
    M = np.asarray(M, dtype=np.complex128)
    if M.shape != (n, n):
        raise ValueError("custom M must be n x n")
    return M, "custom"


def _sample(dist, n, seed, sparse):
    if sparse is None:
        return sample_matrix(dist, n, seed)
    return sample_sparse_matrix(dist, n, sparse, seed)


def lsv_tail(dist: AtomDistribution, n: int, M: MDescriptor, B: float,
             trials: int, seed: int,
             sparse: Optional[SparseSpec] = None) -> LsvTailResult:
    """Frequency of sigma_min(M + N) <= n^(-B) over seeded trials.

    Solver failures are counted separately, never silently dropped.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    m_mat, m_desc = _resolve_m(M, n)
    sigmas = np.empty(trials)
    failures = 0
    for t in range(trials):
        sample = _sample(dist, n, mix_seed(seed, "lsv", n, t), sparse)
        A = sample.entries if m_mat is None else m_mat + sample.entries
        try:
            sigmas[t] = linalg.least_singular_value(A)
        except linalg.EigenConvergenceError:
            sigmas[t] = math.nan
            failures += 1
    hits = int(np.sum(sigmas[np.isfinite(sigmas)] <= float(n) ** (-B)))
    return LsvTailResult(n, sample.descriptor, m_desc, B, trials, hits,
                         failures, sigmas)


def condition_number_experiment(dist: AtomDistribution, n: int, M: MDescriptor,
                                B: float, trials: int, seed: int,
                                sparse: Optional[SparseSpec] = None) -> LsvTailResult:
    """Frequency of ||M+N|| ||(M+N)^(-1)|| >= n^B; singular samples are inf."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    m_mat, m_desc = _resolve_m(M, n)
    kappas = np.empty(trials)
    failures = 0
    for t in range(trials):
        sample = _sample(dist, n, mix_seed(seed, "lsv", n, t), sparse)
        A = sample.entries if m_mat is None else m_mat + sample.entries
        try:
            s = linalg.singular_values(A)
            kappas[t] = math.inf if s.sigma_min == 0 else s.sigma_max / s.sigma_min
        except linalg.EigenConvergenceError:
            kappas[t] = math.nan
            failures += 1
    hits = int(np.sum(kappas[~np.isnan(kappas)] >= float(n) ** B))
    return LsvTailResult(n, sample.descriptor, m_desc, B, trials, hits,
                         failures, kappas)


def _gaussian_integer_support(vals: np.ndarray) -> bool:
    return bool(np.all(np.abs(vals.real - np.round(vals.real)) < 1e-12)
                and np.all(np.abs(vals.imag - np.round(vals.imag)) < 1e-12))


def singularity_prob(dist: AtomDistribution, n: int, trials: int = 100_000,
                     seed: int = 0, exact_cap: int = 10**8) -> ProbEstimate:
    """P(N singular): exact enumeration over all entry assignments when
    |support|^(n^2) fits under exact_cap, Monte Carlo via LU otherwise."""
    enum = dist.enumeration()
    if enum is not None and len(enum[0]) ** (n * n) <= exact_cap:
        return _singularity_exact(enum, n)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = 0
    for t in range(trials):
        sample = sample_matrix(dist, n, mix_seed(seed, "singularity", n, t))
        if linalg.lu_logdet(sample.entries).is_singular:
            hits += 1
    rate = hits / trials
    stderr = math.sqrt(max(rate * (1 - rate), 1.0 / trials) / trials)
    return ProbEstimate(rate, stderr, "monte_carlo")


def _singularity_exact(enum, n: int) -> ProbEstimate:
    vals, probs = enum
    m = len(vals)
    cells = n * n
    total = m**cells
    integer_support = _gaussian_integer_support(vals)
    singular_mass = 0.0
    chunk = 1 << 14
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.empty((len(idx), cells), dtype=np.int64)
        rem = idx.copy()
        for c in range(cells):
            digits[:, c] = rem % m
            rem //= m
        mats = vals[digits].reshape(len(idx), n, n)
        dets = np.linalg.det(mats)
        if integer_support:
            singular = (np.abs(dets.real - np.round(dets.real)) < 0.25) \
                & (np.abs(dets.imag - np.round(dets.imag)) < 0.25) \
                & (np.round(dets.real) == 0) & (np.round(dets.imag) == 0)
        else:
            singular = np.abs(dets) < 1e-10 * np.max(
                np.abs(mats).reshape(len(idx), -1), axis=1)**n
        mass = np.prod(probs[digits], axis=1)
        singular_mass += float(np.sum(mass[singular]))
    return ProbEstimate(singular_mass, 0.0, "exact_enumeration")


def row_distance_experiment(dist: AtomDistribution, n: int, trials: int,
                            seed: int, normal=None,
                            fixed_span: bool = False) -> np.ndarray:
    """Distances from a fresh row to the span of the other n-1 rows.

    With normal given (a unit vector), measures |<X, normal>| against the
    fixed hyperplane orthogonal to it instead.  fixed_span freezes the
    spanning rows once and only redraws the last row, for the invariance
    comparison.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if normal is not None:
        normal = np.asarray(normal, dtype=np.complex128)
        rng = make_rng(mix_seed(seed, "row-dist-fixed"), 0)
        rows = dist.sample(rng, (trials, n))
        return np.abs(rows @ np.conj(normal))

    dists = np.empty(trials)
    span_rows = None
    if fixed_span:
        span_rows = sample_matrix(dist, n, mix_seed(seed, "row-dist-span")).entries[:n - 1]
    for t in range(trials):
        if fixed_span:
            S = span_rows
            x = dist.sample(make_rng(mix_seed(seed, "row-dist", t), 0), n)
        else:
            sample = sample_matrix(dist, n, mix_seed(seed, "row-dist", t))
            S, x = sample.entries[:n - 1], sample.entries[n - 1]
        # distance from x to the span of the rows of S; lstsq handles rank
        # deficiency via the minimum-norm solution
        _, res, _, _ = np.linalg.lstsq(S.T, x, rcond=None)
        if res.size:
            dists[t] = math.sqrt(float(res[0]))
        else:
            dists[t] = float(np.linalg.norm(x - S.T @ np.linalg.lstsq(S.T, x, rcond=None)[0]))
    return dists
