"""Empirical spectral statistics built on matrix spectra.

The ESD of a scaled matrix as a weighted point cloud / bivariate CDF, the
uniform unit-disk law and its characteristic function, the Kolmogorov-style
sup distance between them, the Hermitian shifted ESD nu_n, log-integral
splits around a small cutoff, a finite-difference Stieltjes derivative, and
the truncated-ensemble trace-moment estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .ensembles import AtomDistribution, MatrixSample, truncate_normalize, sample_matrix
from .seeding import mix_seed


@dataclass
class Esd:
    """Eigenvalue point cloud with uniform weight 1/n."""

    points: np.ndarray

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass
class GridSpec:
    s_values: np.ndarray
    t_values: np.ndarray

    def __post_init__(self):
        self.s_values = np.asarray(self.s_values, dtype=np.float64)
        self.t_values = np.asarray(self.t_values, dtype=np.float64)
        for ax in (self.s_values, self.t_values):
            if len(ax) == 0 or np.any(np.diff(ax) <= 0):
                raise ValueError("grid axes must be nonempty and strictly increasing")


def default_grid(spacing: float = 0.01, extent: float = 2.0) -> GridSpec:
    ax = np.arange(-extent, extent + spacing / 2, spacing)
    return GridSpec(ax, ax.copy())


@dataclass
class NuEsd:
    """Squared singular values of the shifted, scaled matrix; ascending."""

    xs: np.ndarray
    z: complex


def esd_of_matrix(N: MatrixSample, sigma: float,
                  sparse_rho: Optional[float] = None) -> Esd:
    """ESD points: eigenvalues of N / (sigma sqrt(n)), or / (sigma sqrt(n rho))."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    scale = sigma * math.sqrt(N.n * (sparse_rho if sparse_rho is not None else 1.0))
    spec = linalg.eigenvalues(N.entries / scale)
    return Esd(spec.eigenvalues)


def cdf(esd: Esd, s: float, t: float) -> float:
    """mu_n(s,t): fraction of points with Re <= s and Im <= t."""
    p = esd.points
    return float(np.mean((p.real <= s) & (p.imag <= t))) if len(p) else 0.0


def _sqrt1m(x2: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(1.0 - x2, 0.0))


def _F(x: np.ndarray) -> np.ndarray:
    """Antiderivative of sqrt(1-x^2) on [-1, 1]."""
    x = np.clip(x, -1.0, 1.0)
    return 0.5 * (x * _sqrt1m(x * x) + np.arcsin(x))


def disk_region_area(s, t) -> np.ndarray:
    """Area of {|z| <= 1, Re z <= s, Im z <= t}, vectorized."""
    s = np.clip(np.asarray(s, dtype=np.float64), -1.0, 1.0)
    t = np.clip(np.asarray(t, dtype=np.float64), -1.0, 1.0)
    s, t = np.broadcast_arrays(s, t)
    c = _sqrt1m(t * t)
    # t >= 0: [-1,-c] full chord, [-c, min(s,c)] chord cut at t, [c, s] full chord
    m = np.minimum(s, c)
    a_pos = (2.0 * (_F(np.minimum(s, -c)) - _F(-1.0))
             + np.where(s > -c, t * (m + c) + _F(m) - _F(-c), 0.0)
             + np.where(s > c, 2.0 * (_F(s) - _F(c)), 0.0))
    # t < 0: only x in [-c, min(s, c)] contributes, with height t + sqrt(1-x^2)
    hi = np.minimum(s, c)
    a_neg = np.where(hi > -c, t * (hi + c) + _F(hi) - _F(-c), 0.0)
    return np.where(t >= 0, a_pos, a_neg)


def uniform_disk_cdf(s: float, t: float) -> float:
    """mu_inf(s,t): the uniform-disk bivariate CDF, in closed form."""
    return float(disk_region_area(s, t) / math.pi)


def _thin(values: np.ndarray, keep: int) -> np.ndarray:
    values = np.unique(values)
    if len(values) <= keep:
        return values
    idx = np.unique(np.linspace(0, len(values) - 1, keep).astype(int))
    return values[idx]


def sup_distance(esd: Esd, grid: Optional[GridSpec] = None,
                 cell_budget: int = 2**26) -> float:
    """sup over the evaluation grid of |mu_n(s,t) - mu_inf(s,t)|.

    The grid axes are augmented with the empirical jump coordinates
    (Re/Im of every ESD point), so the sup over the step function is exact
    up to mu_inf's smoothness across residual gaps.  When the augmented
    product would exceed cell_budget cells, the jump coordinates are
    thinned deterministically (grid axes are always kept).
    """
    grid = default_grid() if grid is None else grid
    p = esd.points
    n = len(p)
    if n == 0:
        raise ValueError("empty ESD")
    keep = max(int(math.isqrt(cell_budget)) - len(grid.s_values), 16)
    s_axis = np.union1d(grid.s_values, _thin(p.real, keep))
    t_axis = np.union1d(grid.t_values, _thin(p.imag, keep))

    order = np.argsort(p.real, kind="stable")
    re_sorted = p.real[order]
    im_sorted = p.imag[order]
    t_idx_all = np.searchsorted(t_axis, im_sorted, side="left")

    counts = np.zeros(len(t_axis) + 1, dtype=np.int64)
    best = 0.0
    start = 0
    for s in s_axis:
        stop = np.searchsorted(re_sorted, s, side="right")
        if stop > start:
            np.add.at(counts, t_idx_all[start:stop], 1)
            start = stop
        emp = np.cumsum(counts[:-1]) / n
        ref = disk_region_area(s, t_axis) / math.pi
        best = max(best, float(np.max(np.abs(emp - ref))))
    return best


def char_fn_empirical(esd: Esd, u: float, v: float) -> complex:
    """c_n(u,v) = (1/n) sum_k exp(i (u Re l_k + v Im l_k))."""
    p = esd.points
    return complex(np.mean(np.exp(1j * (u * p.real + v * p.imag))))


_DISK_NODES: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _disk_quad_nodes(n: int):
    if n not in _DISK_NODES:
        r, wr = np.polynomial.legendre.leggauss(n)
        r = 0.5 * (r + 1.0)
        wr = 0.5 * wr * r          # radial weight r dr
        theta = 2.0 * np.pi * np.arange(n) / n
        _DISK_NODES[n] = (r, wr, theta)
    return _DISK_NODES[n]


def char_fn_disk(u: float, v: float, nodes: int = 512) -> complex:
    """c(u,v) over the uniform disk by radial-angular product quadrature."""
    r, wr, theta = _disk_quad_nodes(nodes)
    x = np.outer(r, np.cos(theta))
    y = np.outer(r, np.sin(theta))
    vals = np.exp(1j * (u * x + v * y))
    integral = np.sum(wr[:, None] * vals) * (2.0 * np.pi / nodes)
    return complex(integral / np.pi)


def nu_esd(N: MatrixSample, z: complex, sigma: float) -> NuEsd:
    """Squared singular values of N/(sigma sqrt(n)) - z I, ascending."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = N.n
    shifted = N.entries / (sigma * math.sqrt(n)) - z * np.eye(n)
    s = linalg.singular_values(shifted)
    xs = np.sort(s.all_values**2)
    return NuEsd(xs, complex(z))


def log_integral_split(nu: NuEsd, eps_n: float) -> tuple[float, float]:
    """Split (1/n) sum log x at eps_n: (upper part over x > eps_n, lower part).

    Exact zeros make the lower part -inf (flagged value, not an exception).
    """
    if eps_n <= 0:
        raise ValueError("eps_n must be positive")
    xs = nu.xs
    n = len(xs)
    hi = xs > eps_n
    lo = (xs > 0) & ~hi
    upper = float(np.sum(np.log(xs[hi])) / n) if np.any(hi) else 0.0
    if np.any(xs == 0):
        return upper, -math.inf
    lower = float(np.sum(np.log(xs[lo])) / n) if np.any(lo) else 0.0
    return upper, lower


def _full_log_integral(N: MatrixSample, z: complex, sigma: float) -> float:
    """(1/n) sum log x_i = (2/n) log|det(N/(sigma sqrt n) - z I)|; -inf if singular."""
    n = N.n
    shifted = N.entries / (sigma * math.sqrt(n)) - z * np.eye(n)
    res = linalg.lu_logdet(shifted)
    if res.is_singular:
        return -math.inf
    return 2.0 * res.log_abs_det / n


def g_n_fd(N: MatrixSample, s: float, t: float, h: float, sigma: float) -> float:
    """Central finite difference in s of the full log integral at z = s + it.

    Returns NaN (flagged non-finite) when either stencil point is singular.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    left = _full_log_integral(N, complex(s - h, t), sigma)
    right = _full_log_integral(N, complex(s + h, t), sigma)
    if not (math.isfinite(left) and math.isfinite(right)):
        return math.nan
    return (right - left) / (2.0 * h)


def second_moment_check(N: MatrixSample, esd: Esd, sigma: float,
                        slack: float = 1e-9) -> bool:
    """(1/n) sum |l_k|^2 <= (1/(sigma^2 n^2)) sum |a_jk|^2 plus slack."""
    n = N.n
    lhs = float(np.mean(np.abs(esd.points) ** 2))
    rhs = float(np.sum(np.abs(N.entries) ** 2)) / (sigma**2 * n**2)
    return lhs <= rhs + slack


def trace_moment_estimate(dist: AtomDistribution, n: int, k: int, delta: float,
                          trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo E tr((T T*)^k) for the truncated-normalized ensemble T."""
    if k < 1 or trials < 1:
        raise ValueError("k and trials must be >= 1")
    tdist = truncate_normalize(dist, n, delta)
    vals = np.empty(trials)
    for t in range(trials):
        sample = sample_matrix(tdist, n, mix_seed(seed, "trace-moment", n, t))
        s = np.linalg.svd(sample.entries, compute_uv=False)
        vals[t] = float(np.sum(s ** (2 * k)))
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(vals.mean()), stderr
