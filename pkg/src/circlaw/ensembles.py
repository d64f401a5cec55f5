"""Scalar atom distributions and random matrix sampling.

The atom is a complex random variable with mean zero and finite variance;
matrices have iid copies of it as entries, optionally thinned by an
independent Bernoulli mask with density rho(n) = n^(alpha-1).  The module
also hosts the moment hypotheses used by the least-singular-value theory:
the kappa-controlled second moment check and the constructive phase
rotation that restores it for an arbitrary atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .seeding import make_rng, mix_seed

_ENTRY_STREAM = 0
_MASK_STREAM = 1
_MOMENT_SEED = mix_seed(0xA70A70, "moment-estimate")
_MOMENT_DRAWS = 200_000


class DegenerateDistributionError(ValueError):
    """Raised when an operation needs variance that the law does not have."""


@dataclass(frozen=True)
class AtomDistribution:
    """A complex scalar law, possibly wrapping another one.

    kind is one of: bernoulli, real_gaussian, complex_gaussian, discrete,
    truncated, normalized, rotated.  mean/variance are the analytic moments
    when derivable (enumeration or closed form), Monte Carlo estimates
    otherwise (moments_exact=False then).
    """

    kind: str
    mean: complex
    variance: float
    has_exact_enumeration: bool
    moments_exact: bool = True
    values: Optional[tuple] = None          # discrete
    probs: Optional[tuple] = None
    base: Optional["AtomDistribution"] = None   # wrappers
    cutoff: float = 0.0                     # truncated
    shift: complex = 0.0                    # normalized
    scale: float = 1.0
    phase: float = 0.0                      # rotated

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw iid copies as a complex128 array of the given shape."""
        if self.kind == "bernoulli":
            return (2.0 * rng.integers(0, 2, size=size) - 1.0).astype(np.complex128)
        if self.kind == "real_gaussian":
            return rng.standard_normal(size).astype(np.complex128)
        if self.kind == "complex_gaussian":
            re = rng.standard_normal(size)
            im = rng.standard_normal(size)
            return (re + 1j * im) / np.sqrt(2.0)
        if self.kind == "discrete":
            vals = np.asarray(self.values, dtype=np.complex128)
            cum = np.cumsum(np.asarray(self.probs, dtype=np.float64))
            idx = np.searchsorted(cum, rng.random(size), side="right")
            return vals[np.minimum(idx, len(vals) - 1)]
        if self.kind == "truncated":
            x = self.base.sample(rng, size)
            x[np.abs(x) > self.cutoff] = 0.0
            return x
        if self.kind == "normalized":
            return (self.base.sample(rng, size) - self.shift) / self.scale
        if self.kind == "rotated":
            return np.exp(1j * self.phase) * self.base.sample(rng, size)
        if self.kind == "thinned":
            x = self.base.sample(rng, size)
            return x * (rng.random(size) < self.scale)
        raise ValueError(f"unknown kind {self.kind!r}")

    # -- exact support ----------------------------------------------------

    def enumeration(self) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """(values, probs) of the exact law, or None when not enumerable."""
        if self.kind == "bernoulli":
            return np.array([-1.0 + 0j, 1.0 + 0j]), np.array([0.5, 0.5])
        if self.kind == "discrete":
            return (np.asarray(self.values, dtype=np.complex128),
                    np.asarray(self.probs, dtype=np.float64))
        if self.kind in ("truncated", "normalized", "rotated"):
            base = self.base.enumeration()
            if base is None:
                return None
            vals, probs = base
            if self.kind == "truncated":
                vals = np.where(np.abs(vals) > self.cutoff, 0.0, vals)
            elif self.kind == "normalized":
                vals = (vals - self.shift) / self.scale
            else:
                vals = np.exp(1j * self.phase) * vals
            return _collapse(vals, probs)
        return None

    @property
    def second_moment(self) -> float:
        """E|alpha|^2 (variance plus squared mean)."""
        return self.variance + abs(self.mean) ** 2

    def label(self) -> str:
        if self.kind == "discrete":
            return "discrete[" + ",".join(f"{v:g}" for v in self.values) + "]"
        if self.kind == "truncated":
            return f"truncated({self.base.label()},{self.cutoff:g})"
        if self.kind == "normalized":
            return f"normalized({self.base.label()},{self.shift:g},{self.scale:g})"
        if self.kind == "rotated":
            return f"rotated({self.base.label()},{self.phase:g})"
        return self.kind


def _collapse(vals: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate support points (exact complex equality)."""
    acc: dict[complex, float] = {}
    for v, p in zip(vals.tolist(), probs.tolist()):
        acc[v] = acc.get(v, 0.0) + p
    keys = np.array(sorted(acc.keys(), key=lambda z: (z.real, z.imag)), dtype=np.complex128)
    return keys, np.array([acc[k] for k in keys.tolist()])


def _enum_moments(vals: np.ndarray, probs: np.ndarray) -> tuple[complex, float]:
    m = complex(np.sum(vals * probs))
    var = float(np.sum(np.abs(vals - m) ** 2 * probs))
    return m, var


# -- constructors ----------------------------------------------------------

def bernoulli() -> AtomDistribution:
    """+1/-1 with probability 1/2 each."""
    return AtomDistribution("bernoulli", 0.0, 1.0, True)


def real_gaussian() -> AtomDistribution:
    """Standard real N(0,1)."""
    return AtomDistribution("real_gaussian", 0.0, 1.0, False)


def complex_gaussian() -> AtomDistribution:
    """Complex Gaussian with independent N(0,1/2) parts, so E|a|^2 = 1."""
    return AtomDistribution("complex_gaussian", 0.0, 1.0, False)


def discrete(values, probs) -> AtomDistribution:
    probs = np.asarray(probs, dtype=np.float64)
    values = np.asarray(values, dtype=np.complex128)
    if len(values) != len(probs) or len(values) == 0:
        raise ValueError("values and probs must be nonempty and equal length")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("probs must be nonnegative and sum to 1 within 1e-12")
    vals, ps = _collapse(values, probs)
    m, var = _enum_moments(vals, ps)
    return AtomDistribution("discrete", m, var, True,
                            values=tuple(vals.tolist()), probs=tuple(ps.tolist()))


def point_mass(value: complex) -> AtomDistribution:
    return discrete([value], [1.0])


def truncated(base: AtomDistribution, cutoff: float) -> AtomDistribution:
    """Law of alpha*I(|alpha| <= cutoff): values outside the disk map to 0."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    dist = AtomDistribution("truncated", 0.0, 0.0, base.has_exact_enumeration,
                            base=base, cutoff=float(cutoff))
    m, var, exact = _wrapper_moments(dist)
    return AtomDistribution("truncated", m, var, base.has_exact_enumeration,
                            moments_exact=exact, base=base, cutoff=float(cutoff))


def normalized(base: AtomDistribution, shift: complex, scale: float) -> AtomDistribution:
    if scale <= 0:
        raise ValueError("scale must be positive")
    m = (base.mean - shift) / scale
    var = base.variance / scale**2
    return AtomDistribution("normalized", m, var, base.has_exact_enumeration,
                            moments_exact=base.moments_exact,
                            base=base, shift=complex(shift), scale=float(scale))


def rotated(base: AtomDistribution, theta: float) -> AtomDistribution:
    """Law of e^(i*theta) * alpha."""
    return AtomDistribution("rotated", np.exp(1j * theta) * base.mean, base.variance,
                            base.has_exact_enumeration, moments_exact=base.moments_exact,
                            base=base, phase=float(theta))


def thinned(base: AtomDistribution, mu: float) -> AtomDistribution:
    """Law of alpha * I_mu (zeroed with probability 1 - mu)."""
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    enum = base.enumeration()
    if enum is not None:
        vals, probs = enum
        return discrete(np.concatenate([[0.0 + 0j], vals]),
                        np.concatenate([[1.0 - mu], probs * mu]))
    return AtomDistribution("thinned", mu * base.mean,
                            mu * base.second_moment - abs(mu * base.mean) ** 2,
                            False, moments_exact=base.moments_exact,
                            base=base, scale=float(mu))


def _wrapper_moments(dist: AtomDistribution) -> tuple[complex, float, bool]:
    """Moments of a truncated law: enumeration, closed form, or Monte Carlo."""
    enum = dist.enumeration()
    if enum is not None:
        m, var = _enum_moments(*enum)
        return m, var, True
    base, c = dist.base, dist.cutoff
    if base.kind == "real_gaussian":
        # E[x^2 I(|x|<=c)] for standard normal; the mean is 0 by symmetry.
        second = math.erf(c / math.sqrt(2)) - 2 * c * math.exp(-c * c / 2) / math.sqrt(2 * math.pi)
        return 0.0, second, True
    if base.kind == "complex_gaussian":
        # |a|^2 ~ Exp(1): E[u I(u<=t)] = 1 - (1+t)e^(-t) with t = c^2.
        t = c * c
        return 0.0, 1.0 - (1.0 + t) * math.exp(-t), True
    rng = make_rng(_MOMENT_SEED, 0)
    x = dist.sample(rng, _MOMENT_DRAWS)
    m = complex(x.mean())
    var = float(np.mean(np.abs(x - m) ** 2))
    return m, var, False


# -- sparse spec and matrix sampling ----------------------------------------

@dataclass(frozen=True)
class SparseSpec:
    """Density exponent for sparse ensembles: rho(n) = n^(alpha-1)."""

    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")

    def rho(self, n: int) -> float:
        return float(n) ** (self.alpha - 1.0)


@dataclass(frozen=True)
class MatrixSample:
    n: int
    entries: np.ndarray
    seed: int
    descriptor: str


def sample_matrix(dist: AtomDistribution, n: int, seed: int) -> MatrixSample:
    """n x n matrix of iid atom draws; deterministic in (dist, n, seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    entries = dist.sample(make_rng(seed, _ENTRY_STREAM), (n, n))
    return MatrixSample(n, entries, seed, f"dense:{dist.label()}")


def sparse_mask(n: int, rho: float, seed: int) -> np.ndarray:
    """Bernoulli(rho) 0/1 mask, drawn from a stream independent of entries."""
    return (make_rng(seed, _MASK_STREAM).random((n, n)) < rho).astype(np.float64)


def sample_sparse_matrix(dist: AtomDistribution, n: int, sparse: SparseSpec,
                         seed: int) -> MatrixSample:
    """Entry-wise product of an independent Bernoulli(rho(n)) mask and atom draws.

    The mask uses its own Philox stream, so alpha = 1 reproduces the dense
    sample bit for bit.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dense = sample_matrix(dist, n, seed)
    entries = dense.entries * sparse_mask(n, sparse.rho(n), seed)
    return MatrixSample(n, entries, seed,
                        f"sparse(alpha={sparse.alpha:g}):{dist.label()}")


# -- controlled second moment ------------------------------------------------

@dataclass
class ControlledMomentReport:
    upper_ok: bool
    lower_ok: bool
    worst_ratio: float
    kappa: float
    second_moment: float
    stderr: float = 0.0          # 0 for exact (enumeration) checks
    worst_point: Optional[tuple] = None

    @property
    def ok(self) -> bool:
        return self.upper_ok and self.lower_ok


def default_zw_grid() -> list[tuple[complex, complex]]:
    """16 x 16 log-spaced (z, w) pairs with |z|,|w| <= 10 and Re(z) != 0."""
    mags = np.logspace(-1, 1, 4)
    z_phases = [0.0, np.pi / 3, 2 * np.pi / 3, np.pi]      # all have Re != 0
    w_phases = [0.0, np.pi / 2, np.pi, 3 * np.pi / 2]
    zs = [m * np.exp(1j * p) for m in mags for p in z_phases]
    ws = [m * np.exp(1j * p) for m in mags for p in w_phases]
    return [(z, w) for z, w in zip(np.repeat(zs, 16), np.tile(ws, 16))]


def check_controlled_moment(dist: AtomDistribution, kappa: float,
                            grid: Optional[list[tuple[complex, complex]]] = None,
                            mc_draws: int = 100_000,
                            mc_sigmas: float = 5.0) -> ControlledMomentReport:
    """Check E|a|^2 <= kappa and E Re(z a - w)^2 I(|a| <= kappa) >= Re(z)^2 / kappa.

    Exact expectations for enumerable laws, Monte Carlo with a mc_sigmas
    guard band otherwise.  Violations are reported, never raised.
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    grid = default_zw_grid() if grid is None else list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")

    enum = dist.enumeration()
    if enum is not None:
        vals, probs = enum
        second = float(np.sum(np.abs(vals) ** 2 * probs))
        inside = np.abs(vals) <= kappa
        stderr_lhs = np.zeros(len(grid))
        lhs = np.empty(len(grid))
        for i, (z, w) in enumerate(grid):
            re = np.real(z * vals - w)
            lhs[i] = float(np.sum(re**2 * probs * inside))
        stderr_second = 0.0
    else:
        x = dist.sample(make_rng(mix_seed(0xC0117011, "ctrl-moment"), 0), mc_draws)
        a2 = np.abs(x) ** 2
        second = float(a2.mean())
        stderr_second = float(a2.std(ddof=1) / math.sqrt(mc_draws))
        inside = np.abs(x) <= kappa
        lhs = np.empty(len(grid))
        stderr_lhs = np.empty(len(grid))
        for i, (z, w) in enumerate(grid):
            term = np.real(z * x - w) ** 2 * inside
            lhs[i] = float(term.mean())
            stderr_lhs[i] = float(term.std(ddof=1) / math.sqrt(mc_draws))

    upper_ok = second <= kappa + mc_sigmas * stderr_second + 1e-12
    re_z2 = np.array([np.real(z) ** 2 for z, _ in grid])
    ratios = lhs * kappa / re_z2
    slack = lhs - re_z2 / kappa + mc_sigmas * stderr_lhs + 1e-12 * (1.0 + re_z2)
    lower_ok = bool(np.all(slack >= 0))
    worst = int(np.argmin(ratios))
    return ControlledMomentReport(
        upper_ok=bool(upper_ok), lower_ok=lower_ok,
        worst_ratio=float(ratios[worst]), kappa=kappa, second_moment=second,
        stderr=float(np.max(stderr_lhs)) if len(grid) else 0.0,
        worst_point=grid[worst])


def find_phase_rotation(dist: AtomDistribution, max_kappa: float = 2.0**30,
                        mc_draws: int = 100_000) -> tuple[float, float]:
    """Phase theta and kappa such that e^(i*theta)*dist is kappa-controlled.

    Estimates the covariance of (Re, Im) of the centered law conditioned on
    |a| <= kappa, rotates the leading eigenvector onto the real axis, and
    returns the smallest power of two kappa whose grid check passes.
    """
    if dist.variance < 1e-12 and dist.moments_exact:
        raise DegenerateDistributionError("variance below 1e-12")
    enum = dist.enumeration()
    if enum is None:
        draws = dist.sample(make_rng(mix_seed(0xF00D, "phase-rotation"), 0), mc_draws)
        if float(np.mean(np.abs(draws - draws.mean()) ** 2)) < 1e-12:
            raise DegenerateDistributionError("variance estimate below 1e-12")

    kappa = 1.0
    while kappa <= max_kappa:
        theta = _leading_axis_angle(dist, kappa, enum, mc_draws)
        if theta is not None:
            report = check_controlled_moment(rotated(dist, theta), kappa)
            if report.ok:
                return theta, kappa
        kappa *= 2.0
    raise RuntimeError("no controlled kappa found up to max_kappa")


def _leading_axis_angle(dist, kappa, enum, mc_draws) -> Optional[float]:
    """-arg of the leading covariance eigenvector of the |a|<=kappa law."""
    if enum is not None:
        vals, probs = enum
        keep = np.abs(vals) <= kappa
        mass = float(probs[keep].sum())
        if mass <= 0:
            return None
        v, p = vals[keep], probs[keep] / mass
        m = complex(np.sum(v * p))
        re, im = np.real(v - m), np.imag(v - m)
        cov = np.array([[np.sum(re * re * p), np.sum(re * im * p)],
                        [np.sum(re * im * p), np.sum(im * im * p)]])
    else:
        x = dist.sample(make_rng(mix_seed(0xF00D, "phase-rotation"), 1), mc_draws)
        x = x[np.abs(x) <= kappa]
        if len(x) < 2:
            return None
        x = x - x.mean()
        re, im = np.real(x), np.imag(x)
        cov = np.array([[np.mean(re * re), np.mean(re * im)],
                        [np.mean(re * im), np.mean(im * im)]])
    if cov[0, 0] + cov[1, 1] < 1e-12:
        return None
    w, vecs = np.linalg.eigh(cov)
    lead = vecs[:, int(np.argmax(w))]
    theta = -math.atan2(lead[1], lead[0])
    # eigenvectors are defined up to sign: canonicalize to (-pi/2, pi/2]
    while theta <= -np.pi / 2:
        theta += np.pi
    while theta > np.pi / 2:
        theta -= np.pi
    return theta


class DegenerateTruncationError(ValueError):
    """Truncation left no variance to normalize away."""


def truncate_normalize(dist: AtomDistribution, n: int, delta: float) -> AtomDistribution:
    """Truncated-and-normalized law (a*I(|a| <= n^delta) - m) / sqrt(E|.|^2 - |m|^2).

    The cutoff uses the closed event |a| <= n^delta so that laws already
    supported on the cutoff circle (Bernoulli at n = 1) pass through
    unchanged.  Result has mean 0, variance 1, support O(n^delta).
    """
    if not 0 < delta < 0.25:
        raise ValueError("delta must lie in (0, 1/4)")
    if n < 1:
        raise ValueError("n must be >= 1")
    trunc = truncated(dist, float(n) ** delta)
    if trunc.variance < 1e-12:
        raise DegenerateTruncationError(
            f"E|a-hat|^2 = {trunc.variance:g} below 1e-12 after truncation")
    return normalized(trunc, trunc.mean, math.sqrt(trunc.variance))
