"""Symmetric generalized arithmetic progressions and their combinatorics.

A GAP is the set of integer combinations sum n_i v_i with |n_i| <= L_i.
Enumeration is exact (scaled Gaussian-integer arithmetic) whenever the
generators are Gaussian rationals with small denominators, since point
counts and properness are discontinuous in the generators; otherwise
complex floats with a 1e-9 dedup lattice.  Balls are closed throughout.

On top of enumeration: properness, dilation, dispersion, greedy epsilon
nets, the pigeonhole counting check, the greedy lacunary-basis extraction,
level-set measure estimation, the forward Littlewood-Offord experiment and
the weak-element survey.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .ensembles import AtomDistribution
from .smallball import (ProbEstimate, alpha_norm_many, conc_prob_exact,
                        conc_prob_fourier, conc_prob_mc)
from .seeding import make_rng, mix_seed

_DEDUP = 1e-9
_MAX_DENOM = 10**6
_MAX_SCALED = 2.0**52


class GapSizeError(ValueError):
    """Enumeration would exceed the cap; carries the offending product."""

    def __init__(self, total: int, cap: int):
        super().__init__(f"GAP box has {total} combinations, over the cap {cap}")
        self.total = total
        self.cap = cap


@dataclass(frozen=True)
class Gap:
    generators: tuple
    dims: tuple

    def __post_init__(self):
        if len(self.generators) != len(self.dims) or len(self.dims) == 0:
            raise ValueError("generators and dims must be nonempty, equal length")
        if any(L <= 0 for L in self.dims):
            raise ValueError("dims must be positive")
        object.__setattr__(self, "generators",
                           tuple(complex(g) for g in self.generators))
        object.__setattr__(self, "dims", tuple(float(L) for L in self.dims))

    @property
    def rank(self) -> int:
        return len(self.generators)

    def box_radii(self) -> np.ndarray:
        return np.floor(np.asarray(self.dims)).astype(np.int64)

    def multiplicity_total(self) -> int:
        return int(np.prod(2 * self.box_radii() + 1, dtype=object))


@dataclass
class GapPoints:
    distinct_points: np.ndarray
    multiplicity_total: int
    exact_arithmetic: bool


def gap(generators: Sequence[complex], dims) -> Gap:
    """Convenience constructor; scalar dims broadcast to every generator."""
    if np.isscalar(dims):
        dims = [dims] * len(generators)
    return Gap(tuple(generators), tuple(dims))


def dilate(g: Gap, t: float) -> Gap:
    if t <= 0:
        raise ValueError("dilation factor must be positive")
    return Gap(g.generators, tuple(t * L for L in g.dims))


def _rational_scale(generators: tuple) -> Optional[int]:
    """Common denominator if all parts are small-denominator rationals."""
    denom = 1
    for z in generators:
        for part in (z.real, z.imag):
            fr = Fraction(part)
            if fr.denominator > _MAX_DENOM:
                return None
            denom = denom * fr.denominator // math.gcd(denom, fr.denominator)
            if denom > 10**9:
                return None
    return denom


def enumerate_gap(g: Gap, cap: int = 1_000_000) -> GapPoints:
    """All integer combinations, deduplicated.

    Exact path: generators scaled to Gaussian integers (fits float64
    exactly below 2^52), dedup by exact equality.  Float path: dedup by
    rounding to the 1e-9 lattice.
    """
    total = g.multiplicity_total()
    if total > cap:
        raise GapSizeError(total, cap)
    radii = g.box_radii()
    scale = _rational_scale(g.generators)
    gens = np.asarray(g.generators, dtype=np.complex128)
    if scale is not None:
        scaled = gens * scale
        if np.max(np.abs(scaled.real)) * np.max(radii + 1) * g.rank < _MAX_SCALED \
           and np.max(np.abs(scaled.imag)) * np.max(radii + 1) * g.rank < _MAX_SCALED:
            pts = _box_sums(np.round(scaled.real) + 1j * np.round(scaled.imag), radii)
            return GapPoints(np.unique(pts) / scale, total, True)
    pts = _box_sums(gens, radii)
    key = np.round(pts.real / _DEDUP) + 1j * np.round(pts.imag / _DEDUP)
    _, idx = np.unique(key, return_index=True)
    return GapPoints(pts[np.sort(idx)], total, False)


def _box_sums(gens: np.ndarray, radii: np.ndarray) -> np.ndarray:
    pts = np.zeros(1, dtype=np.complex128)
    for gen, r in zip(gens, radii):
        coeffs = np.arange(-r, r + 1, dtype=np.float64)
        pts = (pts[:, None] + gen * coeffs[None, :]).ravel()
    return pts


def is_proper(g: Gap, cap: int = 1_000_000) -> bool:
    pts = enumerate_gap(g, cap)
    return len(pts.distinct_points) == pts.multiplicity_total


def _count_in_ball(points: np.ndarray, radius: float, exact: bool) -> int:
    tol = 0.0 if exact else _DEDUP
    return int(np.sum(np.abs(points) <= radius + tol))


def dispersion(g: Gap, cap: int = 1_000_000) -> float:
    """D(Q) = #Q / #(Q intersect closed B(0,1)); 0 is always in Q."""
    pts = enumerate_gap(g, cap)
    inside = _count_in_ball(pts.distinct_points, 1.0, pts.exact_arithmetic)
    return len(pts.distinct_points) / inside


def epsilon_net(points, eps: float) -> np.ndarray:
    """Greedy maximal eps-separated subset, processed in input order.

    The result is eps-separated and every input point lies within eps of
    some net point.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    points = np.asarray(points, dtype=np.complex128)
    kept: list[complex] = []
    for z in points.tolist():
        if all(abs(z - w) > eps for w in kept):
            kept.append(z)
    return np.array(kept, dtype=np.complex128)


def pigeonhole_check(points, omega_centers, r: float) -> bool:
    """#((Q-Q) in B(0,r)) >= #(Q in union of M balls of radius r/2) / M."""
    q = np.asarray(points, dtype=np.complex128)
    centers = np.asarray(omega_centers, dtype=np.complex128)
    if len(centers) == 0:
        return True
    in_omega = np.zeros(len(q), dtype=bool)
    for c in centers:
        in_omega |= np.abs(q - c) <= r / 2.0
    diffs = np.unique((q[:, None] - q[None, :]).ravel())
    lhs = int(np.sum(np.abs(diffs) <= r))
    return lhs >= int(in_omega.sum()) / len(centers)


@dataclass
class LacunaryBasis:
    primary: np.ndarray     # w_1 .. w_d, |w_i| >= K |w_{i+1}|
    secondary: np.ndarray   # w'_1 .. w'_d, |w'_i| <= |w_i|
    ratios: np.ndarray      # K_i = 1 + K |Im(w'_i / w_i)|
    d: int
    K: float
    R: float
    count_total: int = 0
    count_in_R: int = 0

    def many_vectors_ratio(self) -> float:
        """#Q / (prod(K K_i) * #(Q in B(0,R))) — the fitted factor of the
        counting bound; reported, never asserted."""
        prod = float(np.prod(self.K * self.ratios)) if self.d else 1.0
        return self.count_total / (prod * max(self.count_in_R, 1))

    def depth_bound_constant(self) -> float:
        """Fitted c in d <= c (1 + log(#Q / #(Q in B(0,R))) / log K)."""
        ratio = self.count_total / max(self.count_in_R, 1)
        return self.d / (1.0 + math.log(max(ratio, 1.0)) / math.log(self.K))


def _pick_max(points: np.ndarray, score: np.ndarray) -> complex:
    """Max by score with deterministic (Re, Im) tie-breaking."""
    best = np.max(score)
    tied = points[score >= best]
    idx = np.lexsort((tied.imag, tied.real))
    return complex(tied[idx[-1]])


def lacunary_basis(g: Gap, K: float, R: float, cap: int = 1_000_000,
                   c_r: float = 8.0) -> LacunaryBasis:
    """Greedy extraction of a K-lacunary primary/secondary basis above radius R.

    Iterates: restrict to the ball of radius |w_{i-1}|/K, stop when the
    remainder sits inside B(0,R), else take the largest point as w_i and
    the K_i-maximizing point as w'_i.  The iteration count is capped at
    d0 = c_r (1 + log(#Q / #(Q in B(0,R))) / log K).
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    if R < 0:
        raise ValueError("R must be >= 0")
    pts = enumerate_gap(g, cap)
    points = pts.distinct_points
    count_total = len(points)
    count_in_r = _count_in_ball(points, R, pts.exact_arithmetic)
    mags = np.abs(points)
    ball_tol = 0.0 if pts.exact_arithmetic else _DEDUP

    primary: list[complex] = []
    secondary: list[complex] = []
    ratios: list[float] = []
    ratio = count_total / max(count_in_r, 1)
    d0 = int(math.ceil(c_r * (1.0 + math.log(max(ratio, 1.0)) / math.log(K))))

    cand = points
    cand_mags = mags
    for _ in range(max(d0, 1)):
        if primary:
            # test K|q| <= |w_prev| directly so lacunarity holds exactly
            keep = K * cand_mags <= abs(primary[-1])
            cand, cand_mags = cand[keep], cand_mags[keep]
        if len(cand) == 0 or np.all(cand_mags <= R + ball_tol):
            break
        w = _pick_max(cand, cand_mags)
        k_scores = 1.0 + K * np.abs(np.imag(cand / w))
        w2 = _pick_max(cand, k_scores)
        primary.append(w)
        secondary.append(w2)
        ratios.append(1.0 + K * abs((w2 / w).imag))
    return LacunaryBasis(np.array(primary, dtype=np.complex128),
                         np.array(secondary, dtype=np.complex128),
                         np.array(ratios), len(primary), K, R,
                         count_total, count_in_r)


def level_set_measure(g: Gap, dist: AtomDistribution, xi0: complex, eps: float,
                      samples: int, seed: int,
                      cap: int = 1_000_000) -> tuple[float, float]:
    """Monte Carlo area of {xi in B(xi0,1): ||xi v_i||_a <= D(Q)^eps / L_i for all i}."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    D = dispersion(g, cap)
    rng = make_rng(mix_seed(seed, "level-set"), 0)
    rr = np.sqrt(rng.random(samples))
    th = 2.0 * np.pi * rng.random(samples)
    xi = xi0 + rr * np.exp(1j * th)
    ok = np.ones(samples, dtype=bool)
    for v, L in zip(g.generators, g.dims):
        ok &= alpha_norm_many(dist, xi * v) <= D**eps / L
    p = float(np.mean(ok))
    area = math.pi * p
    stderr = math.pi * math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    return area, stderr


def forward_lo_tuple(g: Gap) -> np.ndarray:
    """Concatenation of round(L_i^2) copies of each generator."""
    reps = [int(round(L * L)) for L in g.dims]
    if sum(reps) > 10_000:
        raise ValueError("sum of L_i^2 exceeds the 1e4 tuple length cap")
    return np.repeat(np.asarray(g.generators, dtype=np.complex128), reps)


def forward_lo_experiment(dist: AtomDistribution, mu: float, g: Gap,
                          method: str = "auto", cap: int = 1_000_000,
                          trials: int = 100_000, seed: int = 0
                          ) -> tuple[ProbEstimate, float]:
    """P_mu of the L_i^2-replicated tuple and D of the sqrt(mu)-scaled GAP."""
    v = forward_lo_tuple(g)
    scaled = dilate(g, math.sqrt(mu))
    disp = dispersion(scaled, cap)
    if method == "fourier":
        p = conc_prob_fourier(dist, mu, v)
    elif method == "mc":
        p = conc_prob_mc(dist, mu, v, trials=trials, seed=seed)
    elif method == "auto":
        p = conc_prob_exact(dist, mu, v, cap)
        if p is None:
            p = conc_prob_fourier(dist, mu, v)
    else:
        raise ValueError(f"unknown method {method!r}")
    return p, disp


def weak_element_survey(g: Gap, k: int, l: float, grid,
                        cap: int = 1_000_000) -> tuple[np.ndarray, int]:
    """Classify grid points z as weak (D(Q + GAP(z,k)) < l D(Q)); 24-net them.

    Returns (weak points, size of their greedy 24-net).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    base = enumerate_gap(g, cap)
    d0 = len(base.distinct_points) / _count_in_ball(base.distinct_points, 1.0,
                                                    base.exact_arithmetic)
    up = base.distinct_points
    total_ext = base.multiplicity_total * (2 * k + 1)
    if total_ext > cap:
        raise GapSizeError(total_ext, cap)
    js = np.arange(-k, k + 1, dtype=np.float64)
    weak: list[complex] = []
    for z in np.asarray(grid, dtype=np.complex128).tolist():
        ext = (up[:, None] + z * js[None, :]).ravel()
        key = np.round(ext.real / _DEDUP) + 1j * np.round(ext.imag / _DEDUP)
        uniq_key, idx = np.unique(key, return_index=True)
        pts = ext[idx]
        disp = len(pts) / max(_count_in_ball(pts, 1.0, False), 1)
        if disp < l * d0:
            weak.append(z)
    weak_arr = np.array(weak, dtype=np.complex128)
    net = epsilon_net(weak_arr, 24.0) if len(weak_arr) else weak_arr
    return weak_arr, len(net)
