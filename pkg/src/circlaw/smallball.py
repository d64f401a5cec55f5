"""Random-walk small-ball probabilities and concentration probabilities.

Core objects for the anti-concentration theory: the walk W(v) = sum v_i a_i,
its small ball probability p_r(v) = sup_z P(W in B(z, r)), the lazy
symmetrized atom a_mu = (a1 - a2) * I(mu/2), the concentration probability
P_mu(v) = E exp(-pi |W_{a_mu}(v)|^2), the characteristic function
f(z) = |E e(Re(a z))|^2 and the alpha-norm that controls it.

Exact enumeration (dynamic programming over the walk support) is used
whenever the atom law is discrete and the support stays under a cap;
otherwise seeded Monte Carlo with reported standard errors.  P_mu also has
a Fourier quadrature route through f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensembles import AtomDistribution
from .seeding import make_rng, mix_seed

ENUMERATION_CAP = 1_000_000
_TWO_PI = 2.0 * math.pi


@dataclass
class ProbEstimate:
    value: float
    stderr: float
    method: str          # exact_enumeration | monte_carlo | fourier_quadrature
    lower_bound_only: bool = False

    def __post_init__(self):
        self.value = float(min(max(self.value, 0.0), 1.0))


# -- walk support enumeration -------------------------------------------------

def _diff_law(dist: AtomDistribution) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Law of a1 - a2 for enumerable atoms."""
    enum = dist.enumeration()
    if enum is None:
        return None
    vals, probs = enum
    diff = (vals[:, None] - vals[None, :]).ravel()
    pp = (probs[:, None] * probs[None, :]).ravel()
    return _collapse_pmf(diff, pp)


def mu_law(dist: AtomDistribution, mu: float) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Law of (a1 - a2) * I(mu/2): zero with prob 1 - mu/2, else the difference."""
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    d = _diff_law(dist)
    if d is None:
        return None
    vals, probs = d
    vals = np.concatenate([[0.0 + 0j], vals])
    probs = np.concatenate([[1.0 - mu / 2.0], probs * (mu / 2.0)])
    return _collapse_pmf(vals, probs)


def _collapse_pmf(vals: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((vals.imag, vals.real))
    vals, probs = vals[order], probs[order]
    keep = np.ones(len(vals), dtype=bool)
    keep[1:] = vals[1:] != vals[:-1]
    idx = np.cumsum(keep) - 1
    out_v = vals[keep]
    out_p = np.zeros(len(out_v))
    np.add.at(out_p, idx, probs)
    return out_v, out_p


def _lattice_offsets(increments: np.ndarray) -> Optional[tuple[float, np.ndarray]]:
    """If all increments lie on a real lattice g*Z, return (g, integer offsets)."""
    inc = increments[np.abs(increments) > 0]
    if len(inc) == 0:
        return 1.0, np.zeros(len(increments), dtype=np.int64)
    scale = float(np.max(np.abs(inc)))
    if np.max(np.abs(inc.imag)) > 1e-12 * scale:
        return None
    g = float(np.min(np.abs(inc.real)))
    ratios = increments.real / g
    rounded = np.round(ratios)
    if np.max(np.abs(ratios - rounded)) > 1e-9 or np.max(np.abs(rounded)) > 1e6:
        return None
    return g, rounded.astype(np.int64)


def _lattice2d_offsets(increments: np.ndarray
                       ) -> Optional[tuple[float, np.ndarray, np.ndarray]]:
    """If all increments lie on g*(Z + iZ), return (g, re offsets, im offsets)."""
    parts = np.concatenate([increments.real, increments.imag])
    nz = np.abs(parts[np.abs(parts) > 0])
    if len(nz) == 0:
        return 1.0, np.zeros(len(increments), np.int64), np.zeros(len(increments), np.int64)
    g = float(np.min(nz))
    ra, ia = increments.real / g, increments.imag / g
    rr, ri = np.round(ra), np.round(ia)
    if max(np.max(np.abs(ra - rr)), np.max(np.abs(ia - ri))) > 1e-9:
        return None
    if max(np.max(np.abs(rr)), np.max(np.abs(ri))) > 10**4:
        return None
    return g, rr.astype(np.int64), ri.astype(np.int64)


def walk_pmf(v: np.ndarray, atom_vals: np.ndarray, atom_probs: np.ndarray,
             cap: int = ENUMERATION_CAP) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Exact pmf of sum_i v_i a_i, or None when the support would exceed cap.

    Coordinates with equal coefficients are grouped; walks whose increments
    all lie on a real lattice use array convolutions, everything else a
    dictionary DP with collision collapsing.
    """
    v = np.asarray(v, dtype=np.complex128)
    if len(v) == 0:
        return np.array([0.0 + 0j]), np.array([1.0])
    uniq, counts = np.unique(v, return_counts=True)
    all_inc = (uniq[:, None] * atom_vals[None, :]).ravel()
    lat = _lattice_offsets(all_inc)
    if lat is not None:
        return _walk_pmf_lattice(uniq, counts, atom_vals, atom_probs, lat, cap)
    lat2 = _lattice2d_offsets(all_inc)
    if lat2 is not None:
        out = _walk_pmf_lattice2d(uniq, counts, len(atom_vals), atom_probs, lat2, cap)
        if out is not None:
            return out
    return _walk_pmf_dict(uniq, counts, atom_vals, atom_probs, cap)


def _walk_pmf_lattice(uniq, counts, atom_vals, atom_probs, lat, cap):
    g, offsets = lat
    offsets = offsets.reshape(len(uniq), len(atom_vals))
    total_span = int(np.sum(counts * np.max(np.abs(offsets), axis=1)))
    if 2 * total_span + 1 > cap:
        return None
    cur = np.array([1.0])   # pmf over lattice offsets base .. base+len(cur)-1
    base = 0
    for i in range(len(uniq)):
        offs = offsets[i]
        omin, omax = int(offs.min()), int(offs.max())
        kernel = np.zeros(omax - omin + 1)
        for o, p in zip(offs, atom_probs):
            kernel[int(o) - omin] += p
        for _ in range(int(counts[i])):
            cur = np.convolve(cur, kernel)
            base += omin
    idx = np.nonzero(cur)[0]
    return (base + idx) * g + 0j, cur[idx]


def _walk_pmf_lattice2d(uniq, counts, n_atoms, atom_probs, lat2, cap):
    g, re_off, im_off = lat2
    re_off = re_off.reshape(len(uniq), n_atoms)
    im_off = im_off.reshape(len(uniq), n_atoms)
    span_re = int(np.sum(counts * np.max(np.abs(re_off), axis=1)))
    span_im = int(np.sum(counts * np.max(np.abs(im_off), axis=1)))
    if (2 * span_re + 1) * (2 * span_im + 1) > 4 * cap:
        return None
    cur = np.ones((1, 1))
    base_re = base_im = 0
    for i in range(len(uniq)):
        a, b = re_off[i], im_off[i]
        amin, amax = int(a.min()), int(a.max())
        bmin, bmax = int(b.min()), int(b.max())
        for _ in range(int(counts[i])):
            h, w = cur.shape
            nxt = np.zeros((h + amax - amin, w + bmax - bmin))
            for aj, bj, pj in zip(a, b, atom_probs):
                nxt[aj - amin:aj - amin + h, bj - bmin:bj - bmin + w] += pj * cur
            cur = nxt
            base_re += amin
            base_im += bmin
    ii, jj = np.nonzero(cur)
    vals = ((base_re + ii) + 1j * (base_im + jj)) * g
    return vals, cur[ii, jj]


def _walk_pmf_dict(uniq, counts, atom_vals, atom_probs, cap):
    acc: dict[complex, float] = {0j: 1.0}
    for i, u in enumerate(uniq):
        group = [(complex(u * a), float(p)) for a, p in zip(atom_vals, atom_probs)]
        for _ in range(int(counts[i])):
            nxt: dict[complex, float] = {}
            for w, pw in acc.items():
                for s, ps in group:
                    key = w + s
                    nxt[key] = nxt.get(key, 0.0) + pw * ps
            if len(nxt) > cap:
                return None
            acc = nxt
    vals = np.array(list(acc.keys()), dtype=np.complex128)
    probs = np.array(list(acc.values()))
    order = np.lexsort((vals.imag, vals.real))
    return vals[order], probs[order]


def _atom_walk_pmf(dist: AtomDistribution, v, cap=ENUMERATION_CAP):
    enum = dist.enumeration()
    if enum is None:
        return None
    return walk_pmf(v, enum[0], enum[1], cap)


# -- sampling ----------------------------------------------------------------

def walk_sample(dist: AtomDistribution, v, seed: int, count: int) -> np.ndarray:
    """count iid samples of the walk sum_i v_i a_i."""
    if count < 1:
        raise ValueError("count must be >= 1")
    v = np.asarray(v, dtype=np.complex128)
    rng = make_rng(seed, 0)
    out = np.empty(count, dtype=np.complex128)
    chunk = max(1, min(count, int(2**24 // max(len(v), 1))))
    done = 0
    while done < count:
        m = min(chunk, count - done)
        out[done:done + m] = dist.sample(rng, (m, len(v))) @ v
        done += m
    return out


# -- small ball probability ----------------------------------------------------

def _ball_candidates_exact(support: np.ndarray, r: float,
                           pair_budget: int) -> tuple[np.ndarray, bool]:
    """Support points plus midpoints of pairs within 2r; flags budget overflow."""
    m = len(support)
    cands = [support]
    exhausted = False
    if r > 0 and m > 1:
        if m * m <= pair_budget:
            d = np.abs(support[:, None] - support[None, :])
            ii, jj = np.nonzero(np.triu(d <= 2 * r, k=1))
            cands.append((support[ii] + support[jj]) / 2.0)
        else:
            exhausted = True
    return np.unique(np.concatenate(cands)), exhausted


def small_ball_prob(dist: AtomDistribution, v, r: float,
                    budget: int = 200_000,
                    cap: int = ENUMERATION_CAP) -> ProbEstimate:
    """p_r(v) = sup over centers z of P(walk lands in the closed disk B(z, r)).

    Exact via support enumeration when possible (the sup is searched over
    support points and midpoints of support pairs within 2r); Monte Carlo
    with candidate centers at sample quantiles plus an r-spaced lattice
    otherwise.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    v = np.asarray(v, dtype=np.complex128)
    pmf = _atom_walk_pmf(dist, v, cap)
    if pmf is not None:
        support, probs = pmf
        cands, exhausted = _ball_candidates_exact(support, r, pair_budget=budget * 40)
        scale = 1.0 + r + (float(np.max(np.abs(support))) if len(support) else 0.0)
        best = 0.0
        for z0 in np.array_split(cands, max(1, len(cands) * len(support) // 2**24 + 1)):
            inside = np.abs(support[None, :] - z0[:, None]) <= r + 1e-12 * scale
            best = max(best, float(np.max(inside @ probs)))
        return ProbEstimate(best, 0.0, "exact_enumeration", lower_bound_only=exhausted)

    samples = walk_sample(dist, v, mix_seed(0x5BA11, "small-ball"), budget)
    cands = _ball_candidates_mc(samples, r)
    best = 0.0
    for z0 in np.array_split(cands, max(1, len(cands) * len(samples) // 2**24 + 1)):
        hits = np.abs(samples[None, :] - z0[:, None]) <= r
        best = max(best, float(np.max(np.mean(hits, axis=1))))
    stderr = math.sqrt(max(best * (1 - best), 1.0 / len(samples)) / len(samples))
    return ProbEstimate(best, stderr, "monte_carlo")


def _ball_candidates_mc(samples: np.ndarray, r: float, quantiles: int = 256,
                        lattice_cap: int = 1024) -> np.ndarray:
    order = np.lexsort((samples.imag, samples.real))
    idx = np.unique(np.linspace(0, len(samples) - 1, quantiles).astype(int))
    cands = [samples[order[idx]]]
    if r > 0:
        re_lo, re_hi = samples.real.min(), samples.real.max()
        im_lo, im_hi = samples.imag.min(), samples.imag.max()
        step = r
        n_re = int((re_hi - re_lo) / step) + 1
        n_im = int((im_hi - im_lo) / step) + 1
        while n_re * n_im > lattice_cap:
            step *= 2.0
            n_re = int((re_hi - re_lo) / step) + 1
            n_im = int((im_hi - im_lo) / step) + 1
        xs = re_lo + step * np.arange(n_re)
        ys = im_lo + step * np.arange(n_im)
        cands.append((xs[:, None] + 1j * ys[None, :]).ravel())
    return np.concatenate(cands)


# -- characteristic function and alpha norm -----------------------------------

def char_fn_f(dist: AtomDistribution, z: complex) -> float:
    """f(z) = |E e(Re(a z))|^2 with e(t) = exp(2 pi i t); always in [0, 1]."""
    return float(char_fn_f_many(dist, np.array([z], dtype=np.complex128))[0])


def char_fn_f_many(dist: AtomDistribution, zs: np.ndarray,
                   mc_draws: int = 100_000) -> np.ndarray:
    zs = np.asarray(zs, dtype=np.complex128)
    if dist.kind == "complex_gaussian":
        # Re(a z) ~ N(0, |z|^2 / 2)
        return np.exp(-2.0 * math.pi**2 * np.abs(zs) ** 2)
    if dist.kind == "real_gaussian":
        return np.exp(-4.0 * math.pi**2 * zs.real**2)
    enum = dist.enumeration()
    if enum is not None:
        vals, probs = enum
        out = np.zeros(zs.shape, dtype=np.complex128)
        flat = zs.ravel()
        chunk = max(1, int(2**23 // max(len(vals), 1)))
        res = np.empty(len(flat), dtype=np.complex128)
        for s in range(0, len(flat), chunk):
            blk = flat[s:s + chunk]
            phases = np.exp(1j * _TWO_PI * np.real(np.outer(blk, vals)))
            res[s:s + chunk] = phases @ probs
        out = res.reshape(zs.shape)
        return np.clip(np.abs(out) ** 2, 0.0, 1.0)
    draws = dist.sample(make_rng(mix_seed(0xF0F0, "char-fn"), 0), mc_draws)
    flat = zs.ravel()
    res = np.empty(len(flat))
    chunk = max(1, int(2**23 // mc_draws))
    for s in range(0, len(flat), chunk):
        blk = flat[s:s + chunk]
        m = np.exp(1j * _TWO_PI * np.real(blk[:, None] * draws[None, :])).mean(axis=1)
        res[s:s + chunk] = np.abs(m) ** 2
    return np.clip(res.reshape(zs.shape), 0.0, 1.0)


def _dist_to_int_sq(x: np.ndarray) -> np.ndarray:
    frac = x - np.round(x)
    return frac * frac


def alpha_norm(dist: AtomDistribution, w: complex) -> float:
    """(E ||Re(w (a1 - a2))||_{R/Z}^2)^(1/2), the alpha-norm of w."""
    return float(alpha_norm_many(dist, np.array([w], dtype=np.complex128))[0])


def _gaussian_frac_second_moment(sigma2: np.ndarray) -> np.ndarray:
    """E ||X||_{R/Z}^2 for X ~ N(0, sigma2), by the theta series."""
    out = np.full(np.shape(sigma2), 1.0 / 12.0)
    for k in range(1, 40):
        term = ((-1) ** k) * np.exp(-2.0 * math.pi**2 * k * k * sigma2) / (math.pi**2 * k * k)
        out = out + term
        if np.all(np.abs(term) < 1e-17):
            break
    return np.maximum(out, 0.0)


def alpha_norm_many(dist: AtomDistribution, ws: np.ndarray,
                    mc_draws: int = 100_000) -> np.ndarray:
    ws = np.asarray(ws, dtype=np.complex128)
    if dist.kind == "complex_gaussian":
        return np.sqrt(_gaussian_frac_second_moment(np.abs(ws) ** 2))
    if dist.kind == "real_gaussian":
        return np.sqrt(_gaussian_frac_second_moment(2.0 * ws.real**2))
    d = _diff_law(dist)
    if d is not None:
        dv, dp = d
        flat = ws.ravel()
        chunk = max(1, int(2**23 // max(len(dv), 1)))
        res = np.empty(len(flat))
        for s in range(0, len(flat), chunk):
            blk = flat[s:s + chunk]
            sq = _dist_to_int_sq(np.real(blk[:, None] * dv[None, :]))
            res[s:s + chunk] = sq @ dp
        return np.sqrt(res.reshape(ws.shape))
    rng = make_rng(mix_seed(0xA1FA, "alpha-norm"), 0)
    d1 = dist.sample(rng, mc_draws)
    d2 = dist.sample(rng, mc_draws)
    diff = d1 - d2
    flat = ws.ravel()
    res = np.empty(len(flat))
    chunk = max(1, int(2**23 // mc_draws))
    for s in range(0, len(flat), chunk):
        blk = flat[s:s + chunk]
        res[s:s + chunk] = _dist_to_int_sq(np.real(blk[:, None] * diff[None, :])).mean(axis=1)
    return np.sqrt(res.reshape(ws.shape))


# -- concentration probability -------------------------------------------------

def conc_prob_exact(dist: AtomDistribution, mu: float, v,
                    cap: int = ENUMERATION_CAP) -> Optional[ProbEstimate]:
    """Exact P_mu(v) by walk enumeration, or None when it does not fit."""
    v = np.asarray(v, dtype=np.complex128)
    law = mu_law(dist, mu)
    if law is None:
        return None
    pmf = walk_pmf(v, law[0], law[1], cap)
    if pmf is None:
        return None
    vals, probs = pmf
    value = float(np.sum(probs * np.exp(-math.pi * np.abs(vals) ** 2)))
    return ProbEstimate(value, 0.0, "exact_enumeration")


def conc_prob_mc(dist: AtomDistribution, mu: float, v, trials: int = 100_000,
                 seed: int = 0, cap: int = ENUMERATION_CAP) -> ProbEstimate:
    """P_mu(v) = E exp(-pi |W_{a_mu}(v)|^2); exact enumeration when it fits."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    v = np.asarray(v, dtype=np.complex128)
    exact = conc_prob_exact(dist, mu, v, cap)
    if exact is not None:
        return exact
    rng = make_rng(mix_seed(seed, "conc-prob-mc"), 0)
    n = len(v)
    total = 0.0
    total_sq = 0.0
    chunk = max(1, min(trials, int(2**23 // max(n, 1))))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        a1 = dist.sample(rng, (m, n))
        a2 = dist.sample(rng, (m, n))
        mask = rng.random((m, n)) < mu / 2.0
        w = ((a1 - a2) * mask) @ v
        g = np.exp(-math.pi * np.abs(w) ** 2)
        total += float(g.sum())
        total_sq += float((g * g).sum())
        done += m
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return ProbEstimate(mean, math.sqrt(var / trials), "monte_carlo")


_GL_CACHE: dict[tuple[int, float], tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(n: int, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    key = (n, half_width)
    if key not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[key] = (x * half_width, w * half_width)
    return _GL_CACHE[key]


def conc_prob_fourier(dist: AtomDistribution, mu: float, v,
                      radius_cutoff: float = 6.0, nodes: int = 256,
                      max_nodes: int = 4096) -> ProbEstimate:
    """P_mu(v) by 2-D quadrature of prod_i (1 - mu/2 + mu/2 f(xi v_i)) e^(-pi|xi|^2).

    Tensor Gauss-Legendre over the square [-R, R]^2 covering B(0, R); the
    neglected tail is below exp(-pi R^2) and is reported as stderr.  Each
    discrete-atom factor oscillates with bandwidth 2 |s v_i| cycles per
    unit, and the bandwidth of the product is the sum, so the node count
    scales with sum_i |v_i| (about two nodes per cycle), up to max_nodes.
    """
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    if radius_cutoff <= 0:
        raise ValueError("radius_cutoff must be positive")
    v = np.asarray(v, dtype=np.complex128)
    tail = math.exp(-math.pi * radius_cutoff**2)

    enum = dist.enumeration()
    if enum is None and dist.kind not in ("real_gaussian", "complex_gaussian"):
        tail += 0.01    # f itself is Monte Carlo for such atoms; crude bound
    max_scale = float(np.max(np.abs(enum[0]))) if enum is not None and len(enum[0]) else 0.0
    cycles = 2.0 * radius_cutoff * 2.0 * max_scale * float(np.sum(np.abs(v)))
    n_nodes = min(max(nodes, 16 + int(1.8 * cycles)), max_nodes)

    xs, wx = _gl_nodes(n_nodes, radius_cutoff)
    xi = xs[:, None] + 1j * xs[None, :]
    weight2d = wx[:, None] * wx[None, :]
    integrand = np.exp(-math.pi * np.abs(xi) ** 2)
    if len(v):
        uniq, counts = np.unique(v, return_counts=True)
        for u, m in zip(uniq, counts):
            f = char_fn_f_many(dist, xi * u)
            integrand = integrand * (1.0 - mu / 2.0 + (mu / 2.0) * f) ** int(m)
    value = float(np.sum(weight2d * integrand))
    return ProbEstimate(value, tail, "fourier_quadrature")
