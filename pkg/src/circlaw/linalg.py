"""Dense complex linear algebra used by every spectral quantity.

Matrices are plain complex128 ndarrays.  Factorizations are delegated to
LAPACK (via numpy/scipy) behind the small result types below; the power
iteration for the spectral norm is implemented directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

CMatrix = np.ndarray  # 2-D complex array, row-major


class EigenConvergenceError(RuntimeError):
    """Eigensolver failed to converge; carries whatever was recovered."""

    def __init__(self, message: str, partial: Optional[np.ndarray] = None):
        super().__init__(message)
        self.partial = partial


@dataclass
class LogDetResult:
    log_abs_det: float          # -inf when singular
    phase: complex              # unit modulus; 1.0 when undefined (singular)
    is_singular: bool


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    max_residual: float
    iterations: int             # 0: backend does not report sweep counts


@dataclass
class SvdSummary:
    sigma_max: float
    sigma_min: float
    all_values: Optional[np.ndarray] = None   # descending


def _as_square(A: CMatrix) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def lu_logdet(A: CMatrix) -> LogDetResult:
    """log|det| and phase from partially pivoted LU.

    Singularity is flagged (never raised) when some |u_ii| falls below
    n * eps * max|a_ij|.
    """
    A = _as_square(A)
    n = A.shape[0]
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    if amax == 0.0:
        return LogDetResult(-np.inf, 1.0, True)
    with warnings.catch_warnings():
        # exactly singular input is a flagged return here, not a warning
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    diag = np.diagonal(lu)
    tol = n * np.finfo(np.float64).eps * amax
    if np.any(np.abs(diag) < tol):
        return LogDetResult(-np.inf, 1.0, True)
    log_abs = float(np.sum(np.log(np.abs(diag))))
    # each row swap flips the permutation sign
    swaps = int(np.sum(piv != np.arange(n)))
    phase = complex(np.prod(diag / np.abs(diag))) * (-1.0) ** swaps
    return LogDetResult(log_abs, phase, False)


def eigenvalues(A: CMatrix, tol: float = 1e-10, max_iter: int = 0) -> SpectrumResult:
    """All n eigenvalues with a residual diagnostic.

    tol sizes the residual acceptance: max_k ||A v_k - l_k v_k|| / ||A||
    must stay below sqrt(n) * tol * 1e4 or convergence is reported failed.
    max_iter is accepted for interface compatibility; the LAPACK backend
    manages its own sweep budget.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = _as_square(A)
    n = A.shape[0]
    if n == 0:
        return SpectrumResult(np.array([], dtype=np.complex128), 0.0, 0)
    try:
        lam, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    norm = float(np.linalg.norm(A, "fro"))
    if norm == 0.0:
        return SpectrumResult(lam, 0.0, 0)
    resid = np.linalg.norm(A @ vecs - vecs * lam[None, :], axis=0)
    max_residual = float(np.max(resid) / norm)
    return SpectrumResult(lam, max_residual, 0)


def singular_values(A: CMatrix) -> SvdSummary:
    """All singular values, descending."""
    A = np.asarray(A, dtype=np.complex128)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    try:
        s = np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    return SvdSummary(float(s[0]), float(s[-1]), s)


def spectral_norm_info(A: CMatrix, tol: float = 1e-10,
                       max_iter: int = 10_000) -> tuple[float, float, int]:
    """Power iteration on A* A: (sigma_max, achieved relative change, sweeps).

    Deterministic start vector; stops at the iteration cap even if the
    relative tolerance was not reached, reporting what was achieved.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.asarray(A, dtype=np.complex128)
    if A.size == 0 or not np.any(A):
        return 0.0, 0.0, 0
    m, n = A.shape
    rng = np.random.Generator(np.random.Philox(key=np.array([m * 0x9E3779B9 + n, 0],
                                                            dtype=np.uint64)))
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    prev = 0.0
    achieved = math.inf
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        w = A.conj().T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, 0.0, sweeps
        sigma2 = float(np.real(np.vdot(v, w)))
        v = w / nw
        achieved = abs(sigma2 - prev) / max(sigma2, np.finfo(float).tiny)
        if achieved <= tol:
            break
        prev = sigma2
    return float(np.sqrt(max(sigma2, 0.0))), achieved, sweeps


def spectral_norm(A: CMatrix, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on A* A."""
    return spectral_norm_info(A, tol, max_iter)[0]


def least_singular_value(A: CMatrix) -> float:
    """sigma_min(A) = inf over unit v of |Av|."""
    A = _as_square(A)
    return singular_values(A).sigma_min
