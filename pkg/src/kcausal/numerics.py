"""Dense symmetric linear algebra used by the correlation machinery.

All routines operate on plain float64 ``numpy`` arrays and are pure
functions of their inputs. Matrices handed in are never modified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite, NumericalBreakdown

__all__ = [
    "LowRankFactor",
    "SymSpectrum",
    "cholesky",
    "incomplete_cholesky",
    "sym_generalized_eig",
    "partial_covariance",
]

# Pivots below this fraction of the initial trace are treated as exact zeros
# by the incomplete factorization; keeps noise-level pivots out of the factor.
PIVOT_FLOOR_FRACTION = 1e-12


def _as_matrix(a, name="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class LowRankFactor:
    """Tall factor G with G @ G.T approximating an implicit PSD matrix.

    ``pivots`` records the sample indices selected by the factorization in
    order of selection; ``residual_trace`` is the trace of the remaining
    approximation error, nonnegative by construction.
    """

    factor: np.ndarray
    pivots: list[int] = field(default_factory=list)
    residual_trace: float = 0.0

    @property
    def rank(self) -> int:
        return self.factor.shape[1]


@dataclass(frozen=True)
class SymSpectrum:
    """Eigenvalues in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def cholesky(s) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises :class:`NotPositiveDefinite` when factorization fails, which is
    the caller's cue to add a ridge and retry.
    """
    s = _as_matrix(s, "S")
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def incomplete_cholesky(
    column: Callable[[int], np.ndarray],
    diag: Sequence[float],
    tol: float,
    max_rank: int | None = None,
) -> LowRankFactor:
    """Pivoted low-rank factorization of an implicit PSD matrix.

    ``column(j)`` must return column ``j`` of the full matrix; ``diag`` holds
    its diagonal. Pivots are chosen greedily as the largest remaining
    diagonal residual, and the factorization stops once the *sum* of the
    remaining diagonal residuals drops below ``tol`` (or all columns are
    used, or ``max_rank`` is reached).

    Raises :class:`NumericalBreakdown` if a residual diagonal goes
    significantly negative, which indicates the implicit matrix is not PSD.
    """
    d = np.asarray(diag, dtype=float).copy()
    if d.ndim != 1:
        raise ValueError("diag must be 1-dimensional")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    n = d.size
    cap = n if max_rank is None else min(max_rank, n)
    if n == 0 or cap == 0:
        return LowRankFactor(factor=np.zeros((n, 0)), pivots=[], residual_trace=float(d.sum()))

    initial_trace = float(d.sum())
    pivot_floor = PIVOT_FLOOR_FRACTION * max(initial_trace, 1.0)
    neg_tol = 1e-10 * max(float(d.max(initial=0.0)), 1.0)

    pivots: list[int] = []
    buf = np.zeros((n, min(cap, max(16, cap if cap <= 256 else 256))))

    remaining = float(d.sum())
    while len(pivots) < cap and remaining >= tol:
        j = int(np.argmax(d))
        pj = float(d[j])
        if pj <= pivot_floor:
            break
        col = np.asarray(column(j), dtype=float)
        if col.shape != (n,):
            raise ValueError(f"column oracle returned shape {col.shape}, expected ({n},)")
        k = len(pivots)
        if k == buf.shape[1]:
            buf = np.concatenate([buf, np.zeros((n, min(buf.shape[1], cap - k)))], axis=1)
        if k:
            g = (col - buf[:, :k] @ buf[j, :k]) / np.sqrt(pj)
        else:
            g = col / np.sqrt(pj)
        g[j] = np.sqrt(pj)
        d -= g * g
        d[j] = 0.0
        neg = d.min()
        if neg < -neg_tol:
            raise NumericalBreakdown(
                f"residual diagonal reached {neg:.3e}; implicit matrix is not PSD"
            )
        np.clip(d, 0.0, None, out=d)
        buf[:, k] = g
        pivots.append(j)
        remaining = float(d.sum())

    factor = buf[:, : len(pivots)].copy()
    return LowRankFactor(factor=factor, pivots=pivots, residual_trace=max(remaining, 0.0))


def sym_generalized_eig(c, d) -> SymSpectrum:
    """Solve C v = lambda D v for symmetric C and positive definite D.

    The right-hand matrix is reduced with its Cholesky factor (never an
    explicit inverse), the whitened matrix is passed to a standard symmetric
    eigensolver, and eigenvectors are mapped back to the original
    coordinates. Eigenvalues come out in descending order.
    """
    c = _as_matrix(c, "C")
    d = _as_matrix(d, "D")
    if c.shape != d.shape or c.shape[0] != c.shape[1]:
        raise ValueError(f"C and D must be square with equal shape, got {c.shape} and {d.shape}")
    ell = cholesky(d)
    w = scipy.linalg.solve_triangular(ell, c, lower=True)
    a = scipy.linalg.solve_triangular(ell, w.T, lower=True).T
    a = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    back = scipy.linalg.solve_triangular(ell, vecs, lower=True, trans="T")
    return SymSpectrum(eigenvalues=vals, eigenvectors=back)


def partial_covariance(s_ab, s_az, s_zz, s_zb, ridge: float = 0.0) -> np.ndarray:
    """Covariance of A and B after removing the linear influence of Z.

    Returns ``S_ab - S_az (S_zz + ridge I)^{-1} S_zb``. With ridge 0 this is
    the Schur complement of the joint covariance. A zero-width Z returns
    ``S_ab`` unchanged.
    """
    s_ab = _as_matrix(s_ab, "S_ab")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    s_az = _as_matrix(s_az, "S_az") if np.size(s_az) else np.zeros((s_ab.shape[0], 0))
    if s_az.shape[1] == 0:
        return s_ab.copy()
    s_zz = _as_matrix(s_zz, "S_zz")
    s_zb = _as_matrix(s_zb, "S_zb")
    m = s_zz.shape[0]
    ell = cholesky(s_zz + ridge * np.eye(m) if ridge else s_zz)
    solved = scipy.linalg.cho_solve((ell, True), s_zb)
    return s_ab - s_az @ solved
