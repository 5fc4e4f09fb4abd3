"""Gaussian Gram machinery and regularized low-rank kernel partial CCA.

Gram matrices are never materialized: each block is represented by a
centered incomplete-Cholesky factor, and the kernel correlation problem is
solved in the orthonormalized column space of those factors, which
reproduces the dense N-dimensional problem exactly on the factors' span.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .cca import CanonicalSpectrum, _paired_solve
from .errors import IllPosed, RankDeficient
from .numerics import incomplete_cholesky

__all__ = [
    "KernelSpec",
    "CenteredFactor",
    "gaussian_gram_column",
    "gaussian_gram",
    "additive_gram_column",
    "additive_gram",
    "low_rank_centered_gram",
    "kpcca",
]

RHO_CEILING = 1.0 - 1e-12

# Width multipliers of the per-coordinate Gaussian family used by the
# additive kernel: three octaves below and including the configured width,
# so both smooth and oscillatory coordinate-wise structure is representable.
ADDITIVE_SCALES = (1.0, 0.5, 0.25)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel and factorization parameters.

    ``width`` is the Gaussian kernel width sigma, ``ridge`` the correlation
    penalization, ``chol_tol`` the residual-trace threshold of the
    incomplete factorization, and ``z_ridge`` the regularizer of the
    conditioning-block inversion (defaults to ``ridge`` downstream when
    None). ``max_rank`` optionally caps the factor rank; when the cap binds
    the residual trace may exceed ``chol_tol``.
    """

    width: float = 1.0
    ridge: float = 1e-7
    chol_tol: float = 1e-6
    z_ridge: float | None = None
    max_rank: int | None = None

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.ridge < 0 or self.chol_tol < 0:
            raise ValueError("ridge and chol_tol must be nonnegative")
        if self.z_ridge is not None and self.z_ridge < 0:
            raise ValueError("z_ridge must be nonnegative")


@dataclass(frozen=True)
class CenteredFactor:
    """Low-rank factor of a doubly centered Gram matrix.

    Every column sums to zero, so ``factor @ factor.T`` approximates
    H K H with H the centering projector.
    """

    factor: np.ndarray
    block: str = ""

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    @property
    def n_samples(self) -> int:
        return self.factor.shape[0]


def gaussian_gram_column(m, width: float, j: int) -> np.ndarray:
    """Column j of the Gaussian Gram matrix of the rows of ``m``.

    Entry i equals exp(-||m_i - m_j||^2 / (2 width^2)); the diagonal entry
    is exactly 1.
    """
    m = np.asarray(m, dtype=float)
    if width <= 0:
        raise ValueError("width must be positive")
    diff = m - m[j]
    col = np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * width * width))
    col[j] = 1.0
    return col


def gaussian_gram(m, width: float) -> np.ndarray:
    """Dense Gaussian Gram matrix; intended for small sample counts."""
    m = np.asarray(m, dtype=float)
    sq = np.einsum("ij,ij->i", m, m)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (m @ m.T)
    np.clip(d2, 0.0, None, out=d2)
    k = np.exp(-d2 / (2.0 * width * width))
    np.fill_diagonal(k, 1.0)
    return 0.5 * (k + k.T)


def additive_gram_column(m, width: float, j: int) -> np.ndarray:
    """Column j of the additive per-coordinate Gaussian-family Gram matrix.

    The kernel averages exp(-(a_c - b_c)^2 / (2 (width s)^2)) over all
    coordinates c and the octave scale set s in ``ADDITIVE_SCALES``; the
    diagonal is exactly 1. The narrower octaves are powers of the widest
    exponential, so only one transcendental pass is needed.
    """
    m = np.asarray(m, dtype=float)
    if width <= 0:
        raise ValueError("width must be positive")
    diff = m - m[j]
    e1 = np.exp(-(diff * diff) / (2.0 * width * width))
    e4 = np.square(np.square(e1))
    e16 = np.square(np.square(e4))
    col = (e1.mean(axis=1) + e4.mean(axis=1) + e16.mean(axis=1)) / 3.0
    col[j] = 1.0
    return col


def additive_gram(m, width: float) -> np.ndarray:
    """Dense additive-family Gram matrix; intended for small sample counts."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    out = np.empty((n, n))
    for j in range(n):
        out[:, j] = additive_gram_column(m, width, j)
    return 0.5 * (out + out.T)


def low_rank_centered_gram(
    m,
    spec: KernelSpec,
    block: str = "",
    column_fn: Callable[[int], np.ndarray] | None = None,
) -> CenteredFactor:
    """Incomplete Cholesky factor of the implicit Gram matrix, then centered.

    ``column_fn`` may supply columns of a different Mercer kernel; by
    default the Gaussian kernel of ``spec.width`` over the rows of ``m`` is
    used (unit diagonal either way). Centering subtracts each factor
    column's mean, equivalent to double-centering the Gram matrix, and can
    only shrink the residual trace.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("need a 2-d sample matrix with at least two rows")
    n = m.shape[0]
    if column_fn is None:
        column_fn = lambda j: gaussian_gram_column(m, spec.width, j)
    low = incomplete_cholesky(column_fn, np.ones(n), spec.chol_tol, max_rank=spec.max_rank)
    centered = low.factor - low.factor.mean(axis=0, keepdims=True)
    return CenteredFactor(factor=centered, block=block)


def _z_partial_weight(s_zz: np.ndarray, eps: float) -> np.ndarray:
    """The conditioning weight S_zz (S_zz^2 + eps I)^{-1} as a dense matrix."""
    c = s_zz.shape[0]
    if c == 0:
        return np.zeros((0, 0))
    gram2 = s_zz @ s_zz + eps * np.eye(c)
    try:
        ell = np.linalg.cholesky(gram2)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(
            "conditioning factor Gram is singular; increase the z ridge"
        ) from exc
    w = scipy.linalg.cho_solve((ell, True), s_zz)
    return 0.5 * (w + w.T)


def kpcca(
    fx: CenteredFactor,
    fy: CenteredFactor,
    fz: CenteredFactor,
    ridge: float,
    z_ridge: float | None = None,
) -> CanonicalSpectrum:
    """Kernel partial canonical correlations from centered factors.

    Solves the regularized feature-space correlation problem restricted to
    the span of the factors, which is exact for every nonzero correlation.
    ``ridge`` must be strictly positive; ``z_ridge`` defaults to ``ridge``.
    Correlations are clipped to [0, 1 - 1e-12] so downstream logs stay
    finite.
    """
    if ridge <= 0:
        raise IllPosed("kernel correlations need a positive ridge to be well posed")
    eps = ridge if z_ridge is None else z_ridge
    n = fx.n_samples
    if fy.n_samples != n or fz.n_samples != n:
        raise ValueError("factors must share the sample count")

    d = min(fx.rank, fy.rank)
    if d == 0:
        empty = np.zeros((0, 0))
        return CanonicalSpectrum(np.zeros(0), empty, empty)

    r_x = np.linalg.qr(fx.factor, mode="r")
    r_y = np.linalg.qr(fy.factor, mode="r")
    gz = fz.factor

    s_xy = fx.factor.T @ fy.factor
    s_xx = fx.factor.T @ fx.factor
    s_yy = fy.factor.T @ fy.factor
    if fz.rank:
        s_zz = gz.T @ gz
        w = _z_partial_weight(s_zz, eps)
        s_xz = fx.factor.T @ gz
        s_yz = fy.factor.T @ gz
        m_xy = s_xy - s_xz @ w @ s_yz.T
        m_xx = s_xx - s_xz @ w @ s_xz.T
        m_yy = s_yy - s_yz @ w @ s_yz.T
    else:
        m_xy, m_xx, m_yy = s_xy, s_xx, s_yy

    # Conjugate the partialized blocks into the orthonormal column bases:
    # with gamma = Q_x u the dense problem restricted to the factor span
    # becomes (R M R') pencils with the ridge appearing as an exact zeta I.
    mt_xy = r_x @ m_xy @ r_y.T
    mt_xx = r_x @ m_xx @ r_x.T
    mt_yy = r_y @ m_yy @ r_y.T

    cx = fx.rank
    cy = fy.rank
    spectrum = _paired_solve(
        mt_xy,
        0.5 * (mt_xx + mt_xx.T) + ridge * np.eye(cx),
        0.5 * (mt_yy + mt_yy.T) + ridge * np.eye(cy),
        d,
    )
    rho = np.clip(spectrum.correlations, 0.0, RHO_CEILING)
    return CanonicalSpectrum(rho, spectrum.left_coeffs, spectrum.right_coeffs)
