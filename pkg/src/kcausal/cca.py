"""Classical and partial canonical correlation analysis.

Both solvers phrase the problem as a paired symmetric-definite generalized
eigenproblem over second-moment blocks (1/N normalization, columns assumed
centered by the caller). The paired system's raw spectrum consists of
plus/minus pairs; the returned correlations are the nonnegative branch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite, RankDeficient
from .numerics import partial_covariance, sym_generalized_eig

__all__ = ["CanonicalSpectrum", "cca", "pcca"]

# Relative ridge applied to a within-set covariance when its factorization
# fails; empirical lag blocks are frequently near-collinear.
RIDGE_FLOOR = 1e-10


@dataclass(frozen=True)
class CanonicalSpectrum:
    """Descending canonical correlations with their projection directions.

    ``left_coeffs[:, i]`` and ``right_coeffs[:, i]`` achieve
    ``correlations[i]``. For kernel spectra the coefficients live in the
    orthonormalized factor basis rather than input coordinates.
    """

    correlations: np.ndarray
    left_coeffs: np.ndarray
    right_coeffs: np.ndarray

    @property
    def d(self) -> int:
        return self.correlations.size


def _paired_solve(m_xy, m_xx, m_yy, d):
    """Solve the paired eigenproblem and fold out the top-d correlations."""
    dx = m_xx.shape[0]
    dy = m_yy.shape[0]
    c = np.zeros((dx + dy, dx + dy))
    c[:dx, dx:] = m_xy
    c[dx:, :dx] = m_xy.T
    den = np.zeros_like(c)
    den[:dx, :dx] = 0.5 * (m_xx + m_xx.T)
    den[dx:, dx:] = 0.5 * (m_yy + m_yy.T)

    tried_ridge = False
    while True:
        try:
            spectrum = sym_generalized_eig(c, den)
            break
        except NotPositiveDefinite:
            if tried_ridge:
                raise RankDeficient(
                    "within-set covariance is singular beyond the ridge floor"
                ) from None
            ridge = RIDGE_FLOOR * np.trace(den) / max(dx + dy, 1)
            if ridge <= 0:
                ridge = RIDGE_FLOOR
            warnings.warn(
                "within-set covariance is numerically singular; "
                f"retrying with ridge {ridge:.3e}",
                RuntimeWarning,
                stacklevel=3,
            )
            den = den + ridge * np.eye(dx + dy)
            tried_ridge = True

    rho = np.clip(spectrum.eigenvalues[:d], 0.0, 1.0)
    vecs = spectrum.eigenvectors[:, :d]
    left = vecs[:dx].copy()
    right = vecs[dx:].copy()
    # Canonical normalization: unit variance of each projection where defined.
    for i in range(d):
        for block, gram in ((left, den[:dx, :dx]), (right, den[dx:, dx:])):
            nrm = float(block[:, i] @ gram @ block[:, i])
            if nrm > 1e-300:
                block[:, i] /= np.sqrt(nrm)
    return CanonicalSpectrum(correlations=rho, left_coeffs=left, right_coeffs=right)


def _second_moment(a, b):
    return a.T @ b / a.shape[0]


def cca(x, y) -> CanonicalSpectrum:
    """Canonical correlations between column blocks X and Y.

    Returns min(d_X, d_Y) correlations in descending order. Raises
    :class:`RankDeficient` when a within-set covariance stays singular after
    the automatic ridge floor.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise ValueError("X and Y must have equal row counts")
    d = min(x.shape[1], y.shape[1])
    return _paired_solve(_second_moment(x, y), _second_moment(x, x), _second_moment(y, y), d)


def pcca(x, y, z, ridge: float = 0.0) -> CanonicalSpectrum:
    """Canonical correlations of X and Y after removing Z's linear influence.

    All covariance blocks are replaced by partial covariances against Z;
    ``ridge`` regularizes the Z-covariance inversion. An empty Z reduces
    exactly to :func:`cca`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, 1)
    if x.shape[0] != y.shape[0] or (z.size and z.shape[0] != x.shape[0]):
        raise ValueError("X, Y and Z must have equal row counts")
    if z.size == 0 or z.shape[1] == 0:
        return cca(x, y)

    s_zz = _second_moment(z, z)
    s_xz = _second_moment(x, z)
    s_yz = _second_moment(y, z)

    def partial(s_ab, s_az, s_zb, rdg):
        return partial_covariance(s_ab, s_az, s_zz, s_zb, ridge=rdg)

    tried = False
    rdg = ridge
    while True:
        try:
            m_xy = partial(_second_moment(x, y), s_xz, s_yz.T, rdg)
            m_xx = partial(_second_moment(x, x), s_xz, s_xz.T, rdg)
            m_yy = partial(_second_moment(y, y), s_yz, s_yz.T, rdg)
            break
        except NotPositiveDefinite:
            if tried:
                raise RankDeficient("conditioning covariance is singular") from None
            rdg = ridge + RIDGE_FLOOR * np.trace(s_zz) / s_zz.shape[0]
            warnings.warn(
                f"conditioning covariance is numerically singular; using ridge {rdg:.3e}",
                RuntimeWarning,
                stacklevel=2,
            )
            tried = True

    d = min(x.shape[1], y.shape[1])
    return _paired_solve(m_xy, m_xx, m_yy, d)
