"""Independent reference implementations used to pin expected values.

Everything here recomputes quantities by a route different from the library
code it checks: dense eigensolves, explicit regressions, closed-form
Gaussian information quantities.
"""

import numpy as np
import scipy.linalg


def random_covariance(rng, dims, strength=1.0):
    """Random well-conditioned covariance over sum(dims) variables."""
    d = sum(dims)
    a = rng.standard_normal((d, d)) * strength
    return a @ a.T / d + np.eye(d)


def split_cov(cov, dims):
    """Index slices of the stacked blocks."""
    edges = np.cumsum([0, *dims])
    return [slice(edges[i], edges[i + 1]) for i in range(len(dims))]


def sample_gaussian(cov, n, rng):
    ell = np.linalg.cholesky(cov)
    return rng.standard_normal((n, cov.shape[0])) @ ell.T


def population_matrix(cov, n):
    """Data matrix whose 1/N second moment equals ``cov`` exactly."""
    d = cov.shape[0]
    ell = np.linalg.cholesky(cov)
    out = np.zeros((n, d))
    out[:d] = np.sqrt(n) * ell.T
    return out


def gaussian_te(cov, dims):
    """Conditional mutual information of blocks (X; Y | Z) for a Gaussian.

    Equals 0.5 * log(|Sigma_X|Z| / |Sigma_X|YZ|); dims = (dx, dy, dz).
    """
    sx, sy, sz = split_cov(cov, dims)
    idx = np.arange(cov.shape[0])
    x = idx[sx]
    z = idx[sz]
    yz = np.concatenate([idx[sy], z])
    cxx = cov[np.ix_(x, x)]
    cxz = cov[np.ix_(x, z)]
    czz = cov[np.ix_(z, z)]
    sig_x_z = cxx - cxz @ np.linalg.solve(czz, cxz.T)
    cx_yz = cov[np.ix_(x, yz)]
    cyzyz = cov[np.ix_(yz, yz)]
    sig_x_yz = cxx - cx_yz @ np.linalg.solve(cyzyz, cx_yz.T)
    return 0.5 * (np.linalg.slogdet(sig_x_z)[1] - np.linalg.slogdet(sig_x_yz)[1])


def residualize(a, z):
    """Least-squares residual of each column of a on the columns of z."""
    if z.size == 0 or z.shape[1] == 0:
        return a.copy()
    coef, *_ = np.linalg.lstsq(z, a, rcond=None)
    return a - z @ coef


def center_gram(k):
    n = k.shape[0]
    h = np.eye(n) - np.ones((n, n)) / n
    return h @ k @ h


def dense_kernel_pcca(kx, ky, kz, ridge, z_ridge, d):
    """Dense formulation of the regularized kernel partial correlation problem.

    Materializes the doubly centered Gram matrices and solves the full
    2N-dimensional pencil; the oracle for the reduced factor route.
    """
    n = kx.shape[0]
    kx = center_gram(kx)
    ky = center_gram(ky)
    kz = center_gram(kz)
    wz = np.linalg.solve(kz @ kz + z_ridge * np.eye(n), kz)

    def partial(ka, kb):
        return ka @ kb - ka @ kz @ wz @ kb

    kxy = partial(kx, ky)
    kxx = partial(kx, kx)
    kyy = partial(ky, ky)
    c = np.zeros((2 * n, 2 * n))
    c[:n, n:] = kxy
    c[n:, :n] = kxy.T
    dmat = np.zeros_like(c)
    dmat[:n, :n] = 0.5 * (kxx + kxx.T) + ridge * np.eye(n)
    dmat[n:, n:] = 0.5 * (kyy + kyy.T) + ridge * np.eye(n)
    vals = scipy.linalg.eigh(c, dmat, eigvals_only=True)
    return np.clip(np.sort(vals)[::-1][:d], 0.0, 1.0)


def ks_uniform(pvals):
    """Kolmogorov-Smirnov distance of values to the uniform distribution."""
    p = np.sort(np.asarray(pvals))
    n = p.size
    grid_hi = np.arange(1, n + 1) / n
    grid_lo = np.arange(0, n) / n
    return float(max(np.max(np.abs(grid_hi - p)), np.max(np.abs(p - grid_lo))))
