"""Causality scores, significance tests, and the all-pairs causal scan.

Three measures share the pipeline: the linear canonical score (cc), its
kernelized counterpart (kcc), and the generalized-variance statistic
(genvar). Significance comes from chi-square asymptotics (linear measures)
and permutation resampling (all measures). Permutation replicates are
evaluated through batched closures so the per-replicate cost is a pair of
matrix products regardless of measure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg
from scipy.stats import chi2 as _chi2_dist

from .cca import CanonicalSpectrum, pcca
from .embedding import LaggedDesign, TimeSeriesTable, aggregate_rank_score, build_design
from .errors import DomainError, NotPositiveDefinite, RankDeficient, SaturationWarning
from .kernel import (
    CenteredFactor,
    KernelSpec,
    additive_gram_column,
    gaussian_gram_column,
    kpcca,
    low_rank_centered_gram,
    _z_partial_weight,
)
from .numerics import cholesky

__all__ = [
    "CausalResult",
    "ScanSettings",
    "PermutationResult",
    "cc_score",
    "kcc_score",
    "genvar_score",
    "te_bounds",
    "chi2_pvalue",
    "permutation_test",
    "prepared_statistic",
    "evaluate_pair",
    "causal_scan",
    "scan_lagged_blocks",
    "block_kernel_factor",
]

# Determinant ratios are truncated here; beyond this the fit is noise-free
# and the statistic carries no further information.
GENVAR_CAP = math.log(1e15)

_PERM_CHUNK = 32


@dataclass(frozen=True)
class CausalResult:
    """Outcome of one conditional-independence test (source -> target)."""

    method: str
    source: str
    target: str
    lag: int
    score: float
    rank_score: float
    correlations: np.ndarray
    p_chi2: float | None = None
    p_perm: float | None = None
    null_quantile_99: float | None = None
    n_samples: int = 0


@dataclass(frozen=True)
class PermutationResult:
    p_value: float
    null_quantile_99: float
    null_samples: np.ndarray
    observed: float


@dataclass(frozen=True)
class ScanSettings:
    """Everything a scan needs beyond the data itself.

    ``kernel_mode`` picks how the configured width applies to multi-column
    blocks. "additive" (default) averages a per-coordinate Gaussian octave
    family at the configured width, so width 1 means one standardized unit
    per coordinate and coordinate-wise nonlinearities stay resolvable.
    "vector" uses a single Gaussian on the stacked block vector at
    width * sqrt(block dimension), which keeps the exponent scale balanced
    across blocks of different widths.

    ``kernel.max_rank`` caps the target and source factor ranks;
    ``z_max_rank`` caps the conditioning factor (twice the former when
    left unset).
    """

    method: str = "kcc"
    lags: int = 4
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec(max_rank=48))
    kernel_mode: str = "additive"
    z_max_rank: int | None = None
    n_perm: int = 1000
    perm_scheme: str = "iid"
    alpha: float = 0.001
    seed: int = 0
    use_chi2: bool = True

    def __post_init__(self):
        if self.method not in ("cc", "kcc", "genvar"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.kernel_mode not in ("additive", "vector"):
            raise ValueError(f"unknown kernel mode {self.kernel_mode!r}")
        if self.perm_scheme not in ("iid", "circular"):
            raise ValueError(f"unknown permutation scheme {self.perm_scheme!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.lags < 1:
            raise ValueError("lags must be at least 1")

    @property
    def effective_z_max_rank(self) -> int | None:
        if self.z_max_rank is not None:
            return self.z_max_rank
        if self.kernel.max_rank is not None:
            return 2 * self.kernel.max_rank
        return None


def _neg_half_log_prod(correlations: np.ndarray) -> float:
    rho = np.asarray(correlations, dtype=float)
    if rho.size and float(rho.max(initial=0.0)) >= 1.0:
        raise DomainError("a canonical correlation of 1 yields an infinite score")
    return float(-0.5 * np.sum(np.log1p(-rho * rho)))


def cc_score(spectrum: CanonicalSpectrum) -> float:
    """Canonical causality score -1/2 sum log(1 - rho_i^2), in nats.

    Zero exactly when every partial canonical correlation vanishes; raises
    :class:`DomainError` if any correlation reaches 1.
    """
    return _neg_half_log_prod(spectrum.correlations)


def kcc_score(spectrum: CanonicalSpectrum) -> float:
    """Kernelized causality score: same log-product over the kernel spectrum."""
    return _neg_half_log_prod(spectrum.correlations)


def te_bounds(spectrum: CanonicalSpectrum, d_min: int) -> tuple[float, float]:
    """Transfer-entropy bracket from the largest canonical correlation.

    Returns (lower, upper) with lower = -1/2 log(1 - rho_max^2) and
    upper = d_min * lower.
    """
    if spectrum.correlations.size == 0:
        raise ValueError("spectrum is empty")
    rho_max = float(spectrum.correlations.max())
    if rho_max >= 1.0:
        raise DomainError("correlation of 1 gives an unbounded interval")
    lower = -0.5 * math.log1p(-rho_max * rho_max)
    return lower, d_min * lower


def chi2_pvalue(score: float, n: int, df: int) -> float:
    """Upper-tail probability of 2 N score under a chi-square with df dof."""
    if score < 0:
        raise ValueError("score must be nonnegative")
    if df < 1:
        raise ValueError("df must be at least 1")
    return float(_chi2_dist.sf(2.0 * n * score, df))


def _chol_logdet(m: np.ndarray) -> float:
    """Log-determinant via Cholesky with a single jitter retry."""
    try:
        ell = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * max(float(np.trace(m)) / max(m.shape[0], 1), 1e-300)
        ell = np.linalg.cholesky(m + jitter * np.eye(m.shape[0]))
    return 2.0 * float(np.sum(np.log(np.diag(ell))))


def genvar_score(design: LaggedDesign) -> float:
    """Generalized-variance statistic from two nested least-squares fits.

    Regresses the target on Z, then on [Y Z], and returns the log ratio of
    the residual covariance determinants. The ratio is capped at 1e15; a
    saturated fit (noise-free dependence) triggers a warning and returns
    the capped value.
    """
    x, y, z = design.X, design.Y, design.Z
    n = x.shape[0]
    coef_z, *_ = np.linalg.lstsq(z, x, rcond=None)
    resid_z = x - z @ coef_z
    sigma_restricted = resid_z.T @ resid_z / n

    w = np.concatenate([y, z], axis=1)
    coef_w, *_ = np.linalg.lstsq(w, x, rcond=None)
    resid_w = x - w @ coef_w
    sigma_full = resid_w.T @ resid_w / n

    try:
        ld_restricted = 2.0 * float(np.sum(np.log(np.diag(cholesky(sigma_restricted)))))
    except NotPositiveDefinite as exc:
        raise RankDeficient("target is degenerate given its conditioning set") from exc
    try:
        ld_full = 2.0 * float(np.sum(np.log(np.diag(cholesky(sigma_full)))))
    except NotPositiveDefinite:
        warnings.warn(
            "noise-free dependence: determinant ratio capped at 1e15",
            SaturationWarning,
            stacklevel=2,
        )
        return GENVAR_CAP

    score = ld_restricted - ld_full
    if score > GENVAR_CAP:
        warnings.warn(
            "determinant ratio capped at 1e15", SaturationWarning, stacklevel=2
        )
        return GENVAR_CAP
    return score


# ---------------------------------------------------------------------------
# Permutation machinery


def _null_orders(n: int, n_perm: int, seed, scheme: str, min_shift: int) -> np.ndarray:
    """Row orders for the null replicates, one derived stream per replicate."""
    base = tuple(int(s) for s in np.atleast_1d(seed))
    orders = np.empty((n_perm, n), dtype=np.intp)
    if scheme == "circular" and n < 2 * min_shift + 1:
        raise ValueError("circular scheme needs more than 2 * min_shift samples")
    idx = np.arange(n)
    for i in range(n_perm):
        rng = np.random.default_rng(base + (i,))
        if scheme == "iid":
            orders[i] = rng.permutation(n)
        elif scheme == "circular":
            offset = int(rng.integers(min_shift, n - min_shift + 1))
            orders[i] = (idx + offset) % n
        else:
            raise ValueError(f"unknown permutation scheme {scheme!r}")
    return orders


def permutation_test(
    statistic: Callable[[np.ndarray], np.ndarray],
    n_samples: int,
    n_perm: int = 1000,
    seed=0,
    scheme: str = "iid",
    min_shift: int = 1,
) -> PermutationResult:
    """Empirical null of a statistic under row permutations of the source.

    ``statistic`` receives a (batch, n_samples) array of row orders and
    returns one score per order; the identity order gives the observed
    value. The p-value uses the add-one estimator
    (1 + #{null >= observed}) / (1 + n_perm) and never returns 0. Results
    are deterministic given ``seed`` for any execution environment.
    """
    if n_perm < 19:
        raise ValueError("need at least 19 permutations for a meaningful p-value")
    observed = float(statistic(np.arange(n_samples, dtype=np.intp)[None, :])[0])
    orders = _null_orders(n_samples, n_perm, seed, scheme, min_shift)
    nulls = np.empty(n_perm)
    for start in range(0, n_perm, _PERM_CHUNK):
        chunk = orders[start : start + _PERM_CHUNK]
        nulls[start : start + chunk.shape[0]] = statistic(chunk)
    p = (1.0 + float(np.sum(nulls >= observed))) / (1.0 + n_perm)
    return PermutationResult(
        p_value=p,
        null_quantile_99=float(np.quantile(nulls, 0.99)),
        null_samples=nulls,
        observed=observed,
    )


def _gathered_products(mat_t: np.ndarray, values: np.ndarray, orders: np.ndarray):
    """mat_t @ values[order] for every order, via one stacked product.

    ``mat_t`` is (p, n); returns (batch, p, q) for values (n, q). The
    permuted copies are laid out side by side so one large matrix product
    serves the whole batch.
    """
    b, n = orders.shape
    q = values.shape[1]
    stacked = np.empty((n, b * q), dtype=values.dtype)
    for i in range(b):
        stacked[:, i * q : (i + 1) * q] = values[orders[i]]
    prod = mat_t @ stacked
    return prod.reshape(mat_t.shape[0], b, q).transpose(1, 0, 2)


def _linear_statistic(x, y, z, kind: str, z_ridge: float = 0.0):
    """Batched Wilks statistic for the linear measures.

    Returns a closure mapping row orders of Y to genvar (kind="genvar") or
    cc (kind="cc") values, computed from partial-covariance determinants.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    n = x.shape[0]
    factor = 1.0 if kind == "genvar" else 0.5

    if z.shape[1]:
        s_zz = z.T @ z / n
        if z_ridge:
            s_zz = s_zz + z_ridge * np.eye(s_zz.shape[0])
        try:
            ell_z = np.linalg.cholesky(s_zz)
        except np.linalg.LinAlgError:
            ridge = 1e-10 * np.trace(s_zz) / s_zz.shape[0]
            ell_z = np.linalg.cholesky(s_zz + ridge * np.eye(s_zz.shape[0]))
        x_res = x - z @ scipy.linalg.cho_solve((ell_z, True), z.T @ x / n)
        # Whitened conditioning columns turn the per-replicate partialization
        # into a plain inner product.
        z_white = scipy.linalg.solve_triangular(ell_z, z.T, lower=True)
    else:
        z_white = np.zeros((0, n))
        x_res = x
    s_xx_z = x_res.T @ x_res / n
    ld_x = _chol_logdet(s_xx_z)
    s_yy = y.T @ y / n
    dx = x.shape[1]
    # Heavy per-replicate products run in single precision; the determinant
    # algebra stays in double, and observed and null values share the path.
    left_t = np.ascontiguousarray(
        np.concatenate([x_res.T, z_white], axis=0), dtype=np.float32
    )
    y32 = np.asarray(y, dtype=np.float32)

    def stat(orders: np.ndarray) -> np.ndarray:
        prods = _gathered_products(left_t, y32, orders).astype(np.float64) / n
        out = np.empty(orders.shape[0])
        for b in range(orders.shape[0]):
            v = prods[b, :dx]
            w = prods[b, dx:]
            s_yy_z = s_yy - w.T @ w if w.shape[0] else s_yy
            try:
                ell_y = np.linalg.cholesky(s_yy_z)
            except np.linalg.LinAlgError:
                jit = 1e-10 * max(np.trace(s_yy_z) / max(s_yy_z.shape[0], 1), 1e-300)
                ell_y = np.linalg.cholesky(s_yy_z + jit * np.eye(s_yy_z.shape[0]))
            t = scipy.linalg.solve_triangular(ell_y, v.T, lower=True)
            inner = s_xx_z - t.T @ t
            ld = _chol_logdet(inner)
            out[b] = factor * min(ld_x - ld, GENVAR_CAP)
        return out

    return stat


def _kernel_statistic(fx: CenteredFactor, fy: CenteredFactor, fz: CenteredFactor,
                      ridge: float, z_ridge: float | None):
    """Batched kernel score under row permutations of the source factor."""
    eps = ridge if z_ridge is None else z_ridge
    gx, gy, gz = fx.factor, fy.factor, fz.factor
    r_x = np.linalg.qr(gx, mode="r")
    r_y = np.linalg.qr(gy, mode="r")
    s_xx = gx.T @ gx
    s_yy = gy.T @ gy
    if fz.rank:
        s_zz = gz.T @ gz
        w = _z_partial_weight(s_zz, eps)
        s_xz = gx.T @ gz
        t_x = s_xz @ w
        m_xx = s_xx - t_x @ s_xz.T
    else:
        w = None
        t_x = None
        m_xx = s_xx
    mt_xx = r_x @ m_xx @ r_x.T
    b_x = 0.5 * (mt_xx + mt_xx.T) + ridge * np.eye(fx.rank)
    ld_bx = _chol_logdet(b_x)
    cx = fx.rank
    # Single-precision stacked products over the batch; small determinant
    # algebra in double precision.
    left_t = np.ascontiguousarray(np.concatenate([gx, gz], axis=1).T, dtype=np.float32)
    gy32 = np.asarray(gy, dtype=np.float32)

    def stat(orders: np.ndarray) -> np.ndarray:
        prods = _gathered_products(left_t, gy32, orders).astype(np.float64)
        out = np.empty(orders.shape[0])
        eye_y = ridge * np.eye(fy.rank)
        for b in range(orders.shape[0]):
            s_xy = prods[b, :cx]
            if w is not None:
                s_zy = prods[b, cx:]
                wz = w @ s_zy
                m_xy = s_xy - t_x @ s_zy
                m_yy = s_yy - s_zy.T @ wz
            else:
                m_xy = s_xy
                m_yy = s_yy
            mt_xy = r_x @ m_xy @ r_y.T
            mt_yy = r_y @ m_yy @ r_y.T
            b_y = 0.5 * (mt_yy + mt_yy.T) + eye_y
            try:
                ell_y = np.linalg.cholesky(b_y)
            except np.linalg.LinAlgError:
                ell_y = np.linalg.cholesky(b_y + ridge * np.eye(fy.rank))
            t = scipy.linalg.solve_triangular(ell_y, mt_xy.T, lower=True)
            inner = b_x - t.T @ t
            out[b] = 0.5 * (ld_bx - _chol_logdet(inner))
        return out

    return stat


def block_kernel_factor(
    mat: np.ndarray,
    spec: KernelSpec,
    kernel_mode: str = "additive",
    block: str = "",
    max_rank: int | None = None,
) -> CenteredFactor:
    """Centered kernel factor of a block under the scan's kernel policy."""
    mat = np.asarray(mat, dtype=float)
    if max_rank is None:
        max_rank = spec.max_rank
    spec = replace(spec, max_rank=max_rank)
    if kernel_mode == "additive":
        column_fn = lambda j: additive_gram_column(mat, spec.width, j)
    elif kernel_mode == "vector":
        width = spec.width * math.sqrt(max(mat.shape[1], 1))
        column_fn = lambda j: gaussian_gram_column(mat, width, j)
    else:
        raise ValueError(f"unknown kernel mode {kernel_mode!r}")
    return low_rank_centered_gram(mat, spec, block=block, column_fn=column_fn)


def prepared_statistic(method: str, design_or_factors, settings: ScanSettings):
    """Batched permutation statistic for a design (cc/genvar) or factor triple."""
    if method in ("cc", "genvar"):
        design = design_or_factors
        return _linear_statistic(
            design.X, design.Y, design.Z, kind=method,
            z_ridge=settings.kernel.z_ridge or 0.0,
        )
    if method == "kcc":
        fx, fy, fz = design_or_factors
        return _kernel_statistic(fx, fy, fz, settings.kernel.ridge, settings.kernel.z_ridge)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Scan drivers


def _bartlett_n(n: int, dx: int, dy: int, dz: int) -> int:
    """Effective sample count for the chi-square approximation."""
    return max(int(round(n - dz - (dx + dy + 3) / 2.0)), 1)


def evaluate_pair(
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    settings: ScanSettings,
    source: str = "Y",
    target: str = "X",
    lag: int = 1,
    seed_key=(0,),
    n_perm: int | None = None,
    factors: tuple[CenteredFactor, CenteredFactor, CenteredFactor] | None = None,
) -> CausalResult:
    """Score one (source -> target) design and attach significance.

    Linear measures get a chi-square p-value with d_X * d_Y degrees of
    freedom at the Bartlett-corrected sample count; every measure gets a
    permutation p-value when permutations are requested. Precomputed kernel
    ``factors`` (target, source, conditioning) skip the factorization.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    n = x.shape[0]
    if n_perm is None:
        n_perm = settings.n_perm
    design = LaggedDesign(X=x, Y=y, Z=z, lags=lag)
    method = settings.method

    p_chi2 = None
    if method == "cc":
        spectrum = pcca(x, y, z, ridge=settings.kernel.z_ridge or 0.0)
        score = cc_score(spectrum)
    elif method == "genvar":
        spectrum = pcca(x, y, z, ridge=settings.kernel.z_ridge or 0.0)
        score = max(genvar_score(design), 0.0)
    elif method == "kcc":
        if factors is None:
            factors = (
                block_kernel_factor(x, settings.kernel, settings.kernel_mode, target),
                block_kernel_factor(y, settings.kernel, settings.kernel_mode, source),
                block_kernel_factor(
                    z, settings.kernel, settings.kernel_mode, "Z",
                    max_rank=settings.effective_z_max_rank,
                ),
            )
        spectrum = kpcca(*factors, settings.kernel.ridge, settings.kernel.z_ridge)
        score = kcc_score(spectrum)
    else:
        raise ValueError(f"unknown method {method!r}")

    if settings.use_chi2 and method in ("cc", "genvar"):
        df = x.shape[1] * y.shape[1]
        n_eff = _bartlett_n(n, x.shape[1], y.shape[1], z.shape[1])
        cc_equivalent = score if method == "cc" else score / 2.0
        p_chi2 = chi2_pvalue(cc_equivalent, n_eff, df)

    p_perm = None
    q99 = None
    if n_perm:
        stat = prepared_statistic(method, factors if method == "kcc" else design, settings)
        perm = permutation_test(
            stat,
            n,
            n_perm=n_perm,
            seed=seed_key,
            scheme=settings.perm_scheme,
            min_shift=max(lag, 1),
        )
        p_perm = perm.p_value
        q99 = perm.null_quantile_99

    return CausalResult(
        method=method,
        source=source,
        target=target,
        lag=lag,
        score=float(score),
        rank_score=aggregate_rank_score(x, y),
        correlations=np.asarray(spectrum.correlations, dtype=float),
        p_chi2=p_chi2,
        p_perm=p_perm,
        null_quantile_99=q99,
        n_samples=n,
    )


class _FactorCache:
    """Shares kernel factors across scan cells.

    The conditioning set of a (source -> target) test contains every block
    except the source, so its factor depends only on (source, lag); target
    factors depend only on the target block. Kernel evaluations are
    invariant to column order, hence blocks are always assembled in sorted
    name order.
    """

    def __init__(self, settings: ScanSettings):
        self.settings = settings
        self.targets: dict[tuple[str, int], CenteredFactor] = {}
        self.sources: dict[tuple[str, int], CenteredFactor] = {}
        self.conditioners: dict[tuple[str, int], CenteredFactor] = {}

    def target(self, name: str, mat: np.ndarray) -> CenteredFactor:
        # Keyed by row count: the design shrinks with the lag depth for
        # trajectory data while staying fixed for pre-lagged blocks.
        key = (name, mat.shape[0])
        if key not in self.targets:
            self.targets[key] = block_kernel_factor(
                mat, self.settings.kernel, self.settings.kernel_mode, name
            )
        return self.targets[key]

    def source(self, name: str, lag: int, mat: np.ndarray) -> CenteredFactor:
        key = (name, lag)
        if key not in self.sources:
            self.sources[key] = block_kernel_factor(
                mat, self.settings.kernel, self.settings.kernel_mode, name
            )
        return self.sources[key]

    def conditioner(self, source: str, lag: int, mat: np.ndarray) -> CenteredFactor:
        key = (source, lag)
        if key not in self.conditioners:
            self.conditioners[key] = block_kernel_factor(
                mat, self.settings.kernel, self.settings.kernel_mode, "Z",
                max_rank=self.settings.effective_z_max_rank,
            )
        return self.conditioners[key]


def _scan_cells(get_design, names, pairs, settings, n_perm_for):
    """Common scan loop: iterate cells, reuse kernel factors, score each."""
    cache = _FactorCache(settings) if settings.method == "kcc" else None
    results = []
    for idx, (src, tgt) in enumerate(pairs):
        for lag in range(1, settings.lags + 1):
            x, y, z = get_design(src, tgt, lag)
            factors = None
            if cache is not None:
                factors = (
                    cache.target(tgt, x),
                    cache.source(src, lag, y),
                    cache.conditioner(src, lag, z),
                )
            results.append(
                evaluate_pair(
                    x, y, z, settings,
                    source=src, target=tgt, lag=lag,
                    seed_key=(settings.seed, idx, lag),
                    n_perm=n_perm_for(src, tgt, lag),
                    factors=factors,
                )
            )
    return results


def causal_scan(ts: TimeSeriesTable, settings: ScanSettings,
                pairs: Sequence[tuple[str, str]] | None = None) -> list[CausalResult]:
    """Test every ordered block pair at every lag 1..settings.lags.

    For each (source, target) pair the conditioning set contains the
    target's own history plus all remaining blocks. Results are ordered by
    (source, target, lag) with block names sorted, so the output does not
    depend on declaration order.
    """
    names = sorted(ts.blocks)
    if len(names) < 2:
        raise ValueError("need at least two blocks to scan")
    if pairs is None:
        pairs = [(s, t) for s in names for t in names if s != t]

    def get_design(src, tgt, lag):
        others = tuple(b for b in names if b not in (src, tgt))
        design = build_design(ts, target=tgt, source=src, conditioning=others, k=lag)
        return design.X, design.Y, design.Z

    return _scan_cells(get_design, names, pairs, settings, lambda s, t, l: settings.n_perm)


def _standardize_columns(mat: np.ndarray) -> np.ndarray:
    sd = mat.std(axis=0)
    sd[sd == 0] = 1.0
    return (mat - mat.mean(axis=0)) / sd


def scan_lagged_blocks(
    blocks: Mapping[str, Sequence[np.ndarray]],
    settings: ScanSettings,
    pairs: Sequence[tuple[str, str]] | None = None,
    standardize: bool = True,
    n_perm_for: Callable[[str, str, int], int] | None = None,
) -> list[CausalResult]:
    """Scan pre-lagged blocks: ``blocks[name][lag]`` holds the lag-slot matrix.

    Used for generated benchmark systems whose rows are independent
    realizations rather than a single trajectory; the design for
    (source, target, lag) takes the target's slot 0 against the source's
    slots 1..lag, conditioning on slots 1..lag of everything else.
    ``n_perm_for`` may vary the permutation count per cell (for example
    fewer replicates on cells only screened for false positives).
    """
    names = sorted(blocks)
    if len(names) < 2:
        raise ValueError("need at least two blocks to scan")
    k_max = min(len(blocks[b]) - 1 for b in names)
    settings = replace(settings, lags=min(settings.lags, k_max))
    data = {
        name: [
            _standardize_columns(np.asarray(m, dtype=float)) if standardize
            else np.asarray(m, dtype=float)
            for m in blocks[name]
        ]
        for name in names
    }
    if pairs is None:
        pairs = [(s, t) for s in names for t in names if s != t]
    if n_perm_for is None:
        n_perm_for = lambda s, t, l: settings.n_perm

    def get_design(src, tgt, lag):
        x = data[tgt][0]
        y = np.concatenate(data[src][1 : lag + 1], axis=1)
        z_parts = []
        for name in names:
            if name != src:
                z_parts.extend(data[name][1 : lag + 1])
        return x, y, np.concatenate(z_parts, axis=1)

    return _scan_cells(get_design, names, pairs, settings, n_perm_for)
