"""Lag embedding of multivariate time series and rank-correlation helpers.

The predictive layout used throughout the package: the target block at time
t is explained from lags 1..k of a source block, conditioning on lags 1..k
of the target itself plus any further blocks. Row i of every design matrix
refers to time t = k + i of the original series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateInput, InsufficientLength, ZeroVariance

__all__ = [
    "TimeSeriesTable",
    "LaggedDesign",
    "standardize",
    "build_design",
    "spearman",
    "aggregate_rank_score",
]


@dataclass(frozen=True)
class TimeSeriesTable:
    """Named multivariate observations, rows in time order.

    ``blocks`` maps block names to lists of column names and must partition
    the columns exactly.
    """

    values: np.ndarray
    columns: list[str]
    blocks: dict[str, list[str]]
    time_index: list = field(default_factory=list)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array (time x variables)")
        if values.shape[0] < 2:
            raise ValueError("need at least two time points")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        if values.shape[1] != len(self.columns):
            raise ValueError("column names do not match value width")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate variable names")
        claimed = [c for cols in self.blocks.values() for c in cols]
        if sorted(claimed) != sorted(self.columns):
            raise ValueError("blocks must partition the columns exactly")
        if not self.time_index:
            object.__setattr__(self, "time_index", list(range(values.shape[0])))
        elif len(self.time_index) != values.shape[0]:
            raise ValueError("time index length does not match row count")

    @property
    def n_times(self) -> int:
        return self.values.shape[0]

    def block_matrix(self, name: str) -> np.ndarray:
        idx = [self.columns.index(c) for c in self.blocks[name]]
        return self.values[:, idx]


@dataclass(frozen=True)
class LaggedDesign:
    """Aligned sample matrices for one conditional-independence test.

    X holds the target at time t, Y stacks the source at times t-1..t-k
    (lag-major), and Z stacks the target's own history plus any conditioning
    blocks over the same lags.
    """

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    lags: int

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]


def standardize(ts: TimeSeriesTable) -> TimeSeriesTable:
    """Rescale every column to sample mean 0 and standard deviation 1.

    Uses the 1/N variance convention, matching the covariance normalization
    in the correlation modules. Raises :class:`ZeroVariance` naming the
    first constant column.
    """
    v = ts.values
    mean = v.mean(axis=0)
    sd = v.std(axis=0)
    for j, s in enumerate(sd):
        if s == 0.0:
            raise ZeroVariance(ts.columns[j])
    out = (v - mean) / sd
    return TimeSeriesTable(out, list(ts.columns), dict(ts.blocks), list(ts.time_index))


def _stack_lags(block: np.ndarray, k: int, n: int) -> np.ndarray:
    """Columns of ``block`` at lags 1..k, aligned to rows k..T-1, lag-major."""
    t = block.shape[0]
    return np.concatenate([block[k - lag : t - lag] for lag in range(1, k + 1)], axis=1)


def build_design(
    ts: TimeSeriesTable,
    target: str,
    source: str,
    conditioning: tuple[str, ...] | list[str] = (),
    k: int = 1,
) -> LaggedDesign:
    """Assemble the (X, Y, Z) matrices for source -> target at lag depth k.

    Z always includes the k lags of the target block itself; conditioning
    blocks are appended in sorted name order so the layout is independent of
    declaration order. Raises :class:`InsufficientLength` when the series
    leaves fewer than two usable rows.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    names = {target, source, *conditioning}
    if len(names) < 2 + len(conditioning):
        raise ValueError("target, source and conditioning blocks must be disjoint")
    t = ts.n_times
    if t <= k + 1:
        raise InsufficientLength(f"series length {t} supports no design at k={k}")
    x = ts.block_matrix(target)[k:]
    y = _stack_lags(ts.block_matrix(source), k, t - k)
    z_parts = [_stack_lags(ts.block_matrix(target), k, t - k)]
    for name in sorted(conditioning):
        z_parts.append(_stack_lags(ts.block_matrix(name), k, t - k))
    return LaggedDesign(X=x, Y=y, Z=np.concatenate(z_parts, axis=1), lags=k)


def spearman(a, b) -> float:
    """Rank correlation of two equal-length sequences, average ranks on ties."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length 1-d sequences of length >= 2")
    ra = rankdata(a)
    rb = rankdata(b)
    if np.ptp(ra) == 0 or np.ptp(rb) == 0:
        raise DegenerateInput("constant sequence has no rank correlation")
    ra -= ra.mean()
    rb -= rb.mean()
    return float(ra @ rb / np.sqrt((ra @ ra) * (rb @ rb)))


def aggregate_rank_score(xblock, yblock) -> float:
    """Rank correlation of the per-block average ranks.

    Each column is ranked within its block, ranks are averaged across the
    block's columns per observation, and the two average-rank vectors are
    compared with :func:`spearman`.
    """
    xblock = np.atleast_2d(np.asarray(xblock, dtype=float))
    yblock = np.atleast_2d(np.asarray(yblock, dtype=float))
    if xblock.shape[0] == 1:
        xblock = xblock.T
    if yblock.shape[0] == 1:
        yblock = yblock.T
    if xblock.shape[0] != yblock.shape[0]:
        raise ValueError("blocks must have equal row counts")
    xr = np.column_stack([rankdata(xblock[:, j]) for j in range(xblock.shape[1])])
    yr = np.column_stack([rankdata(yblock[:, j]) for j in range(yblock.shape[1])])
    return spearman(xr.mean(axis=1), yr.mean(axis=1))
