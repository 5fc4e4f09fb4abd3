import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcausal.embedding import (
    TimeSeriesTable,
    aggregate_rank_score,
    build_design,
    spearman,
    standardize,
)
from kcausal.errors import DegenerateInput, InsufficientLength, ZeroVariance


def make_table(values, block_size=1, block_names=None):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    cols = [f"v{i}" for i in range(values.shape[1])]
    if block_names is None:
        blocks = {c: [c] for c in cols}
    else:
        blocks = {}
        for i, name in enumerate(block_names):
            blocks[name] = cols[i * block_size : (i + 1) * block_size]
    return TimeSeriesTable(values=values, columns=cols, blocks=blocks)


def test_standardize_basic():
    ts = make_table([1.0, 2.0, 3.0])
    out = standardize(ts)
    col = out.values[:, 0]
    assert abs(col.mean()) < 1e-12
    assert abs(col.std() - 1.0) < 1e-12


def test_standardize_idempotent():
    rng = np.random.default_rng(0)
    ts = make_table(rng.standard_normal((50, 3)) * 4 + 2)
    once = standardize(ts)
    twice = standardize(once)
    assert np.abs(once.values - twice.values).max() < 1e-12


def test_standardize_large_sample():
    rng = np.random.default_rng(1)
    ts = make_table(rng.standard_normal(1000) * 3 - 5)
    out = standardize(ts)
    assert abs(out.values.mean()) < 1e-12
    assert abs(out.values.std() - 1.0) < 1e-12


def test_standardize_zero_variance_names_column():
    ts = make_table(np.column_stack([np.arange(5.0), np.full(5, 2.0)]))
    with pytest.raises(ZeroVariance) as err:
        standardize(ts)
    assert err.value.name == "v1"


def test_build_design_length_arithmetic():
    rng = np.random.default_rng(2)
    ts = make_table(rng.standard_normal((10, 2)), block_names=["a", "b"])
    design = build_design(ts, target="a", source="b", k=4)
    assert design.n_samples == 6
    assert design.X.shape == (6, 1)
    assert design.Y.shape == (6, 4)
    assert design.Z.shape == (6, 4)


def test_build_design_ramp_alignment():
    vals = np.column_stack([np.arange(5.0), np.zeros(5) + np.arange(5.0) * 2])
    ts = make_table(vals, block_names=["a", "b"])
    design = build_design(ts, target="a", source="b", k=1)
    assert np.allclose(design.X[:, 0], [1, 2, 3, 4])
    assert np.allclose(design.Z[:, 0], [0, 1, 2, 3])
    assert np.allclose(design.Y[:, 0], [0, 2, 4, 6])


def test_build_design_recovers_ar_coefficient():
    rng = np.random.default_rng(3)
    t = 5000
    a = np.zeros(t)
    for i in range(1, t):
        a[i] = 0.9 * a[i - 1] + rng.standard_normal()
    ts = make_table(np.column_stack([a, rng.standard_normal(t)]), block_names=["a", "b"])
    design = build_design(ts, target="a", source="b", k=1)
    coef, *_ = np.linalg.lstsq(design.Z, design.X, rcond=None)
    assert abs(coef[0, 0] - 0.9) < 0.03


def test_build_design_truncation_consistency():
    rng = np.random.default_rng(4)
    vals = rng.standard_normal((30, 2))
    ts_full = make_table(vals, block_names=["a", "b"])
    ts_short = make_table(vals[:-1], block_names=["a", "b"])
    d_full = build_design(ts_full, "a", "b", k=3)
    d_short = build_design(ts_short, "a", "b", k=3)
    assert np.allclose(d_full.X[:-1], d_short.X)
    assert np.allclose(d_full.Y[:-1], d_short.Y)
    assert np.allclose(d_full.Z[:-1], d_short.Z)


def test_build_design_insufficient_length():
    ts = make_table(np.random.default_rng(5).standard_normal((5, 2)), block_names=["a", "b"])
    with pytest.raises(InsufficientLength):
        build_design(ts, "a", "b", k=4)


def test_build_design_rejects_overlapping_blocks():
    ts = make_table(np.random.default_rng(6).standard_normal((10, 2)), block_names=["a", "b"])
    with pytest.raises(ValueError):
        build_design(ts, "a", "a", k=1)


def test_spearman_monotone():
    assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)


def test_spearman_reversed():
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_spearman_hand_computed():
    assert spearman([1, 2, 3, 4, 5], [1, 3, 2, 5, 4]) == pytest.approx(0.8)


def test_spearman_ties_average_ranks():
    # ranks of b: (1.5, 1.5, 3) -> correlation well-defined and symmetric
    r1 = spearman([1, 2, 3], [5, 5, 9])
    r2 = spearman([5, 5, 9], [1, 2, 3])
    assert r1 == pytest.approx(r2)


def test_spearman_degenerate():
    with pytest.raises(DegenerateInput):
        spearman([1, 2, 3], [7, 7, 7])


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(-10**6, 10**6), min_size=4, max_size=40, unique=True),
    st.integers(min_value=0, max_value=1000),
)
def test_spearman_invariant_under_monotone_transform(xs, seed):
    rng = np.random.default_rng(seed)
    ys = rng.standard_normal(len(xs))
    base = spearman(xs, ys)
    # strictly increasing and collision-free on integer-spaced inputs
    warped = spearman(2.0 * np.asarray(xs, dtype=float) + np.tanh(xs), ys)
    assert base == pytest.approx(warped, abs=1e-12)


def test_aggregate_rank_single_column_reduces_to_spearman():
    rng = np.random.default_rng(7)
    a = rng.standard_normal(30)
    b = rng.standard_normal(30)
    assert aggregate_rank_score(a, b) == pytest.approx(spearman(a, b))


def test_aggregate_rank_identical_blocks():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((25, 3))
    assert aggregate_rank_score(x, x) == pytest.approx(1.0)


def test_aggregate_rank_shared_plus_noise_matches_direct():
    rng = np.random.default_rng(9)
    shared = rng.standard_normal(200)
    xb = np.column_stack([shared, rng.standard_normal(200)])
    yb = np.column_stack([shared + 0.1 * rng.standard_normal(200), rng.standard_normal(200)])
    got = aggregate_rank_score(xb, yb)
    assert 0.0 < got < 1.0

    from scipy.stats import rankdata

    mean_x = np.column_stack([rankdata(xb[:, j]) for j in range(2)]).mean(axis=1)
    mean_y = np.column_stack([rankdata(yb[:, j]) for j in range(2)]).mean(axis=1)
    assert got == pytest.approx(spearman(mean_x, mean_y))


def test_table_rejects_bad_blocks():
    with pytest.raises(ValueError):
        TimeSeriesTable(
            values=np.zeros((4, 2)),
            columns=["a", "b"],
            blocks={"A": ["a"]},
        )
    with pytest.raises(ValueError):
        TimeSeriesTable(
            values=np.array([[1.0, np.nan], [0.0, 1.0]]),
            columns=["a", "b"],
            blocks={"A": ["a"], "B": ["b"]},
        )
