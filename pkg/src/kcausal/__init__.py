"""Wiener-Granger causality via partial and kernel canonical correlations."""

from .causality import (
    CausalResult,
    PermutationResult,
    ScanSettings,
    causal_scan,
    cc_score,
    chi2_pvalue,
    evaluate_pair,
    genvar_score,
    kcc_score,
    permutation_test,
    prepared_statistic,
    scan_lagged_blocks,
    te_bounds,
)
from .cca import CanonicalSpectrum, cca, pcca
from .embedding import (
    LaggedDesign,
    TimeSeriesTable,
    aggregate_rank_score,
    build_design,
    spearman,
    standardize,
)
from .kernel import (
    CenteredFactor,
    KernelSpec,
    gaussian_gram,
    gaussian_gram_column,
    kpcca,
    low_rank_centered_gram,
)
from .numerics import (
    LowRankFactor,
    SymSpectrum,
    cholesky,
    incomplete_cholesky,
    partial_covariance,
    sym_generalized_eig,
)
from .synth import SynthConfig, generate, generate_null

__version__ = "0.1.0"
