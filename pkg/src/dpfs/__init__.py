"""Differentially private Gaussian classification with distance-based feature selection."""
from dpfs.errors import DomainError, ParseError
from dpfs.feature_selection import (
    DfsOutput,
    FeatureRanking,
    dfs_pipeline,
    distance_scores,
    max_pairwise_distance_scores,
    select_top_m,
    t_statistic_scores,
)
from dpfs.gaussian_model import (
    GmParams,
    LabeledDataset,
    PrivacyBudget,
    gaussian_mechanism,
    l1_sensitivity,
    noise_std,
    sample_gm,
)
from dpfs.lda import (
    BoundInputs,
    LdaModel,
    empirical_error,
    error_bound_binary,
    error_bound_multiclass,
    fit_lda,
    gamma,
    predict_binary,
    predict_multiclass,
    psi_statistic,
)
from dpfs.numerics import derive_seed, sample_normal, std_normal_cdf

__version__ = "0.1.0"
