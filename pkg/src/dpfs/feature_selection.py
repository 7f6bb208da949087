"""Filter feature scores and the DP feature-selection (DFS) release.

Scores are non-negative magnitudes and rankings sort them in descending
order with ties going to the lower feature index. Feature indices are
0-based throughout.

DFS ranks features by the distance criterion ``|mean_1j - mean_2j|`` (or the
largest pairwise class-mean gap when K > 2), keeps the top ``m`` columns,
recomputes the l1 sensitivity on the clipped matrix and releases it through
the Gaussian mechanism. The ranking is computed on the clean data, so the
selection step itself consumes no privacy budget and is not private.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from dpfs.errors import DomainError
from dpfs.gaussian_model import (
    Calibration,
    LabeledDataset,
    PrivacyBudget,
    add_noise,
    l1_sensitivity,
    noise_std,
)
from dpfs.lda import VARIANCE_FLOOR, class_moments
from dpfs.numerics import Seed


@dataclass(frozen=True, eq=False)
class FeatureRanking:
    scores: np.ndarray
    order: np.ndarray

    @classmethod
    def from_scores(cls, scores) -> "FeatureRanking":
        scores = np.asarray(scores, dtype=float).reshape(-1)
        # stable sort on the negated scores keeps ascending index among ties
        order = np.argsort(-scores, kind="stable")
        return cls(scores, order)

    def top(self, m: int) -> np.ndarray:
        return select_top_m(self, m)


@dataclass(frozen=True, eq=False)
class DfsOutput:
    privatized: LabeledDataset
    selected_indices: np.ndarray
    n_max: float
    noise_std: float


def t_statistic_from_moments(mean1, mean2, var1, var2, n1: int, n2: int) -> np.ndarray:
    """Welch-form t statistic ``(m1 - m2) / sqrt(v1/n1 + v2/n2)``, elementwise.

    The standard error is floored so constant features score 0 rather than
    dividing by zero.
    """
    mean1, mean2, var1, var2 = (np.asarray(a, dtype=float) for a in (mean1, mean2, var1, var2))
    se2 = np.maximum(var1 / n1 + var2 / n2, VARIANCE_FLOOR)
    return (mean1 - mean2) / np.sqrt(se2)


def t_statistic_scores(data: LabeledDataset) -> FeatureRanking:
    if data.class_count != 2:
        raise DomainError("the t-statistic filter is defined for two classes")
    means, variances, sizes = class_moments(data, min_count=2)
    t = t_statistic_from_moments(means[0], means[1], variances[0], variances[1], sizes[0], sizes[1])
    return FeatureRanking.from_scores(np.abs(t))


def distance_scores(data: LabeledDataset) -> FeatureRanking:
    """``|mean_1j - mean_2j|`` for each feature j."""
    if data.class_count != 2:
        raise DomainError("the distance criterion is defined for two classes; use max_pairwise_distance_scores")
    means, _, _ = class_moments(data, min_count=1)
    return FeatureRanking.from_scores(np.abs(means[0] - means[1]))


def max_pairwise_distance_scores(data: LabeledDataset) -> FeatureRanking:
    """Largest gap between any two class means, per feature."""
    means, _, _ = class_moments(data, min_count=1)
    scores = np.zeros(data.p)
    for a, b in combinations(range(means.shape[0]), 2):
        np.maximum(scores, np.abs(means[a] - means[b]), out=scores)
    return FeatureRanking.from_scores(scores)


def select_top_m(ranking: FeatureRanking, m: int) -> np.ndarray:
    p = ranking.order.size
    if not 1 <= m <= p:
        raise DomainError(f"m must lie in [1, {p}], got {m}")
    return ranking.order[:m].copy()


def release_columns(
    data: LabeledDataset,
    indices: Sequence[int],
    budget: PrivacyBudget,
    seed: Seed,
    calibration: Calibration = "std",
) -> DfsOutput:
    """Clip ``data`` to ``indices`` and privatize it with its own l1 sensitivity."""
    idx = np.asarray(indices, dtype=int)
    clipped = data.select_columns(idx)
    n_max = l1_sensitivity(clipped)
    std = noise_std(n_max, budget, calibration)
    return DfsOutput(add_noise(clipped, std, seed), idx, n_max, std)


def dfs_pipeline(
    data: LabeledDataset,
    m: int,
    budget: PrivacyBudget,
    seed: Seed,
    calibration: Calibration = "std",
) -> DfsOutput:
    """Rank by the distance criterion, keep the top ``m`` features, privatize.

    Two-class data is ranked with :func:`distance_scores`, K > 2 with
    :func:`max_pairwise_distance_scores`.
    """
    if data.class_count == 2:
        ranking = distance_scores(data)
    else:
        ranking = max_pairwise_distance_scores(data)
    return release_columns(data, select_top_m(ranking, m), budget, seed, calibration)
