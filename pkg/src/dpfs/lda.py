"""Diagonal-covariance LDA and the closed-form error bounds that go with it.

The model is fitted from (possibly privatized) training data: per-class
means plus the average of the per-class unbiased variances. Binary
prediction uses the sign of ``(x - (m1 + m2)/2)' S^-1 (m1 - m2)``;
multi-class prediction takes ``argmax_i (x - m_i/2)' S^-1 m_i``.

The error bounds drop the asymptotic ``(1 + o_p(1))`` factors, so they are
evaluated as::

    binary:      1 - Phi(G / (2 sqrt(4p/n + G)))
    multi-class: 1 - prod_i Phi(G_i / (2 sqrt(4Kp/(2n) + G_i)))

Both are stated for balanced classes; nothing here enforces balance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dpfs.errors import DomainError
from dpfs.gaussian_model import Calibration, GmParams, LabeledDataset, PrivacyBudget, noise_std
from dpfs.numerics import std_normal_cdf

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class LdaModel:
    class_means: np.ndarray
    pooled_variances: np.ndarray

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.class_means, dtype=float))
        var = np.asarray(self.pooled_variances, dtype=float).reshape(-1)
        if means.shape[0] < 2:
            raise DomainError("LDA needs at least two classes")
        if means.shape[1] != var.size:
            raise DomainError("class means and pooled variances disagree on dimension")
        if np.any(var <= 0):
            raise DomainError("pooled variances must be strictly positive")
        object.__setattr__(self, "class_means", means)
        object.__setattr__(self, "pooled_variances", var)

    @property
    def class_count(self) -> int:
        return self.class_means.shape[0]

    @property
    def dimension(self) -> int:
        return self.class_means.shape[1]


def class_moments(data: LabeledDataset, min_count: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class means, unbiased variances and counts, each indexed by label - 1.

    Variances are NaN when ``min_count`` is 1 and a class has a single row.
    """
    K = data.class_count
    if K < 2:
        raise DomainError("need at least two classes")
    sizes = data.class_sizes()
    small = [k + 1 for k in range(K) if sizes[k] < min_count]
    if small:
        raise DomainError(f"classes {small} have fewer than {min_count} samples")
    means = np.empty((K, data.p))
    variances = np.full((K, data.p), np.nan)
    for k in range(K):
        rows = data.class_rows(k + 1)
        means[k] = rows.mean(axis=0)
        if rows.shape[0] >= 2:
            variances[k] = rows.var(axis=0, ddof=1)
    return means, variances, sizes


def fit_lda(data: LabeledDataset) -> LdaModel:
    """Estimate class means and the pooled diagonal covariance.

    The pooled variance of feature j is the plain average over classes of the
    unbiased per-class variances, floored at ``VARIANCE_FLOOR``.
    """
    means, variances, _ = class_moments(data, min_count=2)
    pooled = np.maximum(variances.mean(axis=0), VARIANCE_FLOOR)
    return LdaModel(means, pooled)


def _as_points(model: LdaModel, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != model.dimension:
        raise DomainError(f"expected points of dimension {model.dimension}, got shape {np.shape(x)}")
    return X, single


def binary_statistic(model: LdaModel, x) -> np.ndarray | float:
    """``(x - (m1 + m2)/2)' S^-1 (m1 - m2)`` for one point or each row of a matrix."""
    if model.class_count != 2:
        raise DomainError(f"binary rule needs a 2-class model, got K={model.class_count}")
    X, single = _as_points(model, x)
    m1, m2 = model.class_means
    w = (m1 - m2) / model.pooled_variances
    stat = (X - 0.5 * (m1 + m2)) @ w
    return float(stat[0]) if single else stat


def predict_binary(model: LdaModel, x):
    """Label 1 when the binary statistic is strictly positive, otherwise 2."""
    stat = binary_statistic(model, x)
    if np.ndim(stat) == 0:
        return 1 if stat > 0 else 2
    return np.where(stat > 0, 1, 2)


def multiclass_scores(model: LdaModel, x) -> np.ndarray:
    X, single = _as_points(model, x)
    W = model.class_means / model.pooled_variances
    scores = X @ W.T - 0.5 * np.einsum("kj,kj->k", W, model.class_means)
    return scores[0] if single else scores


def predict_multiclass(model: LdaModel, x):
    """Argmax of ``(x - m_i/2)' S^-1 m_i``; ties go to the smallest label."""
    scores = multiclass_scores(model, x)
    # np.argmax returns the first maximum, which is the tie rule we want
    labels = np.argmax(scores, axis=-1) + 1
    return int(labels) if np.ndim(labels) == 0 else labels


def predict(model: LdaModel, x):
    if model.class_count == 2:
        return predict_binary(model, x)
    return predict_multiclass(model, x)


def empirical_error(model: LdaModel, test: LabeledDataset) -> float:
    """Fraction of rows in ``test`` whose predicted label differs from the true one."""
    if test.n == 0:
        raise DomainError("cannot evaluate on an empty test set")
    pred = predict(model, test.features)
    return float(np.mean(pred != test.labels))


def psi_statistic(model: LdaModel, truth: GmParams) -> float:
    """Standardized margin of the fitted binary rule for a fresh class-1 point.

    Uses the true class-1 mean together with the fitted means and pooled
    variances; ``1 - Phi(psi)`` is the conditional class-1 error when the
    fitted variances match the true ones.
    """
    if model.class_count != 2 or truth.class_count != 2:
        raise DomainError("psi is defined for two-class models only")
    if truth.dimension != model.dimension:
        raise DomainError("model and truth disagree on dimension")
    m1, m2 = model.class_means
    alpha_hat = m1 - m2
    w = alpha_hat / model.pooled_variances
    norm_sq = float(alpha_hat @ w)
    if norm_sq <= 0:
        raise DomainError("fitted class means coincide; the classifier is degenerate")
    return float((truth.means[0] - 0.5 * (m1 + m2)) @ w) / math.sqrt(norm_sq)


def conditional_error(model: LdaModel, truth: GmParams, label: int = 1) -> float:
    """Exact misclassification probability of a fresh point from class ``label``.

    The binary statistic of ``x ~ N(mu, diag(var))`` is itself Gaussian, so
    this needs no sampling. Unlike :func:`psi_statistic` it uses the true
    covariance in the spread of the statistic.
    """
    if label not in (1, 2):
        raise DomainError("label must be 1 or 2")
    m1, m2 = model.class_means
    w = (m1 - m2) / model.pooled_variances
    mean = float((truth.means[label - 1] - 0.5 * (m1 + m2)) @ w)
    sd = math.sqrt(float(np.sum(w * w * truth.variances)))
    if sd == 0:
        wrong = mean <= 0 if label == 1 else mean > 0
        return 1.0 if wrong else 0.0
    p_positive = 1.0 - std_normal_cdf(-mean / sd)
    return 1.0 - p_positive if label == 1 else p_positive


def gamma(
    alpha,
    variances,
    sensitivity: float,
    budget: PrivacyBudget,
    calibration: Calibration = "std",
) -> float:
    """Signal-to-noise sum ``sum_j alpha_j^2 / (var_j + s^2)``.

    ``s`` is the mechanism's per-entry noise standard deviation for the
    given sensitivity and budget.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    variances = np.asarray(variances, dtype=float).reshape(-1)
    if alpha.shape != variances.shape:
        raise DomainError("alpha and variances must have the same length")
    if np.any(variances < 0):
        raise DomainError("variances must be non-negative")
    s = noise_std(sensitivity, budget, calibration)
    denom = variances + s * s
    if np.any(denom <= 0):
        raise DomainError("a coordinate has zero variance and zero noise")
    return float(np.sum(alpha * alpha / denom))


def _check_bound_args(p: int, n: int, gammas: np.ndarray) -> None:
    if p < 1:
        raise DomainError(f"dimension must be at least 1, got {p}")
    if n < 2:
        raise DomainError(f"sample size must be at least 2, got {n}")
    if np.any(gammas < 0) or not np.all(np.isfinite(gammas)):
        raise DomainError("gamma values must be finite and non-negative")


def error_bound_binary(p: int, n: int, gamma_value: float) -> float:
    """Upper bound on the binary LDA error with the o_p(1) terms set to zero."""
    _check_bound_args(p, n, np.asarray([gamma_value], dtype=float))
    z = gamma_value / (2.0 * math.sqrt(4.0 * p / n + gamma_value))
    return 1.0 - std_normal_cdf(z)


def error_bound_multiclass(p: int, n: int, gammas: Sequence[float], class_count: int | None = None) -> float:
    """Upper bound on the K-class error for one class, one gamma per competitor."""
    g = np.asarray(gammas, dtype=float).reshape(-1)
    K = g.size + 1 if class_count is None else int(class_count)
    if K < 2 or g.size != K - 1:
        raise DomainError(f"need {K - 1} gamma values for K={K}, got {g.size}")
    _check_bound_args(p, n, g)
    z = g / (2.0 * np.sqrt(4.0 * K * p / (2.0 * n) + g))
    return float(1.0 - np.prod(std_normal_cdf(z)))


@dataclass(frozen=True)
class BoundInputs:
    """Arguments of the bound evaluators; ``gamma`` is a list for K > 2."""

    p: int
    n: int
    gamma: float | tuple[float, ...]
    class_count: int = 2

    def evaluate(self) -> float:
        gammas = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if self.class_count == 2 and gammas.size == 1:
            return error_bound_binary(self.p, self.n, float(gammas[0]))
        return error_bound_multiclass(self.p, self.n, gammas, self.class_count)
