"""Private Gaussian model: data generation, l1 sensitivity, Gaussian mechanism.

The mechanism perturbs every feature of every row with i.i.d. Gaussian
noise whose scale is ``2 * sensitivity * ln(1/delta) / epsilon``, where the
sensitivity is the largest l1 norm of any row. This is an l1-based
calibration with a ``ln(1/delta)/epsilon`` factor; it is *not* the textbook
``sqrt(2 ln(1.25/delta))`` l2 calibration.

That scale is read as a standard deviation by default (``calibration="std"``).
``calibration="variance"`` reads it as a variance instead, i.e. the noise
standard deviation becomes its square root. The second reading is the
literal ``N(0, 2 N_max ln(1/delta)/epsilon)`` notation of the feature
release algorithm and is kept available for reproducing those experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from dpfs.errors import DomainError
from dpfs.numerics import Seed, rng_from_seed

Calibration = Literal["std", "variance"]
CALIBRATIONS: tuple[str, ...] = ("std", "variance")


@dataclass(frozen=True)
class PrivacyBudget:
    """An ``(epsilon, delta)`` pair."""

    epsilon: float
    delta: float = 1e-4

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def tau(self) -> float:
        """``ln(1/delta) / epsilon``."""
        return math.log(1.0 / self.delta) / self.epsilon


@dataclass(frozen=True, eq=False)
class GmParams:
    """Class means (K x p) and the shared diagonal covariance (length p)."""

    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        variances = np.asarray(self.variances, dtype=float).reshape(-1)
        if means.shape[0] < 2:
            raise DomainError("a Gaussian model needs at least two classes")
        if means.shape[1] != variances.size:
            raise DomainError(
                f"means have dimension {means.shape[1]} but {variances.size} variances were given"
            )
        if np.any(variances < 0) or not np.all(np.isfinite(variances)):
            raise DomainError("variances must be finite and non-negative")
        if not np.all(np.isfinite(means)):
            raise DomainError("means must be finite")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @property
    def class_count(self) -> int:
        return self.means.shape[0]

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    @property
    def alpha(self) -> np.ndarray:
        """Mean gap ``mu_1 - mu_2`` of the first two classes."""
        return self.means[0] - self.means[1]

    def subset(self, indices: Sequence[int]) -> "GmParams":
        idx = np.asarray(indices, dtype=int)
        return GmParams(self.means[:, idx], self.variances[idx])

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "variances": self.variances.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "GmParams":
        return cls(np.asarray(payload["means"], dtype=float), np.asarray(payload["variances"], dtype=float))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Dense feature matrix with integer labels in ``1..K``.

    Every label between 1 and ``max(labels)`` must occur at least once.
    ``feature_names`` is carried along for file round trips and may be empty.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        if X.ndim != 2:
            raise DomainError("features must be a 2-d matrix")
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DomainError(f"expected {X.shape[0]} labels, got shape {y.shape}")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise DomainError("labels must be integers")
        y = y.astype(np.int64)
        if y.size:
            if y.min() < 1:
                raise DomainError("labels must be positive integers 1..K")
            present = np.unique(y)
            if present.size != y.max():
                missing = sorted(set(range(1, int(y.max()) + 1)) - set(present.tolist()))
                raise DomainError(f"label classes {missing} have no rows")
        if not np.all(np.isfinite(X)):
            raise DomainError("features must be finite")
        names = tuple(self.feature_names)
        if names and len(names) != X.shape[1]:
            raise DomainError(f"{len(names)} feature names for {X.shape[1]} columns")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return np.array_equal(self.features, other.features) and np.array_equal(self.labels, other.labels)

    __hash__ = None

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def class_count(self) -> int:
        return int(self.labels.max()) if self.labels.size else 0

    def class_rows(self, label: int) -> np.ndarray:
        return self.features[self.labels == label]

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count + 1)[1:]

    def names(self) -> tuple[str, ...]:
        return self.feature_names or tuple(f"f{j + 1}" for j in range(self.p))

    def select_columns(self, indices: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=int)
        names = tuple(self.names()[j] for j in idx) if self.feature_names else ()
        return LabeledDataset(self.features[:, idx], self.labels, names)

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(features, self.labels, self.feature_names)


def sample_gm(params: GmParams, per_class_counts: Sequence[int], seed: Seed) -> LabeledDataset:
    """Draw ``per_class_counts[k]`` rows from N(mu_k, diag(variances)) for each class.

    Rows are grouped by class in label order.
    """
    counts = [int(c) for c in per_class_counts]
    if len(counts) != params.class_count:
        raise DomainError(f"expected {params.class_count} class counts, got {len(counts)}")
    if any(c < 1 for c in counts):
        raise DomainError("every class needs at least one sample")
    rng = rng_from_seed(seed)
    scale = np.sqrt(params.variances)
    blocks = [params.means[k] + scale * rng.standard_normal((c, params.dimension)) for k, c in enumerate(counts)]
    labels = np.repeat(np.arange(1, params.class_count + 1), counts)
    return LabeledDataset(np.vstack(blocks), labels)


def l1_sensitivity(data: LabeledDataset | np.ndarray) -> float:
    """Largest l1 norm over the rows of ``data``."""
    X = data.features if isinstance(data, LabeledDataset) else np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("sensitivity of an empty dataset is undefined")
    if X.shape[1] == 0:
        return 0.0
    return float(np.abs(X).sum(axis=1).max())


def noise_std(sensitivity: float, budget: PrivacyBudget, calibration: Calibration = "std") -> float:
    """Per-entry noise standard deviation for a given sensitivity and budget."""
    if not sensitivity >= 0:
        raise DomainError(f"sensitivity must be non-negative, got {sensitivity}")
    scale = 2.0 * sensitivity * budget.tau
    if calibration == "std":
        return scale
    if calibration == "variance":
        return math.sqrt(scale)
    raise DomainError(f"unknown calibration {calibration!r}; expected one of {CALIBRATIONS}")


def add_noise(data: LabeledDataset, std: float, seed: Seed) -> LabeledDataset:
    """Add i.i.d. N(0, std**2) noise to every feature entry; labels untouched.

    Noise is drawn row-major from a single stream, so row ``i`` always
    consumes draws ``i*p .. (i+1)*p - 1`` regardless of how many rows follow.
    """
    if not std >= 0:
        raise DomainError(f"noise std must be non-negative, got {std}")
    if std == 0:
        return data
    rng = rng_from_seed(seed)
    noise = rng.standard_normal(data.features.shape)
    return data.with_features(data.features + std * noise)


def gaussian_mechanism(
    data: LabeledDataset,
    budget: PrivacyBudget,
    sensitivity: float | None = None,
    seed: Seed = 0,
    calibration: Calibration = "std",
) -> LabeledDataset:
    """Privatize every row of ``data``.

    Parameters
    ----------
    data : LabeledDataset
        Clean data.
    budget : PrivacyBudget
        Privacy parameters.
    sensitivity : float, optional
        Override for the l1 sensitivity. Defaults to the realized
        :func:`l1_sensitivity` of ``data``.
    seed : int
        Seed for the noise stream.
    calibration : {"std", "variance"}
        How the scale ``2 * sensitivity * ln(1/delta) / epsilon`` is read.

    Returns
    -------
    LabeledDataset
        Same shape and labels, perturbed features.
    """
    if sensitivity is None:
        sensitivity = l1_sensitivity(data)
    return add_noise(data, noise_std(sensitivity, budget, calibration), seed)
