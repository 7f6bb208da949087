"""Synthetic data generator and Monte Carlo sweeps over dimension / epsilon.

Every replicate derives its own seed from ``(master seed, replicate)`` and
from there the seeds for data generation and for each cell's noise, so the
records of a replicate do not depend on which worker ran it or in what
order. Results are sorted by ``(method, m, epsilon, replicate)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from dpfs.data_io import METHODS, SplitSpec, SweepRecord, split
from dpfs.errors import DomainError
from dpfs.feature_selection import (
    distance_scores,
    max_pairwise_distance_scores,
    release_columns,
    select_top_m,
    t_statistic_scores,
)
from dpfs.gaussian_model import (
    CALIBRATIONS,
    Calibration,
    GmParams,
    LabeledDataset,
    PrivacyBudget,
    sample_gm,
)
from dpfs.lda import empirical_error, error_bound_binary, error_bound_multiclass, fit_lda, gamma
from dpfs.numerics import Seed, derive_seed, rng_from_seed


@dataclass(frozen=True)
class SynthConfig:
    """Two-class sparse Gaussian generator.

    Class 1 has mean zero. Class 2's mean is zero except on a random subset
    of coordinates, where it is drawn from Laplace(0, ``laplace_scale``). The
    subset is Bernoulli(``sparsity_nonzero_fraction``) per coordinate, or
    exactly ``signal_count`` coordinates when that is set. Shared variances
    are Exponential with rate ``variance_rate``.
    """

    p: int
    variance_rate: float = 0.1
    sparsity_nonzero_fraction: float = 0.12
    laplace_scale: float = 0.5
    train_per_class: int = 30
    test_per_class: int = 200
    seed: Seed = 0
    signal_count: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise DomainError("p must be at least 1")
        if not self.variance_rate > 0 or not self.laplace_scale > 0:
            raise DomainError("variance_rate and laplace_scale must be positive")
        if not 0 < self.sparsity_nonzero_fraction <= 1:
            raise DomainError("sparsity_nonzero_fraction must lie in (0, 1]")
        if self.train_per_class < 2 or self.test_per_class < 1:
            raise DomainError("need train_per_class >= 2 and test_per_class >= 1")
        if self.signal_count is not None and not 0 <= self.signal_count <= self.p:
            raise DomainError("signal_count must lie in [0, p]")


def generate_synthetic(config: SynthConfig) -> tuple[GmParams, LabeledDataset, LabeledDataset]:
    rng = rng_from_seed(derive_seed(config.seed, 0))
    p = config.p
    if config.signal_count is None:
        mask = rng.random(p) < config.sparsity_nonzero_fraction
    else:
        mask = np.zeros(p, dtype=bool)
        mask[rng.choice(p, size=config.signal_count, replace=False)] = True
    mu = np.where(mask, rng.laplace(0.0, config.laplace_scale, size=p), 0.0)
    variances = rng.exponential(1.0 / config.variance_rate, size=p)
    truth = GmParams(np.vstack([np.zeros(p), mu]), variances)
    n_tr, n_te = config.train_per_class, config.test_per_class
    train = sample_gm(truth, [n_tr, n_tr], derive_seed(config.seed, 1))
    test = sample_gm(truth, [n_te, n_te], derive_seed(config.seed, 2))
    return truth, train, test


@dataclass(frozen=True)
class SplitSource:
    """A fixed dataset re-split for every replicate; ``spec.seed`` is ignored."""

    data: LabeledDataset
    spec: SplitSpec


@dataclass(frozen=True)
class FixedSource:
    """The same train/test pair for every replicate (only the noise varies)."""

    train: LabeledDataset
    test: LabeledDataset
    truth: GmParams | None = None


DataSource = Union[SynthConfig, SplitSource, FixedSource]


@dataclass(frozen=True)
class SweepConfig:
    data: DataSource
    methods: tuple[str, ...] = ("dfs", "tstat", "none")
    m_grid: tuple[int, ...] | None = None
    epsilon_grid: tuple[float, ...] | None = None
    epsilon: float | None = None
    m: int | None = None
    delta: float = 1e-4
    replicates: int = 1
    seed: Seed = 0
    calibration: Calibration = "std"
    workers: int = 1

    def __post_init__(self):
        if (self.m_grid is None) == (self.epsilon_grid is None):
            raise DomainError("give exactly one of m_grid and epsilon_grid")
        if self.m_grid is not None and self.epsilon is None:
            raise DomainError("a dimension sweep needs a fixed epsilon")
        if self.epsilon_grid is not None and self.m is None:
            raise DomainError("an epsilon sweep needs a fixed m")
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        if not self.methods or any(mth not in METHODS for mth in self.methods):
            raise DomainError(f"methods must be a non-empty subset of {METHODS}")
        if self.calibration not in CALIBRATIONS:
            raise DomainError(f"calibration must be one of {CALIBRATIONS}")
        grid = self.m_grid if self.m_grid is not None else (self.m,)
        if any(int(m) < 1 for m in grid):
            raise DomainError("m values must be positive")
        eps = self.epsilon_grid if self.epsilon_grid is not None else (self.epsilon,)
        for e in eps:
            PrivacyBudget(e, self.delta)

    def cells(self) -> list[tuple[int, float]]:
        if self.m_grid is not None:
            return [(int(m), float(self.epsilon)) for m in self.m_grid]
        return [(int(self.m), float(e)) for e in self.epsilon_grid]


def _materialize(source: DataSource, seed: int):
    if isinstance(source, SynthConfig):
        truth, train, test = generate_synthetic(replace(source, seed=seed))
        return truth, train, test
    if isinstance(source, SplitSource):
        train, test = split(source.data, replace(source.spec, seed=seed))
        return None, train, test
    if isinstance(source, FixedSource):
        return source.truth, source.train, source.test
    raise DomainError(f"unsupported data source {type(source).__name__}")


def _ranking_indices(method: str, train: LabeledDataset, m: int) -> np.ndarray:
    if method == "none":
        if not 1 <= m <= train.p:
            raise DomainError(f"m must lie in [1, {train.p}], got {m}")
        return np.arange(m)
    if method == "tstat":
        ranking = t_statistic_scores(train)
    elif train.class_count == 2:
        ranking = distance_scores(train)
    else:
        ranking = max_pairwise_distance_scores(train)
    return select_top_m(ranking, m)


def _cell_bound(truth: GmParams | None, idx, n_max: float, budget: PrivacyBudget, n: int, calibration) -> float | None:
    if truth is None:
        return None
    sub = truth.subset(idx)
    gammas = [
        gamma(sub.means[0] - sub.means[k], sub.variances, n_max, budget, calibration)
        for k in range(1, sub.class_count)
    ]
    if sub.class_count == 2:
        return error_bound_binary(len(idx), n, gammas[0])
    return error_bound_multiclass(len(idx), n, gammas, sub.class_count)


def run_replicate(config: SweepConfig, replicate: int) -> list[SweepRecord]:
    """All (method, cell) records for one replicate."""
    rep_seed = derive_seed(config.seed, replicate)
    truth, train, test = _materialize(config.data, derive_seed(rep_seed, 0))
    ranked: dict[tuple[str, int], np.ndarray] = {}
    records = []
    for cell_no, (m, eps) in enumerate(config.cells()):
        budget = PrivacyBudget(eps, config.delta)
        # methods in the same cell share a noise seed (common random numbers)
        noise_seed = derive_seed(rep_seed, 1, cell_no)
        for method in config.methods:
            if (method, m) not in ranked:
                ranked[(method, m)] = _ranking_indices(method, train, m)
            idx = ranked[(method, m)]
            out = release_columns(train, idx, budget, noise_seed, config.calibration)
            model = fit_lda(out.privatized)
            err = empirical_error(model, test.select_columns(idx))
            bound = _cell_bound(truth, idx, out.n_max, budget, train.n, config.calibration)
            records.append(SweepRecord(method, m, eps, config.delta, replicate, err, bound))
    return records


def _run(config: SweepConfig) -> list[SweepRecord]:
    reps = range(config.replicates)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(run_replicate, [config] * config.replicates, reps))
    else:
        chunks = [run_replicate(config, r) for r in reps]
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=lambda r: r.key)


def run_dimension_sweep(config: SweepConfig) -> list[SweepRecord]:
    """Test error for each method and each number of kept features at fixed epsilon."""
    if config.m_grid is None:
        raise DomainError("run_dimension_sweep needs m_grid")
    return _run(config)


def run_epsilon_sweep(config: SweepConfig) -> list[SweepRecord]:
    """Test error for each method and each epsilon at a fixed number of features."""
    if config.epsilon_grid is None:
        raise DomainError("run_epsilon_sweep needs epsilon_grid")
    return _run(config)


def summarize(records: Sequence[SweepRecord]) -> dict[tuple[str, int, float], float]:
    """Mean test error per (method, m, epsilon)."""
    groups: dict[tuple[str, int, float], list[float]] = {}
    for r in records:
        groups.setdefault((r.method, r.m, r.epsilon), []).append(r.test_error)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def evaluate_bound(
    p: int | None = None,
    n: int = 2,
    class_count: int = 2,
    gammas: Sequence[float] | None = None,
    truth: GmParams | None = None,
    budget: PrivacyBudget | None = None,
    sensitivity: float | None = None,
    calibration: Calibration = "std",
) -> float:
    """Error bound from explicit gamma values, or from a true model plus noise setup.

    With ``truth`` the gammas are computed for class 1 against every other
    class, and ``p`` defaults to the model dimension.
    """
    if gammas is None:
        if truth is None or budget is None or sensitivity is None:
            raise DomainError("give gamma values, or truth together with budget and sensitivity")
        class_count = truth.class_count
        p = truth.dimension if p is None else p
        gammas = [
            gamma(truth.means[0] - truth.means[k], truth.variances, sensitivity, budget, calibration)
            for k in range(1, class_count)
        ]
    if p is None:
        raise DomainError("dimension p is required")
    gammas = [float(g) for g in gammas]
    if class_count == 2:
        if len(gammas) != 1:
            raise DomainError("a binary bound takes exactly one gamma")
        return error_bound_binary(p, n, gammas[0])
    if len(gammas) == 1:
        gammas = gammas * (class_count - 1)
    return error_bound_multiclass(p, n, gammas, class_count)


def guessing_error(class_count: int) -> float:
    """Error of the bound when every gamma is zero: ``1 - 2**-(K-1)``."""
    return 1.0 - math.pow(0.5, class_count - 1)
