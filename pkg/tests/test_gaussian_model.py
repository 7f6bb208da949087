import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dpfs.errors import DomainError
from dpfs.gaussian_model import (
    GmParams,
    LabeledDataset,
    PrivacyBudget,
    add_noise,
    gaussian_mechanism,
    l1_sensitivity,
    noise_std,
    sample_gm,
)


def test_budget_validation():
    with pytest.raises(DomainError):
        PrivacyBudget(0.0, 1e-4)
    with pytest.raises(DomainError):
        PrivacyBudget(1.0, 1.0)
    with pytest.raises(DomainError):
        PrivacyBudget(1.0, 0.0)
    assert PrivacyBudget(2.0, math.exp(-4)).tau == pytest.approx(2.0)


def test_gm_params_validation():
    with pytest.raises(DomainError):
        GmParams(np.zeros((2, 3)), np.ones(2))
    with pytest.raises(DomainError):
        GmParams(np.zeros((2, 2)), np.array([1.0, -1.0]))
    with pytest.raises(DomainError):
        GmParams(np.zeros((1, 2)), np.ones(2))


def test_dataset_requires_every_class():
    with pytest.raises(DomainError):
        LabeledDataset(np.zeros((2, 1)), np.array([1, 3]))
    with pytest.raises(DomainError):
        LabeledDataset(np.array([[np.nan]]), np.array([1]))


def test_zero_variance_sampling_reproduces_means():
    params = GmParams(np.array([[1.0, 2.0], [0.0, 0.0]]), np.zeros(2))
    data = sample_gm(params, [4, 3], seed=0)
    assert np.array_equal(data.class_rows(1), np.tile([1.0, 2.0], (4, 1)))
    assert data.labels.tolist() == [1] * 4 + [2] * 3


def test_example1_sample_means(example1):
    data = sample_gm(example1, [200, 200], seed=11)
    for k in (1, 2):
        tol = 3 * np.sqrt(example1.variances / 200)
        assert np.all(np.abs(data.class_rows(k).mean(axis=0) - example1.means[k - 1]) <= tol)


def test_sampling_deterministic(example1):
    a = sample_gm(example1, [5, 5], seed=3)
    b = sample_gm(example1, [5, 5], seed=3)
    assert a == b


def test_zero_count_rejected(example1):
    with pytest.raises(DomainError):
        sample_gm(example1, [0, 3], seed=0)


@pytest.mark.parametrize("rows, expected", [
    ([[1.0, -2.0]], 3.0),
    ([[0.0, 0.0], [0.0, 0.0]], 0.0),
    ([[1.0, 1.0], [-3.0, 0.5]], 3.5),
])
def test_l1_sensitivity(rows, expected):
    data = LabeledDataset(np.array(rows), np.ones(len(rows), dtype=int))
    assert l1_sensitivity(data) == expected


def test_l1_sensitivity_empty():
    with pytest.raises(DomainError):
        l1_sensitivity(np.zeros((0, 3)))


@given(arrays(float, (6, 5), elements=st.floats(-1e6, 1e6)), st.lists(st.integers(0, 4), min_size=1, max_size=5, unique=True))
def test_sensitivity_monotone_in_columns(X, cols):
    assert l1_sensitivity(X[:, cols]) <= l1_sensitivity(X) * (1 + 1e-12)


def test_noise_std_formula(budget):
    assert noise_std(1.5, budget) == pytest.approx(2 * 1.5 * math.log(1e4))
    assert noise_std(1.5, budget, "variance") == pytest.approx(math.sqrt(2 * 1.5 * math.log(1e4)))
    with pytest.raises(DomainError):
        noise_std(1.0, budget, "other")


def test_zero_sensitivity_is_identity(example1, budget):
    data = sample_gm(example1, [3, 3], seed=0)
    out = gaussian_mechanism(data, budget, sensitivity=0.0, seed=1)
    assert np.array_equal(out.features, data.features)


def test_noise_spread_matches_calibration():
    data = LabeledDataset(np.zeros((100, 100)), np.repeat([1, 2], 50))
    budget = PrivacyBudget(3.0, 1e-4)
    out = gaussian_mechanism(data, budget, sensitivity=0.25, seed=5)
    sigma = noise_std(0.25, budget)
    assert abs(out.features.std() / sigma - 1) < 0.02


def test_noise_is_unbiased():
    data = LabeledDataset(np.zeros((1000, 100)), np.repeat([1, 2], 500))
    sigma = 2.0
    out = add_noise(data, sigma, seed=9)
    diff = out.features - data.features
    assert abs(diff.mean()) <= 4 * sigma / math.sqrt(diff.size)
    per_feature = diff.mean(axis=0)
    assert np.all(np.abs(per_feature) <= 4.5 * sigma / math.sqrt(1000))


def test_variance_nine_perturbation(example1):
    data = sample_gm(example1, [20000, 20000], seed=2)
    noisy = add_noise(data, 3.0, seed=4)
    var = noisy.class_rows(1).var(axis=0, ddof=1)
    assert var == pytest.approx([10.0, 19.0], rel=0.03)


@settings(max_examples=25)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32))
def test_mechanism_preserves_shape_and_labels(n, p, seed):
    X = np.arange(n * p, dtype=float).reshape(n, p)
    labels = np.arange(n) % 2 + 1 if n > 1 else np.array([1])
    data = LabeledDataset(X, labels)
    out = gaussian_mechanism(data, PrivacyBudget(1.0), seed=seed)
    assert out.features.shape == (n, p)
    assert np.array_equal(out.labels, data.labels)


def test_mechanism_rejects_bad_budget():
    with pytest.raises(DomainError):
        gaussian_mechanism(LabeledDataset(np.ones((1, 1)), [1]), PrivacyBudget(-1.0))
