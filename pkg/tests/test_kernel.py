import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from fkea import (
    CapacityError,
    DataError,
    GaussianKernelSpec,
    InputError,
    exact_gram,
    exact_rke,
    exact_spectrum,
    exact_vendi,
    gaussian_kernel,
    median_heuristic,
    renyi_entropy,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_kernel_identity():
    x = np.array([1.5, -2.0, 3.0])
    assert gaussian_kernel(x, x, 20.0) == 1.0


def test_kernel_distance_two_sigma_squared():
    assert gaussian_kernel([math.sqrt(2.0), 0.0], [0.0, 0.0], 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_kernel_hand_value():
    # exp(-25 / 50)
    assert gaussian_kernel([3.0, 4.0], [0.0, 0.0], GaussianKernelSpec(5.0)) == pytest.approx(0.6065306597126334, rel=1e-15)


@pytest.mark.parametrize("sigma", [0.0, -1.0, math.inf, math.nan])
def test_kernel_spec_rejects_bad_sigma(sigma):
    with pytest.raises(InputError):
        GaussianKernelSpec(sigma)


def test_kernel_errors():
    with pytest.raises(InputError):
        gaussian_kernel([1.0, 2.0], [1.0], 1.0)
    with pytest.raises(DataError):
        gaussian_kernel([1.0, np.nan], [1.0, 2.0], 1.0)


@given(arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite), st.floats(0.1, 100))
def test_kernel_symmetric_and_bounded(x, y, sigma):
    k = gaussian_kernel(x, y, sigma)
    assert k == gaussian_kernel(y, x, sigma)
    assert 0.0 <= k <= 1.0
    if np.array_equal(x, y):
        assert k == 1.0
    elif np.sum((x - y) ** 2) / (2 * sigma**2) > 1e-12:
        assert k < 1.0
    assert k == pytest.approx(oracles.kernel(x, y, sigma), rel=1e-12, abs=1e-300)


def test_gram_single_sample():
    np.testing.assert_array_equal(exact_gram([[3.0, 1.0]], 2.0), [[1.0]])


def test_gram_identical_rows():
    G = exact_gram([[1.0, 2.0], [1.0, 2.0]], 1.0)
    np.testing.assert_allclose(G, 0.5, rtol=1e-14)


def test_gram_equilateral_triangle():
    X = np.eye(3)  # pairwise distance sqrt(2) = sqrt(2) sigma
    G = exact_gram(X, 1.0)
    expected = np.full((3, 3), math.exp(-1.0) / 3)
    np.fill_diagonal(expected, 1.0 / 3)
    np.testing.assert_allclose(G, expected, rtol=1e-13)
    np.testing.assert_allclose(G, oracles.gram(X, 1.0), rtol=1e-13)


def test_gram_invariants(rng):
    X = rng.normal(size=(60, 5))
    G = exact_gram(X, 1.7)
    np.testing.assert_allclose(G, oracles.gram(X, 1.7), rtol=1e-10, atol=1e-300)
    assert np.max(np.abs(G - G.T)) <= 1e-12
    np.testing.assert_array_equal(np.diag(G), np.full(60, 1 / 60))
    assert np.linalg.eigvalsh(G).min() >= -1e-8


def test_gram_capacity():
    with pytest.raises(CapacityError, match="fkea score"):
        exact_gram(np.zeros((11, 2)), 1.0, max_samples=10)


def test_rke_identical_samples():
    assert exact_rke(np.ones((7, 3)), 1.0) == pytest.approx(1.0, rel=1e-12)


def test_rke_far_apart_samples():
    X = np.arange(6.0)[:, None] * 100.0
    assert exact_rke(X, 0.01) == pytest.approx(6.0, rel=1e-12)


def test_rke_two_samples():
    # k = exp(-1):  4 / (2 + 2 e^-2)
    X = [[math.sqrt(2.0), 0.0], [0.0, 0.0]]
    assert exact_rke(X, 1.0) == pytest.approx(1.7615941559557646, rel=1e-12)
    assert exact_vendi(X, 1.0, 2) == pytest.approx(1.7615941559557646, rel=1e-12)


def test_rke_matches_oracle(rng):
    X = rng.normal(size=(40, 3))
    assert exact_rke(X, 1.3) == pytest.approx(oracles.rke_double_sum(X, 1.3), rel=1e-10)


@pytest.mark.parametrize("alpha", [1, 1.5, 2, 3, math.inf])
def test_vendi_extremes(alpha):
    assert exact_vendi(np.zeros((5, 2)), 1.0, alpha) == pytest.approx(1.0, rel=1e-9)
    far = np.arange(8.0)[:, None] * 1000.0
    assert exact_vendi(far, 1.0, alpha) == pytest.approx(8.0, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.integers(1, 8), st.floats(0.2, 5.0), st.integers(0, 2**32 - 1))
def test_rke_equals_exp_h2(n, d, sigma, seed):
    X = np.random.default_rng(seed).normal(size=(n, d))
    spec = exact_spectrum(X, sigma)
    assert exact_rke(X, sigma) == pytest.approx(math.exp(renyi_entropy(spec, 2)), rel=1e-8)


def test_rke_equals_exp_h2_at_500(rng):
    X = rng.normal(size=(500, 10))
    sigma = median_heuristic(X)
    assert exact_rke(X, sigma) == pytest.approx(exact_vendi(X, sigma, 2), rel=1e-8)


def test_vendi_permutation_invariant(rng):
    X = rng.normal(size=(80, 4))
    perm = rng.permutation(80)
    for alpha in (1, 1.5, 2, math.inf):
        assert exact_vendi(X[perm], 1.0, alpha) == pytest.approx(exact_vendi(X, 1.0, alpha), rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 50), st.floats(0.1, 10.0), st.integers(0, 2**32 - 1))
def test_vendi_range_and_alpha_monotone(n, sigma, seed):
    X = np.random.default_rng(seed).normal(size=(n, 3))
    alphas = [1, 1.25, 1.5, 2, 3, 10, math.inf]
    scores = [exact_vendi(X, sigma, a) for a in alphas]
    for s in scores:
        assert 1.0 - 1e-12 <= s <= n * (1 + 1e-12)
    for a, b in zip(scores, scores[1:]):
        assert a >= b * (1 - 1e-12)


def test_median_heuristic(rng):
    X = np.array([[0.0], [1.0], [3.0]])
    # distances 1, 3, 2
    assert median_heuristic(X) == 2.0
    with pytest.raises(InputError):
        median_heuristic(np.zeros((4, 2)))
    big = rng.normal(size=(3000, 2))
    assert median_heuristic(big, seed=1) == median_heuristic(big, seed=1)
