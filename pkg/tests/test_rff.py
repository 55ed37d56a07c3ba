import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fkea import (
    BasisMismatchError,
    EmptyAccumulatorError,
    FormatError,
    InputError,
    ProxyCovariance,
    eigenvalues_sym,
    feature_map,
    gaussian_kernel,
    merge,
    normalized_covariance,
    proxy_gram,
    sample_fourier_basis,
)


def _cov(basis, X):
    return ProxyCovariance.empty(basis).accumulate(X, basis)


def test_basis_deterministic():
    a = sample_fourier_basis(2, 1, 1.0, seed=99)
    b = sample_fourier_basis(2, 1, 1.0, seed=99)
    np.testing.assert_array_equal(a.omegas, b.omegas)
    assert a.fingerprint == b.fingerprint
    assert a.fingerprint != sample_fourier_basis(2, 1, 1.0, seed=100).fingerprint


def test_basis_stream_order_is_row_major():
    # the first row only depends on the first d draws of the stream
    small = sample_fourier_basis(3, 2, 1.0, seed=5)
    large = sample_fourier_basis(3, 10, 1.0, seed=5)
    np.testing.assert_array_equal(small.omegas, large.omegas[:2])


def test_basis_is_immutable():
    basis = sample_fourier_basis(2, 4, 1.0)
    with pytest.raises(ValueError):
        basis.omegas[0, 0] = 1.0


def test_basis_large_sigma_scale():
    basis = sample_fourier_basis(3, 20_000, 1e6, seed=1)
    assert basis.omegas.std() == pytest.approx(1e-6, rel=0.02)


def test_basis_variance_matches_inverse_sigma_squared():
    basis = sample_fourier_basis(4, 50_000, 2.0, seed=3)
    var = basis.omegas.var(axis=0)
    np.testing.assert_allclose(var, 0.25, rtol=0.10)


@pytest.mark.parametrize("d, r", [(0, 1), (1, 0)])
def test_basis_rejects_zero(d, r):
    with pytest.raises(InputError):
        sample_fourier_basis(d, r, 1.0)


def test_basis_rejects_bad_seed():
    with pytest.raises(InputError):
        sample_fourier_basis(2, 2, 1.0, seed=-1)
    with pytest.raises(InputError):
        sample_fourier_basis(2, 2, 1.0, seed=1 << 64)


def test_feature_map_at_origin():
    basis = sample_fourier_basis(3, 5, 1.0)
    f = feature_map(basis, np.zeros(3))
    expected = np.tile([1.0, 0.0], 5) / math.sqrt(5)
    np.testing.assert_array_equal(f, expected)


def test_feature_map_matches_oracle_layout(rng):
    basis = sample_fourier_basis(4, 7, 1.3, seed=2)
    x = rng.normal(size=4)
    np.testing.assert_allclose(feature_map(basis, x), oracles.fourier_features(basis.omegas, x), rtol=1e-12, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.integers(1, 64))
def test_feature_map_unit_norm(x, r):
    basis = sample_fourier_basis(3, r, 0.7, seed=r)
    assert np.linalg.norm(feature_map(basis, np.array(x))) == pytest.approx(1.0, abs=1e-12)


def test_feature_map_dimension_mismatch():
    with pytest.raises(InputError):
        feature_map(sample_fourier_basis(3, 2, 1.0), np.zeros(4))


def test_feature_kernel_monte_carlo(rng):
    basis = sample_fourier_basis(5, 100_000, 1.0, seed=11)
    for _ in range(3):
        x, y = rng.normal(size=5) * 0.6, rng.normal(size=5) * 0.6
        approx = feature_map(basis, x) @ feature_map(basis, y)
        assert abs(approx - gaussian_kernel(x, y, 1.0)) < 0.02


def test_hoeffding_envelope(rng):
    # violation rate of |k_hat - k| >= eps must stay below 2 exp(-r eps^2 / 2) = delta
    r, delta, pairs = 50_000, 0.01, 1000
    eps = math.sqrt(2.0 * math.log(2.0 / delta) / r)
    basis = sample_fourier_basis(3, r, 1.0, seed=4)
    X, Y = rng.normal(size=(pairs, 3)), rng.normal(size=(pairs, 3))
    approx = np.empty(pairs)
    for start in range(0, pairs, 100):
        FX = feature_map(basis, X[start : start + 100])
        FY = feature_map(basis, Y[start : start + 100])
        approx[start : start + 100] = np.einsum("ij,ij->i", FX, FY)
    exact = np.exp(-np.sum((X - Y) ** 2, axis=1) / 2.0)
    assert np.mean(np.abs(approx - exact) >= eps) < delta


def test_accumulate_one_sample():
    basis = sample_fourier_basis(2, 6, 1.0)
    C = normalized_covariance(_cov(basis, [[0.3, -0.2]]))
    assert np.trace(C) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(C) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.matrix_rank(C, tol=1e-10) == 1


def test_accumulate_matches_dense_oracle(rng):
    basis = sample_fourier_basis(3, 20, 0.9, seed=8)
    X = rng.normal(size=(50, 3))
    cov = _cov(basis, X)
    np.testing.assert_allclose(cov.sum_matrix, oracles.outer_sum(basis.omegas, X), rtol=0, atol=1e-12)
    assert cov.samples_seen == 50


def test_accumulate_order_independent(rng):
    basis = sample_fourier_basis(3, 16, 1.0, seed=1)
    B1, B2 = rng.normal(size=(30, 3)), rng.normal(size=(45, 3))
    a = ProxyCovariance.empty(basis).accumulate(B1, basis).accumulate(B2, basis)
    b = ProxyCovariance.empty(basis).accumulate(B2, basis).accumulate(B1, basis)
    np.testing.assert_allclose(a.sum_matrix, b.sum_matrix, rtol=0, atol=1e-10)


def test_accumulate_rejects_wrong_basis(rng):
    b1 = sample_fourier_basis(3, 4, 1.0, seed=1)
    b2 = sample_fourier_basis(3, 4, 1.0, seed=2)
    cov = ProxyCovariance.empty(b1)
    with pytest.raises(BasisMismatchError):
        cov.accumulate(rng.normal(size=(2, 3)), b2)
    with pytest.raises(InputError):
        cov.accumulate(rng.normal(size=(2, 4)), b1)


def test_merge_identity_and_commutativity(rng):
    basis = sample_fourier_basis(2, 10, 1.0)
    a = _cov(basis, rng.normal(size=(20, 2)))
    b = _cov(basis, rng.normal(size=(13, 2)))
    e = merge(a, ProxyCovariance.empty(basis))
    np.testing.assert_array_equal(e.sum_matrix, a.sum_matrix)
    assert e.samples_seen == a.samples_seen
    np.testing.assert_allclose(merge(a, b).sum_matrix, merge(b, a).sum_matrix, rtol=0, atol=1e-10)
    assert merge(a, b).samples_seen == 33


def test_merge_shards_match_single_pass(rng):
    basis = sample_fourier_basis(4, 32, 1.5, seed=6)
    X = rng.normal(size=(400, 4))
    single = normalized_covariance(_cov(basis, X))
    shards = [_cov(basis, s) for s in np.array_split(X, 4)]
    merged = merge(merge(shards[0], shards[1]), merge(shards[2], shards[3]))
    np.testing.assert_allclose(normalized_covariance(merged), single, rtol=0, atol=1e-9)


def test_merge_rejects_mismatch():
    a = ProxyCovariance.empty(sample_fourier_basis(2, 3, 1.0, seed=0))
    b = ProxyCovariance.empty(sample_fourier_basis(2, 3, 2.0, seed=0))
    with pytest.raises(BasisMismatchError):
        merge(a, b)


def test_threaded_accumulation_is_bitwise_identical(rng):
    basis = sample_fourier_basis(3, 50, 1.0, seed=2)
    X = rng.normal(size=(1000, 3))
    batches = [X[i : i + 64] for i in range(0, 1000, 64)]
    one = ProxyCovariance.empty(basis).accumulate_batches(batches, basis, threads=1)
    eight = ProxyCovariance.empty(basis).accumulate_batches(iter(batches), basis, threads=8)
    np.testing.assert_array_equal(one.sum_matrix, eight.sum_matrix)
    assert one.samples_seen == eight.samples_seen == 1000


def test_normalized_covariance_duplication_invariant(rng):
    basis = sample_fourier_basis(2, 8, 1.0)
    x = rng.normal(size=(1, 2))
    np.testing.assert_allclose(
        normalized_covariance(_cov(basis, np.repeat(x, 5, axis=0))),
        normalized_covariance(_cov(basis, x)),
        rtol=0,
        atol=1e-14,
    )


def test_normalized_covariance_trace_and_psd(rng):
    basis = sample_fourier_basis(5, 32, 2.0, seed=9)
    C = normalized_covariance(_cov(basis, rng.normal(size=(200, 5))))
    assert np.trace(C) == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(C - C.T)) <= 1e-12
    assert np.linalg.eigvalsh(C).min() >= -1e-9


def test_normalized_covariance_empty():
    with pytest.raises(EmptyAccumulatorError):
        normalized_covariance(ProxyCovariance.empty(sample_fourier_basis(2, 2, 1.0)))


@pytest.mark.parametrize("n, r", [(300, 64), (40, 64), (120, 20)])
def test_nonzero_spectrum_equivalence(rng, n, r):
    basis = sample_fourier_basis(3, r, 1.0, seed=n)
    X = rng.normal(size=(n, 3))
    cov_eigs = np.sort(np.linalg.eigvalsh(normalized_covariance(_cov(basis, X))))[::-1]
    gram_eigs = np.sort(np.linalg.eigvalsh(proxy_gram(basis, X)))[::-1]
    m = min(n, 2 * r)
    np.testing.assert_allclose(cov_eigs[:m], gram_eigs[:m], rtol=0, atol=1e-8)
    np.testing.assert_allclose(cov_eigs[m:], 0.0, atol=1e-8)
    np.testing.assert_allclose(gram_eigs[m:], 0.0, atol=1e-8)
    assert eigenvalues_sym(proxy_gram(basis, X)).values[:m] == pytest.approx(cov_eigs[:m], abs=1e-8)


def test_checkpoint_round_trip(tmp_path, rng):
    basis = sample_fourier_basis(3, 12, 1.0, seed=4)
    cov = _cov(basis, rng.normal(size=(33, 3)))
    path = tmp_path / "acc.ckpt"
    cov.save(path)
    back = ProxyCovariance.load(path)
    assert back.basis_fingerprint == cov.basis_fingerprint
    assert back.samples_seen == 33 and back.r == 12
    np.testing.assert_array_equal(np.triu(back.sum_matrix), np.triu(cov.sum_matrix))
    np.testing.assert_array_equal(back.sum_matrix, back.sum_matrix.T)
    back.accumulate(rng.normal(size=(2, 3)), basis)
    assert back.samples_seen == 35


def test_checkpoint_rejects_corruption(tmp_path, rng):
    basis = sample_fourier_basis(3, 4, 1.0)
    path = tmp_path / "acc.ckpt"
    _cov(basis, rng.normal(size=(5, 3))).save(path)
    data = path.read_bytes()
    (tmp_path / "short").write_bytes(data[:-8])
    with pytest.raises(FormatError, match="expected"):
        ProxyCovariance.load(tmp_path / "short")
    (tmp_path / "magic").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(FormatError, match="magic"):
        ProxyCovariance.load(tmp_path / "magic")
