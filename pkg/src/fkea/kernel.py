"""Exact Gaussian-kernel evaluation and Gram-matrix baselines.

These are the O(n^2) (RKE) and O(n^3) (VENDI) reference computations that
the Fourier approximation is checked against. They refuse to run above a
sample cap instead of silently allocating an n x n matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from ._validation import check_embeddings, check_positive_int, check_sigma, check_vector
from .entropy import EigenSpectrum, eigenvalues_sym, vendi_from_spectrum
from .exceptions import CapacityError, InputError

DEFAULT_MAX_SAMPLES = 20_000


@dataclass(frozen=True)
class GaussianKernelSpec:
    """Gaussian (RBF) kernel ``exp(-||x - y||^2 / (2 sigma^2))``."""

    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", check_sigma(self.sigma))


def _sigma_of(spec) -> float:
    if isinstance(spec, GaussianKernelSpec):
        return spec.sigma
    return check_sigma(spec)


def gaussian_kernel(x, y, sigma) -> float:
    """Evaluate the Gaussian kernel between two vectors.

    ``sigma`` may be a float or a :class:`GaussianKernelSpec`.
    """
    sigma = _sigma_of(sigma)
    x = check_vector(x, name="x")
    y = check_vector(y, x.shape[0], name="y")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


def _check_capacity(n: int, max_samples: int) -> None:
    max_samples = check_positive_int(max_samples, "max_samples")
    if n > max_samples:
        raise CapacityError(
            f"exact kernel computation needs an {n}x{n} matrix, above the cap of "
            f"{max_samples} samples; use the Fourier approximation (fkea score) instead"
        )


def exact_gram(X, sigma, *, max_samples: int = DEFAULT_MAX_SAMPLES) -> np.ndarray:
    """Normalized Gram matrix ``K / n`` with ``K[i, j] = k(x_i, x_j)``.

    Squared distances use ``||x||^2 + ||y||^2 - 2 x.y`` clamped at zero. The
    diagonal is set to exactly ``1/n`` and the result is symmetrized, so it
    has unit trace up to the rounding of ``1/n``.
    """
    sigma = _sigma_of(sigma)
    X = check_embeddings(X)
    n = X.shape[0]
    _check_capacity(n, max_samples)

    sq_norms = np.einsum("ij,ij->i", X, X)
    sq_dist = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (X @ X.T)
    np.maximum(sq_dist, 0.0, out=sq_dist)
    gram = np.exp(sq_dist * (-1.0 / (2.0 * sigma * sigma)))
    gram = 0.5 * (gram + gram.T)
    np.fill_diagonal(gram, 1.0)
    gram /= n
    return gram


def exact_rke(X, sigma, *, max_samples: int = DEFAULT_MAX_SAMPLES) -> float:
    """RKE score as the inverse squared Frobenius norm of ``K / n``.

    No eigendecomposition is performed.
    """
    gram = exact_gram(X, sigma, max_samples=max_samples)
    return float(1.0 / np.einsum("ij,ij->", gram, gram))


def exact_spectrum(X, sigma, *, max_samples: int = DEFAULT_MAX_SAMPLES) -> EigenSpectrum:
    """Clamped, renormalized eigenvalues of the normalized Gram matrix."""
    return eigenvalues_sym(exact_gram(X, sigma, max_samples=max_samples))


def exact_vendi(X, sigma, alpha=1.0, *, max_samples: int = DEFAULT_MAX_SAMPLES) -> float:
    """VENDI score of order ``alpha`` from the full Gram spectrum."""
    return vendi_from_spectrum(exact_spectrum(X, sigma, max_samples=max_samples), alpha)


def median_heuristic(X, *, max_samples: int = 1000, seed: int = 0) -> float:
    """Median pairwise Euclidean distance on a seeded row subsample.

    Convenience bandwidth choice; not part of the scoring method itself.
    """
    X = check_embeddings(X)
    if X.shape[0] > max_samples:
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(X.shape[0], size=max_samples, replace=False))
        X = X[rows]
    if X.shape[0] < 2:
        raise InputError("median heuristic needs at least two samples")
    med = float(np.median(pdist(X)))
    if not med > 0:
        raise InputError("median pairwise distance is zero; supply sigma explicitly")
    return med
