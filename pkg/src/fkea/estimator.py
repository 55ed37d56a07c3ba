"""scikit-learn compatible estimators.

:class:`FKEA` streams samples into a random-Fourier proxy covariance and
exposes VENDI/RKE diversity scores plus mode scores as a transformer.
:class:`ExactKernelEntropy` computes the same scores from the full Gram
matrix and serves as the reference.
"""

from __future__ import annotations

import itertools
import time

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_alpha, check_embeddings, check_positive_int, check_sigma
from .entropy import (
    DEFAULT_ALPHAS,
    DiversityReport,
    EigenSpectrum,
    eigenvalues_sym,
    fkea_rke,
    format_alpha,
    theorem_bound,
    vendi_from_spectrum,
)
from .exceptions import InputError
from .kernel import DEFAULT_MAX_SAMPLES, exact_gram
from .modes import ModeBasis, mode_scores, rank_modes, top_eigenvectors
from .rff import ProxyCovariance, merge, normalized_covariance, sample_fourier_basis


class FKEA(TransformerMixin, ClusterMixin, BaseEstimator):
    """Fourier-based kernel entropy approximation.

    Parameters
    ----------
    sigma : float
        Gaussian kernel bandwidth, in the units of the embedding coordinates.
    rff_dim : int, default=16000
        Fourier feature dimension ``2r``; must be even.
    random_state : int, default=0
        Seed for the Fourier frequencies. Must be an int so the basis can be
        regenerated from the seed alone.
    n_modes : int, default=10
        Number of leading eigenvectors used by :meth:`transform` and :meth:`predict`.
    batch_size : int, default=8192
        Rows featurized at a time inside :meth:`fit`.
    n_jobs : int or None, default=None
        Threads used to compute per-batch partial sums. Results do not
        depend on this value.

    Attributes
    ----------
    basis_ : FourierBasis
    covariance_ : ProxyCovariance
    n_features_in_ : int
    n_samples_seen_ : int

    Examples
    --------
    >>> import numpy as np
    >>> from fkea import FKEA
    >>> X = np.random.default_rng(0).normal(size=(200, 3))
    >>> est = FKEA(sigma=1.0, rff_dim=512).fit(X)
    >>> 1.0 <= est.vendi(1) <= 200
    True
    """

    def __init__(self, sigma, *, rff_dim=16000, random_state=0, n_modes=10, batch_size=8192, n_jobs=None):
        self.sigma = sigma
        self.rff_dim = rff_dim
        self.random_state = random_state
        self.n_modes = n_modes
        self.batch_size = batch_size
        self.n_jobs = n_jobs

    def _validate_params(self):
        check_sigma(self.sigma)
        rff_dim = check_positive_int(self.rff_dim, "rff_dim", minimum=2)
        if rff_dim % 2:
            raise InputError(f"rff_dim must be even, got {rff_dim}")
        check_positive_int(self.n_modes, "n_modes")
        check_positive_int(self.batch_size, "batch_size")
        if not isinstance(self.random_state, (int, np.integer)) or isinstance(self.random_state, bool):
            raise InputError("random_state must be an int seed")

    def _reset(self):
        for attr in ("basis_", "covariance_", "n_features_in_", "n_samples_seen_"):
            self.__dict__.pop(attr, None)
        self._spectrum = None
        self._modes = None

    def fit(self, X, y=None):
        """Accumulate the proxy covariance of ``X`` from scratch."""
        self._reset()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Add ``X`` to the running covariance; the basis is drawn on the first call."""
        self._validate_params()
        X = check_embeddings(X)
        return self.partial_fit_batches(X[i : i + self.batch_size] for i in range(0, X.shape[0], self.batch_size))

    def partial_fit_batches(self, batches):
        """Accumulate an iterable of ``(n_i, d)`` arrays, e.g. streamed from disk."""
        self._validate_params()
        batches = iter(batches)
        first = next(batches, None)
        if first is None:
            raise InputError("no samples to fit")
        first = check_embeddings(first)
        d = first.shape[1]
        if not hasattr(self, "basis_"):
            self.basis_ = sample_fourier_basis(d, self.rff_dim // 2, self.sigma, int(self.random_state))
            self.covariance_ = ProxyCovariance.empty(self.basis_)
            self.n_features_in_ = d
        elif d != self.n_features_in_:
            raise InputError(f"X has {d} features, estimator was fitted with {self.n_features_in_}")
        self.covariance_.accumulate_batches(itertools.chain([first], batches), self.basis_, threads=self.n_jobs or 1)
        self.n_samples_seen_ = self.covariance_.samples_seen
        self._spectrum = None
        self._modes = None
        return self

    def merge(self, other: FKEA) -> FKEA:
        """Fold in the covariance of another estimator fitted with the same basis."""
        check_is_fitted(self)
        check_is_fitted(other)
        self.covariance_ = merge(self.covariance_, other.covariance_)
        self.n_samples_seen_ = self.covariance_.samples_seen
        self._spectrum = None
        self._modes = None
        return self

    def covariance(self) -> np.ndarray:
        check_is_fitted(self)
        return normalized_covariance(self.covariance_)

    def spectrum(self) -> EigenSpectrum:
        check_is_fitted(self)
        if getattr(self, "_spectrum", None) is None:
            self._spectrum = eigenvalues_sym(self.covariance())
        return self._spectrum

    def vendi(self, alpha=1.0) -> float:
        """FKEA-VENDI score of order ``alpha``."""
        check_alpha(alpha, allow_below_one=False)
        return vendi_from_spectrum(self.spectrum(), alpha)

    def rke(self) -> float:
        """FKEA-RKE score (Frobenius norm, no eigensolve)."""
        check_is_fitted(self)
        return fkea_rke(self.covariance_)

    def bound(self, delta: float = 0.05) -> float:
        """Spectrum-error bound holding with probability ``1 - delta``."""
        check_is_fitted(self)
        return theorem_bound(self.n_samples_seen_, self.basis_.r, delta)

    def report(self, alphas=DEFAULT_ALPHAS, *, delta: float = 0.05, sigma_source: str = "user") -> DiversityReport:
        check_is_fitted(self)
        t0 = time.perf_counter()
        spec = self.spectrum()
        t1 = time.perf_counter()
        scores = {format_alpha(a): vendi_from_spectrum(spec, a) for a in alphas}
        warnings = []
        if spec.suspicious:
            warnings.append(f"clamped negative eigenvalue mass {spec.clamped_mass:.3g}")
        return DiversityReport(
            method="fkea",
            scores=scores,
            n=self.n_samples_seen_,
            d=self.n_features_in_,
            sigma=float(self.sigma),
            rke=self.rke(),
            rff_dim=self.basis_.dim,
            seed=self.basis_.seed,
            basis_fingerprint=self.basis_.fingerprint,
            bound=self.bound(delta),
            delta=delta,
            sigma_source=sigma_source,
            warnings=warnings,
            timings={"eigensolve": t1 - t0},
        )

    def modes(self) -> ModeBasis:
        check_is_fitted(self)
        if getattr(self, "_modes", None) is None:
            self._modes = top_eigenvectors(self.covariance_, self.n_modes)
        return self._modes

    def transform(self, X):
        """Mode scores ``phi(x) . v_i`` for the top ``n_modes`` modes, shape ``(n, n_modes)``."""
        check_is_fitted(self)
        return mode_scores(self.basis_, self.modes(), X)

    def predict(self, X):
        """Index of the mode with the largest squared score for each row."""
        return np.argmax(self.transform(X) ** 2, axis=1)

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)

    def rank(self, X, k: int = 25, *, by_abs: bool = False):
        """Top-``k`` samples of ``X`` for each mode, see :func:`fkea.modes.rank_modes`."""
        check_is_fitted(self)
        report = rank_modes(X, self.basis_, self.modes(), k, by_abs=by_abs, batch_size=self.batch_size)
        report.provenance = {
            "method": "fkea",
            "d": self.n_features_in_,
            "sigma": float(self.sigma),
            "rff_dim": self.basis_.dim,
            "seed": self.basis_.seed,
            "basis_fingerprint": self.basis_.fingerprint,
        }
        return report

    def __sklearn_is_fitted__(self):
        return hasattr(self, "covariance_")


class ExactKernelEntropy(BaseEstimator):
    """Reference VENDI/RKE scores from the full ``n x n`` Gram matrix.

    Parameters
    ----------
    sigma : float
        Gaussian kernel bandwidth.
    max_samples : int, default=20000
        Refuse inputs above this size rather than allocating ``n^2`` memory.
    """

    def __init__(self, sigma, *, max_samples=DEFAULT_MAX_SAMPLES):
        self.sigma = sigma
        self.max_samples = max_samples

    def fit(self, X, y=None):
        X = check_embeddings(X)
        gram = exact_gram(X, self.sigma, max_samples=self.max_samples)
        self.rke_ = float(1.0 / np.einsum("ij,ij->", gram, gram))
        self.spectrum_ = eigenvalues_sym(gram)
        self.n_features_in_ = X.shape[1]
        self.n_samples_ = X.shape[0]
        return self

    def vendi(self, alpha=1.0) -> float:
        check_is_fitted(self)
        check_alpha(alpha, allow_below_one=False)
        return vendi_from_spectrum(self.spectrum_, alpha)

    def rke(self) -> float:
        check_is_fitted(self)
        return self.rke_

    def report(self, alphas=DEFAULT_ALPHAS, *, sigma_source: str = "user") -> DiversityReport:
        check_is_fitted(self)
        warnings = []
        if self.spectrum_.suspicious:
            warnings.append(f"clamped negative eigenvalue mass {self.spectrum_.clamped_mass:.3g}")
        return DiversityReport(
            method="exact",
            scores={format_alpha(a): self.vendi(a) for a in alphas},
            n=self.n_samples_,
            d=self.n_features_in_,
            sigma=float(self.sigma),
            rke=self.rke_,
            sigma_source=sigma_source,
            warnings=warnings,
        )
