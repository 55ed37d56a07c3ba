"""Matrix-based Renyi entropy, VENDI/RKE scores and approximation bounds.

Natural logarithms are used throughout; a score is ``exp(H_alpha)`` so the
base cancels. The orders 1 and infinity are evaluated as their analytic
limits (Shannon entropy and min-entropy).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ._validation import check_alpha, check_positive_int
from .exceptions import InputError, NumericError, NumericWarning

if TYPE_CHECKING:
    from .rff import ProxyCovariance

#: Negative eigenvalues above this are treated as silent round-off.
NEGATIVE_EIGENVALUE_TOL = 1e-9
#: Total clamped negative mass above which a :class:`NumericWarning` is raised.
CLAMPED_MASS_TOL = 1e-6

DEFAULT_ALPHAS = (1.0, 1.5, 2.0, math.inf)


@dataclass(frozen=True)
class EigenSpectrum:
    """Descending, non-negative eigenvalues summing to one.

    Attributes
    ----------
    values : ndarray of shape (source_dim,)
        Clamped and renormalized eigenvalues, sorted descending.
    source_dim : int
        Side length of the matrix the spectrum came from.
    clamped_mass : float
        Total magnitude of negative eigenvalues that were set to zero.
    min_raw : float
        Smallest eigenvalue before clamping.
    """

    values: np.ndarray
    source_dim: int
    clamped_mass: float = 0.0
    min_raw: float = 0.0

    @property
    def suspicious(self) -> bool:
        """True if clamping removed more than round-off."""
        return self.min_raw < -NEGATIVE_EIGENVALUE_TOL or self.clamped_mass > CLAMPED_MASS_TOL

    def __len__(self):
        return self.values.shape[0]


def spectrum_from_eigenvalues(raw, source_dim: int | None = None) -> EigenSpectrum:
    """Clamp negatives to zero, renormalize to unit sum and sort descending."""
    raw = np.asarray(raw, dtype=np.float64).ravel()
    if raw.size == 0 or not np.isfinite(raw).all():
        raise NumericError("eigenvalues are empty or non-finite")
    neg = raw < 0
    clamped_mass = float(-raw[neg].sum()) if neg.any() else 0.0
    min_raw = float(raw.min())
    values = np.where(neg, 0.0, raw)
    total = values.sum()
    if not total > 0:
        raise NumericError("spectrum has no positive mass")
    values = np.sort(values / total)[::-1].copy()
    spec = EigenSpectrum(
        values=values,
        source_dim=raw.size if source_dim is None else int(source_dim),
        clamped_mass=clamped_mass,
        min_raw=min_raw,
    )
    if spec.suspicious:
        warnings.warn(
            f"clamped negative eigenvalue mass {clamped_mass:.3g} (min eigenvalue {min_raw:.3g})",
            NumericWarning,
            stacklevel=2,
        )
    return spec


def eigenvalues_sym(M, *, symmetry_tol: float = 1e-10) -> EigenSpectrum:
    """Full spectrum of a symmetric matrix, clamped at 0 and renormalized.

    Raises
    ------
    InputError
        If ``M`` is not square, not finite, or asymmetric beyond ``symmetry_tol``.
    NumericError
        If the eigensolver does not converge.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise InputError(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise InputError("matrix contains NaN or Inf")
    asym = float(np.max(np.abs(M - M.T)))
    if asym > symmetry_tol:
        raise InputError(f"matrix is not symmetric (max |M - M^T| = {asym:.3g})")
    try:
        raw = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver did not converge: {exc}") from None
    return spectrum_from_eigenvalues(raw, M.shape[0])


def _as_probabilities(spectrum) -> np.ndarray:
    if isinstance(spectrum, EigenSpectrum):
        return spectrum.values
    values = np.asarray(spectrum, dtype=np.float64).ravel()
    if values.size == 0 or (values < 0).any() or not np.isfinite(values).all():
        raise InputError("spectrum must be a non-empty array of non-negative finite values")
    return values


def renyi_entropy(spectrum, alpha) -> float:
    """Order-``alpha`` Renyi entropy (natural log) of a unit-sum spectrum.

    ``alpha == 1`` gives the Shannon entropy with ``0 log 0 = 0`` and
    ``alpha == inf`` gives ``-log(max eigenvalue)``.
    """
    alpha = check_alpha(alpha)
    p = _as_probabilities(spectrum)
    p = p[p > 0]
    if alpha == 1.0:
        h = -float(np.sum(p * np.log(p)))
    elif math.isinf(alpha):
        h = -math.log(float(p.max()))
    else:
        h = math.log(float(np.sum(p**alpha))) / (1.0 - alpha)
    # exact zero for one-atom spectra; avoids -0.0 / 1e-17 noise
    return max(h, 0.0)


def vendi_from_spectrum(spectrum, alpha) -> float:
    """``exp`` of the Renyi entropy: the effective number of distinct modes."""
    return math.exp(renyi_entropy(spectrum, alpha))


def alpha_norm_score(score: float, alpha) -> float:
    """Map a VENDI score to ``score ** ((1 - alpha) / alpha)``.

    This equals the alpha-norm of the eigenvalue vector, the quantity the
    dimension-free approximation guarantee is stated for. At ``alpha = inf``
    it is the largest eigenvalue.
    """
    alpha = check_alpha(alpha)
    if math.isinf(alpha):
        return 1.0 / score
    return score ** ((1.0 - alpha) / alpha)


def fkea_spectrum(cov: ProxyCovariance) -> EigenSpectrum:
    """Spectrum of the normalized proxy covariance matrix."""
    from .rff import normalized_covariance

    return eigenvalues_sym(normalized_covariance(cov))


def proxy_spectrum(basis, X) -> EigenSpectrum:
    """FKEA spectrum of an in-memory sample, diagonalizing the smaller matrix.

    The ``n x n`` proxy Gram matrix and the ``2r x 2r`` proxy covariance share
    their non-zero eigenvalues, so for ``n < 2r`` the Gram side is used.
    """
    from .rff import ProxyCovariance, proxy_gram

    n = np.shape(X)[0]
    if n < basis.dim:
        return eigenvalues_sym(proxy_gram(basis, X))
    return fkea_spectrum(ProxyCovariance.empty(basis).accumulate(X, basis))


def fkea_vendi(cov: ProxyCovariance, alpha=1.0) -> float:
    """Fourier-approximated VENDI score of order ``alpha``."""
    return vendi_from_spectrum(fkea_spectrum(cov), alpha)


def fkea_rke(cov: ProxyCovariance) -> float:
    """Fourier-approximated RKE: inverse squared Frobenius norm, no eigensolve."""
    from .rff import normalized_covariance

    C = normalized_covariance(cov)
    return float(1.0 / np.einsum("ij,ij->", C, C))


def theorem_bound(n: int, r: int, delta: float = 0.05) -> float:
    """High-probability L2 bound on the eigenvalue error of the approximation.

    Returns ``sqrt(8 ln(n / (2 delta)) / r)``; with probability at least
    ``1 - delta`` over the Fourier basis, the sorted exact and approximate
    spectra differ by at most this much in Euclidean norm. A negative log
    term (only possible for ``n = 1``) is clamped to zero.
    """
    n = check_positive_int(n, "n")
    r = check_positive_int(r, "r")
    if isinstance(delta, bool) or not (0.0 < float(delta) < 1.0):
        raise InputError(f"delta must lie in (0, 1), got {delta!r}")
    log_term = math.log(n / (2.0 * float(delta)))
    return math.sqrt(max(log_term, 0.0) * 8.0 / r)


def score_bound(n: int, r: int, alpha, delta: float = 0.05, *, feature_dim: float | None = None) -> float:
    """Bound on ``|fkea**((1-a)/a) - exact**((1-a)/a)|`` for order ``alpha``.

    For ``alpha >= 2`` the bound is dimension free. For ``1 <= alpha < 2`` it
    scales with ``feature_dim ** (1/alpha - 1/2)``; the Gaussian kernel has
    an infinite feature dimension, so ``None`` gives ``inf``.
    """
    alpha = check_alpha(alpha, allow_below_one=False)
    eps = theorem_bound(n, r, delta)
    if alpha >= 2.0:
        return eps
    if feature_dim is None or math.isinf(feature_dim):
        return math.inf
    return feature_dim ** (1.0 / alpha - 0.5) * eps


def spectrum_error(exact, approx) -> float:
    """Euclidean distance between two descending spectra, zero-padding the shorter."""
    a = np.sort(_as_probabilities(exact))[::-1]
    b = np.sort(_as_probabilities(approx))[::-1]
    m = max(a.size, b.size)
    a = np.pad(a, (0, m - a.size))
    b = np.pad(b, (0, m - b.size))
    return float(np.linalg.norm(a - b))


def format_alpha(alpha) -> str:
    """Canonical string key for an order: ``1``, ``1.5``, ``2``, ``inf``."""
    alpha = check_alpha(alpha)
    if math.isinf(alpha):
        return "inf"
    if alpha.is_integer():
        return str(int(alpha))
    return repr(alpha)


@dataclass
class DiversityReport:
    """Scores per order together with the provenance needed to reproduce them.

    ``method`` is ``"fkea"`` or ``"exact"``. ``rff_dim``/``seed``/``basis_fingerprint``
    are ``None`` for exact reports. ``timings`` is wall-clock seconds per stage and
    is left out of serialized files unless explicitly requested.
    """

    method: str
    scores: dict[str, float]
    n: int
    d: int
    sigma: float
    rke: float | None = None
    rff_dim: int | None = None
    seed: int | None = None
    basis_fingerprint: str | None = None
    bound: float | None = None
    delta: float | None = None
    sigma_source: str = "user"
    warnings: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def alphas(self) -> list[str]:
        return list(self.scores)
