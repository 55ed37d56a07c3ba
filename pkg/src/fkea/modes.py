"""Mode identification from the top eigenvectors of the proxy covariance.

The score of sample ``x`` for mode ``i`` is the inner product of its Fourier
feature with the ``i``-th eigenvector, ``u_i(x) = phi(x) . v_i``. With this
reading the mean of ``u_i(x)^2`` over the accumulated samples equals the
``i``-th eigenvalue exactly, which the tests use as a consistency check.

Modes are indexed from 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg

from ._validation import check_embeddings, check_positive_int, check_vector
from .exceptions import BasisMismatchError, InputError, NumericError
from .rff import FourierBasis, ProxyCovariance, feature_map, normalized_covariance

RESIDUAL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """Top-``t`` eigenpairs of a normalized proxy covariance.

    Attributes
    ----------
    eigenvalues : ndarray of shape (t,)
        Descending, non-negative.
    eigenvectors : ndarray of shape (2r, t)
        Orthonormal columns; each column's largest-magnitude entry is positive.
    basis_fingerprint : str
        Fingerprint of the Fourier basis the covariance was built with.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis_fingerprint: str

    @property
    def t(self) -> int:
        return self.eigenvalues.shape[0]


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    Ties in magnitude resolve to the lowest row index.
    """
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def top_eigenvectors(cov: ProxyCovariance, t: int) -> ModeBasis:
    """Leading ``t`` eigenpairs of the normalized covariance, canonically signed."""
    m = 2 * cov.r
    t = check_positive_int(t, "t")
    if t > m:
        raise InputError(f"t must be at most 2r = {m}, got {t}")
    C = normalized_covariance(cov)
    try:
        w, V = scipy.linalg.eigh(C, subset_by_index=[m - t, m - 1])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver did not converge: {exc}") from None
    w = w[::-1]
    V = canonical_signs(V[:, ::-1])
    residual = np.linalg.norm(C @ V - V * w, axis=0)
    if residual.max() > RESIDUAL_TOL:
        raise NumericError(f"eigenpair residual {residual.max():.3g} exceeds {RESIDUAL_TOL}")
    w = np.maximum(w, 0.0)
    return ModeBasis(eigenvalues=w, eigenvectors=np.ascontiguousarray(V), basis_fingerprint=cov.basis_fingerprint)


def _check_pair(basis: FourierBasis, mb: ModeBasis) -> None:
    if basis.fingerprint != mb.basis_fingerprint:
        raise BasisMismatchError("mode basis was computed with a different Fourier basis")


def mode_scores(basis: FourierBasis, mb: ModeBasis, X) -> np.ndarray:
    """Scores of every row of ``X`` against every mode, shape ``(n, t)``."""
    _check_pair(basis, mb)
    return feature_map(basis, check_embeddings(X)) @ mb.eigenvectors


def mode_score(basis: FourierBasis, mb: ModeBasis, i: int, x) -> float:
    """Score of a single vector ``x`` for mode ``i``."""
    _check_pair(basis, mb)
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 0 <= i < mb.t:
        raise InputError(f"mode index must be in [0, {mb.t}), got {i!r}")
    x = check_vector(x, basis.d)
    return float(feature_map(basis, x) @ mb.eigenvectors[:, i])


@dataclass
class Mode:
    index: int
    eigenvalue: float
    sample_indices: list[int]
    scores: list[float]


@dataclass
class ModeReport:
    """Per-mode eigenvalue and the ``k`` highest-ranked samples."""

    modes: list[Mode]
    k: int
    rank_by: str = "score"
    n: int = 0
    provenance: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


class _TopK:
    """Running top-``k`` (by key descending, then index ascending) for several columns."""

    def __init__(self, t: int, k: int):
        self.k = k
        self.keys = [np.empty(0) for _ in range(t)]
        self.scores = [np.empty(0) for _ in range(t)]
        self.idx = [np.empty(0, dtype=np.int64) for _ in range(t)]

    def push(self, keys: np.ndarray, scores: np.ndarray, idx: np.ndarray) -> None:
        for j in range(keys.shape[1]):
            kk = np.concatenate([self.keys[j], keys[:, j]])
            ss = np.concatenate([self.scores[j], scores[:, j]])
            ii = np.concatenate([self.idx[j], idx])
            order = np.lexsort((ii, -kk))[: self.k]
            self.keys[j], self.scores[j], self.idx[j] = kk[order], ss[order], ii[order]


def _as_batches(X, batch_size: int) -> Iterable[np.ndarray]:
    if isinstance(X, np.ndarray) or np.ndim(X) == 2:
        X = check_embeddings(X)
        for start in range(0, X.shape[0], batch_size):
            yield X[start : start + batch_size]
    else:
        yield from X


def rank_modes(
    X,
    basis: FourierBasis,
    mb: ModeBasis,
    k: int,
    *,
    by_abs: bool = False,
    batch_size: int = 8192,
) -> ModeReport:
    """Rank samples for every mode in one pass over ``X``.

    ``X`` is an array or an iterable of row batches; sample indices are
    positions in the concatenated stream. Only ``t * k`` candidates are kept
    between batches. Ties go to the lower sample index.
    """
    _check_pair(basis, mb)
    k = check_positive_int(k, "k")
    batch_size = check_positive_int(batch_size, "batch_size")
    top = _TopK(mb.t, k)
    offset = 0
    for batch in _as_batches(X, batch_size):
        batch = check_embeddings(batch, row_offset=offset)
        scores = mode_scores(basis, mb, batch)
        keys = np.abs(scores) if by_abs else scores
        top.push(keys, scores, np.arange(offset, offset + batch.shape[0]))
        offset += batch.shape[0]
    if k > offset:
        raise InputError(f"k={k} exceeds the number of samples ({offset})")
    modes = [
        Mode(
            index=i,
            eigenvalue=float(mb.eigenvalues[i]),
            sample_indices=[int(v) for v in top.idx[i]],
            scores=[float(v) for v in top.scores[i]],
        )
        for i in range(mb.t)
    ]
    return ModeReport(modes=modes, k=k, rank_by="abs" if by_abs else "score", n=offset)
