"""Random Fourier features for the Gaussian kernel and the streaming proxy covariance.

Feature layout is part of the contract: for frequencies ``w_1..w_r`` the
feature vector of ``x`` is::

    [cos(w_1.x), sin(w_1.x), ..., cos(w_r.x), sin(w_r.x)] / sqrt(r)

i.e. cosine at even positions ``2j`` and sine at odd positions ``2j + 1``
(0-based). Each feature vector has unit Euclidean norm, so the normalized
covariance always has unit trace.
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from ._validation import check_embeddings, check_positive_int, check_sigma
from .exceptions import BasisMismatchError, EmptyAccumulatorError, FormatError, InputError

RNG_ALGORITHM = "numpy.PCG64.standard_normal.rowmajor.v1"

# bounds the n x 2r feature block materialized at once (float64 elements)
_CHUNK_ELEMENTS = 1 << 22

_CKPT_MAGIC = b"FKEC"
_CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sI32sQQ")


def _check_seed(seed) -> int:
    seed = check_positive_int(seed, "seed", minimum=0)
    if seed >= 1 << 64:
        raise InputError(f"seed must fit in 64 bits, got {seed}")
    return seed


@dataclass(frozen=True, eq=False)
class FourierBasis:
    """Frequencies ``omegas`` (shape ``(r, d)``) drawn from ``N(0, I / sigma^2)``."""

    omegas: np.ndarray
    sigma: float
    seed: int
    fingerprint: str = field(init=False)

    def __post_init__(self):
        self.omegas.setflags(write=False)
        object.__setattr__(self, "fingerprint", basis_fingerprint(self.d, self.r, self.sigma, self.seed))

    @property
    def r(self) -> int:
        return self.omegas.shape[0]

    @property
    def d(self) -> int:
        return self.omegas.shape[1]

    @property
    def dim(self) -> int:
        """Length ``2r`` of a feature vector."""
        return 2 * self.omegas.shape[0]


def basis_fingerprint(d: int, r: int, sigma: float, seed: int) -> str:
    token = f"{RNG_ALGORITHM}|d={d}|r={r}|sigma={float(sigma)!r}|seed={seed}"
    return hashlib.sha256(token.encode()).hexdigest()


def sample_fourier_basis(d: int, r: int, sigma, seed: int = 0) -> FourierBasis:
    """Draw ``r`` frequencies in ``R^d`` for a Gaussian kernel of bandwidth ``sigma``.

    Entries are produced by ``numpy.random.Generator(PCG64(seed)).standard_normal``
    filled row-major (frequency by frequency) and divided by ``sigma``, so a given
    ``(d, r, sigma, seed)`` always yields the same array.
    """
    from .kernel import GaussianKernelSpec

    if isinstance(sigma, GaussianKernelSpec):
        sigma = sigma.sigma
    d = check_positive_int(d, "d")
    r = check_positive_int(r, "r")
    sigma = check_sigma(sigma)
    seed = _check_seed(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    omegas = rng.standard_normal((r, d)) / sigma
    return FourierBasis(omegas=omegas, sigma=sigma, seed=seed)


def feature_map(basis: FourierBasis, X) -> np.ndarray:
    """Fourier features of one vector (shape ``(2r,)``) or a batch (shape ``(n, 2r)``)."""
    single = np.ndim(X) == 1
    X = check_embeddings(X)
    if X.shape[1] != basis.d:
        raise InputError(f"input dimension {X.shape[1]} does not match basis dimension {basis.d}")
    proj = X @ basis.omegas.T
    out = np.empty((X.shape[0], basis.dim))
    np.cos(proj, out=out[:, 0::2])
    np.sin(proj, out=out[:, 1::2])
    out *= 1.0 / np.sqrt(basis.r)
    return out[0] if single else out


class ProxyCovariance:
    """Unnormalized running sum of Fourier-feature outer products plus a count.

    The normalized proxy covariance is ``sum_matrix / samples_seen``; keeping
    the raw sum makes accumulators from disjoint shards exactly additive.

    Parameters
    ----------
    basis_fingerprint : str
        Fingerprint of the :class:`FourierBasis` the sums were built with.
    r : int
        Number of frequencies; ``sum_matrix`` is ``2r x 2r``.
    """

    def __init__(self, basis_fingerprint: str, r: int, sum_matrix=None, samples_seen: int = 0):
        self.basis_fingerprint = basis_fingerprint
        self.r = check_positive_int(r, "r")
        if sum_matrix is None:
            sum_matrix = np.zeros((2 * self.r, 2 * self.r))
        elif sum_matrix.shape != (2 * self.r, 2 * self.r):
            raise InputError(f"sum_matrix must be {2 * self.r}x{2 * self.r}, got {sum_matrix.shape}")
        self.sum_matrix = sum_matrix
        self.samples_seen = int(samples_seen)

    @classmethod
    def empty(cls, basis: FourierBasis) -> ProxyCovariance:
        return cls(basis.fingerprint, basis.r)

    def __repr__(self):
        return (
            f"ProxyCovariance(r={self.r}, samples_seen={self.samples_seen}, "
            f"basis_fingerprint={self.basis_fingerprint[:12]}...)"
        )

    def copy(self) -> ProxyCovariance:
        return ProxyCovariance(self.basis_fingerprint, self.r, self.sum_matrix.copy(), self.samples_seen)

    def _check_basis(self, basis: FourierBasis) -> None:
        if basis.fingerprint != self.basis_fingerprint:
            raise BasisMismatchError("accumulator was built with a different Fourier basis")

    def accumulate(self, batch, basis: FourierBasis) -> ProxyCovariance:
        """Add the outer products of ``batch``'s features in place; returns ``self``."""
        self._check_basis(basis)
        batch = check_embeddings(batch)
        self.sum_matrix += batch_outer_sum(basis, batch)
        self.samples_seen += batch.shape[0]
        return self

    def accumulate_batches(
        self, batches: Iterable, basis: FourierBasis, *, threads: int = 1
    ) -> ProxyCovariance:
        """Accumulate an iterable of batches, optionally computing partial sums in threads.

        Partial sums are added in batch order whatever ``threads`` is, so the
        result is bitwise independent of the thread count.
        """
        self._check_basis(basis)
        threads = check_positive_int(threads, "threads")

        def work(batch):
            batch = check_embeddings(batch)
            return batch.shape[0], batch_outer_sum(basis, batch)

        if threads == 1:
            partials = map(work, batches)
            for count, partial in partials:
                self.sum_matrix += partial
                self.samples_seen += count
            return self

        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending = []
            for batch in batches:
                pending.append(pool.submit(work, batch))
                # bounded lookahead keeps at most `threads` partial matrices alive
                while len(pending) >= threads:
                    count, partial = pending.pop(0).result()
                    self.sum_matrix += partial
                    self.samples_seen += count
            for fut in pending:
                count, partial = fut.result()
                self.sum_matrix += partial
                self.samples_seen += count
        return self

    def save(self, path) -> None:
        """Write a resumable binary checkpoint (upper triangle, float64 LE)."""
        header = _CKPT_HEADER.pack(
            _CKPT_MAGIC, _CKPT_VERSION, bytes.fromhex(self.basis_fingerprint), self.r, self.samples_seen
        )
        upper = self.sum_matrix[np.triu_indices(2 * self.r)].astype("<f8")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(upper.tobytes())

    @classmethod
    def load(cls, path) -> ProxyCovariance:
        data = Path(path).read_bytes()
        if len(data) < _CKPT_HEADER.size:
            raise FormatError(f"checkpoint too short: {len(data)} bytes, header needs {_CKPT_HEADER.size}")
        magic, version, fp, r, seen = _CKPT_HEADER.unpack_from(data)
        if magic != _CKPT_MAGIC:
            raise FormatError(f"bad checkpoint magic {magic!r} at byte offset 0")
        if version != _CKPT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version} at byte offset 4")
        if r < 1 or r > 1 << 20:
            raise FormatError(f"implausible frequency count r={r} at byte offset 40")
        m = 2 * r
        expected = _CKPT_HEADER.size + 8 * (m * (m + 1) // 2)
        if len(data) != expected:
            raise FormatError(f"checkpoint length {len(data)} bytes, expected {expected}")
        upper = np.frombuffer(data, dtype="<f8", offset=_CKPT_HEADER.size).astype(np.float64)
        mat = np.zeros((m, m))
        iu = np.triu_indices(m)
        mat[iu] = upper
        mat.T[iu] = upper
        return cls(fp.hex(), r, mat, seen)


def batch_outer_sum(basis: FourierBasis, batch) -> np.ndarray:
    """``sum_x phi(x) phi(x)^T`` over the rows of ``batch``, computed in row chunks."""
    batch = check_embeddings(batch)
    if batch.shape[1] != basis.d:
        raise InputError(f"batch dimension {batch.shape[1]} does not match basis dimension {basis.d}")
    step = max(1, _CHUNK_ELEMENTS // basis.dim)
    total = None
    for start in range(0, batch.shape[0], step):
        feats = feature_map(basis, batch[start : start + step])
        part = feats.T @ feats
        if total is None:
            total = part
        else:
            total += part
    return total


def merge(a: ProxyCovariance, b: ProxyCovariance) -> ProxyCovariance:
    """Combine two accumulators built with the same basis into a new one."""
    if a.basis_fingerprint != b.basis_fingerprint or a.r != b.r:
        raise BasisMismatchError("cannot merge accumulators built with different Fourier bases")
    return ProxyCovariance(a.basis_fingerprint, a.r, a.sum_matrix + b.sum_matrix, a.samples_seen + b.samples_seen)


def normalized_covariance(cov: ProxyCovariance) -> np.ndarray:
    """The ``2r x 2r`` proxy kernel covariance ``sum_matrix / samples_seen``."""
    if cov.samples_seen < 1:
        raise EmptyAccumulatorError("no samples have been accumulated")
    return cov.sum_matrix / cov.samples_seen


def proxy_gram(basis: FourierBasis, X) -> np.ndarray:
    """``n x n`` proxy kernel matrix ``(1/n) [phi(x_i).phi(x_j)]``.

    Shares its non-zero eigenvalues with :func:`normalized_covariance`; cheaper
    to diagonalize when ``n < 2r``.
    """
    feats = feature_map(basis, check_embeddings(X))
    return (feats @ feats.T) / feats.shape[0]
