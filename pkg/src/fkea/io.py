"""Embedding files, synthetic mixtures and report serialization.

Binary embedding layout (all integers little-endian)::

    offset  size  field
    0       4     magic  b"FKEA"
    4       4     version (uint32) = 1
    8       8     n (uint64)
    16      4     d (uint32)
    20      1     dtype code (uint8): 0 = float32, 1 = float64
    21      ...   n * d values, row-major, little-endian

Files ending in ``.csv`` (or ``.txt``) are read as headerless CSV with one
sample per row.
"""

from __future__ import annotations

import csv
import io as _io
import itertools
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import __version__
from ._validation import check_embeddings, check_positive_int
from .entropy import DiversityReport
from .exceptions import DataError, FormatError, GenerationError, InputError
from .modes import ModeReport

MAGIC = b"FKEA"
VERSION = 1
HEADER = struct.Struct("<4sIQIB")
DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
DEFAULT_BATCH_SIZE = 8192

DIVERSITY_SCHEMA = "fkea.diversity_report/1"
MODE_SCHEMA = "fkea.mode_report/1"

_CSV_SUFFIXES = {".csv", ".txt"}


@dataclass(frozen=True)
class EmbeddingFileHeader:
    n: int
    d: int
    dtype_code: int
    version: int = VERSION

    @property
    def dtype(self) -> np.dtype:
        return DTYPES[self.dtype_code]

    @property
    def payload_bytes(self) -> int:
        return self.n * self.d * self.dtype.itemsize


def _is_csv(path) -> bool:
    return Path(path).suffix.lower() in _CSV_SUFFIXES


def write_embeddings(path, X, *, dtype="float32") -> None:
    """Write ``X`` in the canonical binary format (or CSV, by extension)."""
    X = check_embeddings(X)
    if _is_csv(path):
        np.savetxt(path, X, delimiter=",", fmt="%.17g")
        return
    code = {np.dtype("float32"): 0, np.dtype("float64"): 1}.get(np.dtype(dtype))
    if code is None:
        raise InputError(f"dtype must be float32 or float64, got {dtype!r}")
    n, d = X.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, n, d, code))
        fh.write(X.astype(DTYPES[code]).tobytes())


def read_header(path) -> EmbeddingFileHeader:
    """Parse and validate the header against the file size."""
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as fh:
        raw = fh.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise FormatError(f"{path}: file is {len(raw)} bytes, header needs {HEADER.size}")
    magic, version, n, d, code = HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte offset 4")
    if n < 1:
        raise FormatError(f"{path}: sample count n={n} at byte offset 8 must be >= 1")
    if d < 1:
        raise FormatError(f"{path}: dimension d={d} at byte offset 16 must be >= 1")
    if code not in DTYPES:
        raise FormatError(f"{path}: unknown dtype code {code} at byte offset 20")
    header = EmbeddingFileHeader(n=n, d=d, dtype_code=code, version=version)
    actual = size - HEADER.size
    if actual != header.payload_bytes:
        raise FormatError(
            f"{path}: payload is {actual} bytes but header (n={n}, d={d}, "
            f"{header.dtype.name}) implies {header.payload_bytes} bytes "
            f"(expected total length {HEADER.size + header.payload_bytes}, actual {size})"
        )
    return header


def _parse_csv_lines(lines, path, row_offset: int, d: int | None) -> np.ndarray:
    rows = []
    for j, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            raise FormatError(f"{path}: non-numeric value in row {row_offset + j}") from None
        width = len(rows[-1])
        if d is None:
            d = width
        elif width != d:
            raise FormatError(f"{path}: row {row_offset + j} has {width} values, expected {d}")
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), d or 0)


def iter_embedding_batches(path, batch_size: int = DEFAULT_BATCH_SIZE) -> Iterator[np.ndarray]:
    """Yield validated float64 batches of at most ``batch_size`` rows.

    Binary payloads are read with plain sequential reads (not memory-mapped),
    so resident memory stays proportional to the batch, not the file.
    """
    batch_size = check_positive_int(batch_size, "batch_size")
    if _is_csv(path):
        offset = 0
        d = None
        with open(path) as fh:
            while True:
                lines = list(itertools.islice(fh, batch_size))
                if not lines:
                    break
                batch = _parse_csv_lines(lines, path, offset, d)
                if batch.shape[0] == 0:
                    continue
                d = batch.shape[1]
                yield check_embeddings(batch, row_offset=offset)
                offset += batch.shape[0]
        if offset == 0:
            raise FormatError(f"{path}: CSV file contains no rows")
        return

    header = read_header(path)
    row_bytes = header.d * header.dtype.itemsize
    with open(path, "rb") as fh:
        fh.seek(HEADER.size)
        for start in range(0, header.n, batch_size):
            rows = min(batch_size, header.n - start)
            buf = fh.read(rows * row_bytes)
            if len(buf) != rows * row_bytes:
                raise FormatError(f"{path}: truncated payload at row {start}")
            batch = np.frombuffer(buf, dtype=header.dtype).reshape(rows, header.d)
            yield check_embeddings(batch, row_offset=start)


def read_embeddings(path) -> np.ndarray:
    """Load a whole embedding file as a float64 ``(n, d)`` array."""
    batches = list(iter_embedding_batches(path, batch_size=1 << 16))
    return np.concatenate(batches, axis=0)


def embedding_shape(path) -> tuple[int, int]:
    if _is_csv(path):
        X = read_embeddings(path)
        return X.shape
    h = read_header(path)
    return h.n, h.d


def sample_rows(path, m: int, seed: int = 0) -> np.ndarray:
    """Seeded subsample of at most ``m`` rows, read without loading the file."""
    if _is_csv(path):
        X = read_embeddings(path)
        if X.shape[0] <= m:
            return X
        rows = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=m, replace=False))
        return X[rows]
    header = read_header(path)
    if header.n <= m:
        rows = np.arange(header.n)
    else:
        rows = np.sort(np.random.default_rng(seed).choice(header.n, size=m, replace=False))
    row_bytes = header.d * header.dtype.itemsize
    out = np.empty((rows.size, header.d))
    with open(path, "rb") as fh:
        for j, row in enumerate(rows):
            fh.seek(HEADER.size + int(row) * row_bytes)
            out[j] = np.frombuffer(fh.read(row_bytes), dtype=header.dtype)
    if not np.isfinite(out).all():
        bad = int(rows[np.argmin(np.isfinite(out).all(axis=1))])
        raise DataError(f"{path}: NaN or Inf at row {bad}")
    return out


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture with ``t`` clusters.

    ``n_per_cluster`` is an int or a length-``t`` sequence of sizes.
    """

    t: int
    n_per_cluster: int | Sequence[int]
    d: int
    center_separation: float
    cluster_std: float
    seed: int = 0
    max_tries: int = 1000

    def sizes(self) -> list[int]:
        if isinstance(self.n_per_cluster, (int, np.integer)):
            return [check_positive_int(self.n_per_cluster, "n_per_cluster")] * self.t
        sizes = [check_positive_int(s, "n_per_cluster") for s in self.n_per_cluster]
        if len(sizes) != self.t:
            raise InputError(f"n_per_cluster has {len(sizes)} entries, expected t={self.t}")
        return sizes


def mixture_centers(spec: MixtureSpec, rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample ``t`` centers at pairwise distance >= ``center_separation``."""
    t, d, sep = spec.t, spec.d, float(spec.center_separation)
    scale = sep * max(1.0, t ** (1.0 / d))
    centers = np.empty((t, d))
    for i in range(t):
        for _ in range(spec.max_tries):
            cand = rng.standard_normal(d) * scale
            if i == 0 or np.min(np.linalg.norm(centers[:i] - cand, axis=1)) >= sep:
                centers[i] = cand
                break
        else:
            raise GenerationError(
                f"could not place center {i} of {t} at separation {sep} in dimension {d} "
                f"after {spec.max_tries} tries"
            )
    return centers


def gen_mixture(spec: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sample the mixture; returns ``(X, labels)`` with rows grouped by cluster."""
    check_positive_int(spec.t, "t")
    check_positive_int(spec.d, "d")
    if not (spec.center_separation > 0 and spec.cluster_std > 0):
        raise InputError("center_separation and cluster_std must be positive")
    sizes = spec.sizes()
    rng = np.random.default_rng(spec.seed)
    centers = mixture_centers(spec, rng)
    labels = np.repeat(np.arange(spec.t), sizes)
    X = centers[labels] + spec.cluster_std * rng.standard_normal((labels.size, spec.d))
    return X, labels


def write_labels(path, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_index", "label"])
        for i, lab in enumerate(labels):
            w.writerow([i, int(lab)])


def read_labels(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([int(r["label"]) for r in rows], dtype=np.int64)


def diversity_report_to_dict(report: DiversityReport, *, include_timings: bool = False) -> dict:
    provenance = {
        "method": report.method,
        "n": report.n,
        "d": report.d,
        "sigma": report.sigma,
        "sigma_source": report.sigma_source,
        "version": __version__,
    }
    if report.method == "fkea":
        provenance.update(
            rff_dim=report.rff_dim,
            r=report.rff_dim // 2,
            seed=report.seed,
            basis_fingerprint=report.basis_fingerprint,
        )
    out = {
        "schema": DIVERSITY_SCHEMA,
        "provenance": provenance,
        "scores": dict(report.scores),
        "rke": report.rke,
        "warnings": list(report.warnings),
    }
    if report.bound is not None:
        out["bound"] = {"delta": report.delta, "spectrum_l2": report.bound}
    if include_timings:
        out["timings"] = dict(report.timings)
    return out


def mode_report_to_dict(report: ModeReport, *, include_timings: bool = False) -> dict:
    out = {
        "schema": MODE_SCHEMA,
        "provenance": {**report.provenance, "n": report.n, "version": __version__},
        "k": report.k,
        "rank_by": report.rank_by,
        "modes": [
            {
                "mode": m.index,
                "eigenvalue": m.eigenvalue,
                "samples": [{"index": i, "score": s} for i, s in zip(m.sample_indices, m.scores)],
            }
            for m in report.modes
        ],
    }
    if include_timings:
        out["timings"] = dict(report.timings)
    return out


def report_to_json(report, *, include_timings: bool = False) -> str:
    """Stable JSON: sorted keys, shortest round-trip float repr."""
    if isinstance(report, DiversityReport):
        obj = diversity_report_to_dict(report, include_timings=include_timings)
    elif isinstance(report, ModeReport):
        obj = mode_report_to_dict(report, include_timings=include_timings)
    else:
        raise InputError(f"unsupported report type {type(report).__name__}")
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def report_to_csv(report) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(report, DiversityReport):
        w.writerow(["method", "alpha", "score", "n", "sigma", "rff_dim", "seed"])
        for alpha, score in report.scores.items():
            w.writerow(
                [
                    report.method,
                    alpha,
                    repr(score),
                    report.n,
                    repr(report.sigma),
                    "" if report.rff_dim is None else report.rff_dim,
                    "" if report.seed is None else report.seed,
                ]
            )
    elif isinstance(report, ModeReport):
        w.writerow(["mode", "rank", "sample_index", "score", "eigenvalue"])
        for m in report.modes:
            for rank, (i, s) in enumerate(zip(m.sample_indices, m.scores)):
                w.writerow([m.index, rank, i, repr(s), repr(m.eigenvalue)])
    else:
        raise InputError(f"unsupported report type {type(report).__name__}")
    return buf.getvalue()


def write_report(report, path, format: str = "json", *, include_timings: bool = False) -> None:
    """Serialize a :class:`DiversityReport` or :class:`ModeReport` as JSON or CSV."""
    if format == "json":
        text = report_to_json(report, include_timings=include_timings)
    elif format == "csv":
        text = report_to_csv(report)
    else:
        raise InputError(f"format must be 'json' or 'csv', got {format!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
