"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np

from .exceptions import DataError, InputError


def check_embeddings(X, *, name: str = "X", row_offset: int = 0) -> np.ndarray:
    """Return ``X`` as a C-contiguous float64 array of shape (n, d).

    A 1-D input is treated as a single sample. Single-precision input is
    widened to double precision.

    Raises
    ------
    InputError
        If ``X`` is not 1-D/2-D, or has zero rows or columns.
    DataError
        If ``X`` holds NaN or Inf; the message names the first offending row.
    """
    try:
        arr = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} is not a numeric array: {exc}") from None
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D (n_samples, n_features), got ndim={arr.ndim}")
    n, d = arr.shape
    if n < 1 or d < 1:
        raise InputError(f"{name} must have at least one sample and one feature, got shape {arr.shape}")
    finite = np.isfinite(arr)
    if not finite.all():
        row = int(np.argmin(finite.all(axis=1)))
        raise DataError(f"{name} contains NaN or Inf at row {row + row_offset}")
    return np.ascontiguousarray(arr)


def check_vector(x, d: int | None = None, *, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"{name} must be a 1-D vector, got ndim={arr.ndim}")
    if d is not None and arr.shape[0] != d:
        raise InputError(f"{name} has dimension {arr.shape[0]}, expected {d}")
    if not np.isfinite(arr).all():
        raise DataError(f"{name} contains NaN or Inf")
    return arr


def check_sigma(sigma) -> float:
    if isinstance(sigma, bool) or not isinstance(sigma, Real):
        raise InputError(f"sigma must be a real number, got {sigma!r}")
    sigma = float(sigma)
    if not (math.isfinite(sigma) and sigma > 0):
        raise InputError(f"sigma must be positive and finite, got {sigma}")
    return sigma


def check_positive_int(value, name: str, *, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise InputError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InputError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_alpha(alpha, *, allow_below_one: bool = True) -> float:
    """Validate a Renyi order; strings such as ``"inf"`` and ``"1.5"`` are parsed.

    ``allow_below_one=False`` restricts to ``{1} U (1, inf]``, the orders the
    VENDI family is defined on.
    """
    if isinstance(alpha, str):
        try:
            alpha = float(alpha)
        except ValueError:
            raise InputError(f"alpha must be numeric or 'inf', got {alpha!r}") from None
    if isinstance(alpha, bool) or not isinstance(alpha, Real) or math.isnan(alpha):
        raise InputError(f"alpha must be a real number, got {alpha!r}")
    alpha = float(alpha)
    if alpha <= 0:
        raise InputError(f"alpha must be > 0, got {alpha}")
    if not allow_below_one and alpha < 1:
        raise InputError(f"alpha must be >= 1, got {alpha}")
    return alpha
