"""Input validation helpers.

All image-processing functions in this package operate on plain numpy
arrays: ``(H, W)`` for single-channel images, ``(H, W, 3)`` for RGB.
Samples are floats normalized to ``[0, data_range]`` with ``data_range``
defaulting to 1.0. These helpers centralize the checks so estimators and
functions validate consistently, in the spirit of sklearn's ``check_array``.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeError

# Tolerance for range checks: 8-bit quantization plus float round-off
# never exceeds this.
_RANGE_SLACK = 1e-9


def check_image(
    img,
    *,
    channels: int | None = None,
    data_range: float = 1.0,
    name: str = "image",
) -> np.ndarray:
    """Validate an image array and return it as float64.

    Accepts ``(H, W)`` or ``(H, W, 3)`` arrays with values in
    ``[0, data_range]``. ``channels`` restricts the accepted layout
    (1 or 3); ``None`` accepts both.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        nch = 1
    elif arr.ndim == 3 and arr.shape[2] == 3:
        nch = 3
    else:
        raise ShapeError(
            f"{name}: expected (H, W) or (H, W, 3) array, got shape {arr.shape}"
        )
    if channels is not None and nch != channels:
        raise ShapeError(f"{name}: expected {channels}-channel image, got {nch}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name}: empty image with shape {arr.shape}")
    if data_range <= 0:
        raise ParameterError(f"data_range must be positive, got {data_range}")
    if not np.isfinite(arr).all():
        raise ParameterError(f"{name}: contains non-finite samples")
    lo, hi = arr.min(), arr.max()
    if lo < -_RANGE_SLACK or hi > data_range + _RANGE_SLACK:
        raise ParameterError(
            f"{name}: samples outside [0, {data_range}] (min={lo:g}, max={hi:g})"
        )
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, names=("first image", "second image")) -> None:
    """Raise ShapeError unless the two arrays have identical shapes."""
    if a.shape != b.shape:
        raise ShapeError(
            f"{names[0]} has shape {a.shape} but {names[1]} has shape {b.shape}"
        )


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be positive, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value}")
    return value


def check_in_range(value: float, lo: float, hi: float, name: str, *, include_lo=True, include_hi=True) -> float:
    value = float(value)
    ok_lo = value >= lo if include_lo else value > lo
    ok_hi = value <= hi if include_hi else value < hi
    if not (np.isfinite(value) and ok_lo and ok_hi):
        lob = "[" if include_lo else "("
        hib = "]" if include_hi else ")"
        raise ParameterError(f"{name} must be in {lob}{lo}, {hi}{hib}, got {value}")
    return value
