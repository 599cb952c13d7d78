"""Core image operations: luma conversion, bilinear sampling, tone stretch.

Images are float arrays in ``[0, data_range]`` (see ``validation``).
Everything here is pure: inputs are never mutated, so arrays can be
shared freely between threads.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .validation import check_image

# Rec.601 weights, the classical broadcast convention for grayscale.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def to_luma(img: np.ndarray) -> np.ndarray:
    """Convert an RGB image to single-channel luma.

    Uses Rec.601 weights (0.299, 0.587, 0.114). A single-channel input is
    returned unchanged (as float64), so callers can normalize mixed inputs
    with one call.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    arr = check_image(arr, channels=3, data_range=np.inf, name="rgb image")
    r, g, b = LUMA_WEIGHTS
    return r * arr[..., 0] + g * arr[..., 1] + b * arr[..., 2]


def bilinear_sample(
    img: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    fill: float = 0.0,
) -> np.ndarray:
    """Bilinearly interpolate ``img`` at fractional pixel coordinates.

    Pixel centers sit at integer coordinates; ``(x, y)`` = (column, row).
    Coordinates outside ``[0, W-1] x [0, H-1]`` return ``fill``. Works on
    single- and 3-channel images; the channel axis is broadcast.

    ``xs``/``ys`` may be any matching shape; the result has that shape
    (plus a trailing channel axis for RGB input).
    """
    arr = np.asarray(img, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    h, w = arr.shape[:2]

    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    # Clamp before flooring so out-of-bounds lanes still index validly;
    # they are overwritten with `fill` afterwards.
    xc = np.clip(xs, 0.0, w - 1.0)
    yc = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xc).astype(np.intp)
    y0 = np.floor(yc).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0

    if arr.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
        inside_b = inside[..., None]
    else:
        inside_b = inside

    top = arr[y0, x0] * (1.0 - fx) + arr[y0, x1] * fx
    bot = arr[y1, x0] * (1.0 - fx) + arr[y1, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return np.where(inside_b, out, fill)


def sample_bilinear(img: np.ndarray, x: float, y: float, fill: float = 0.0) -> float:
    """Scalar convenience wrapper around :func:`bilinear_sample`."""
    val = bilinear_sample(img, np.asarray(x, dtype=float), np.asarray(y, dtype=float), fill)
    return float(val) if np.ndim(val) == 0 else np.asarray(val, dtype=float)


def nearest_rank_percentile(values: np.ndarray, pct: float) -> float:
    """Percentile by the nearest-rank rule on the sorted sample multiset.

    ``pct`` in [0, 100]; 0 returns the minimum, 100 the maximum. The
    nearest rank is ``ceil(pct/100 * n)`` (1-based), deterministic and
    easy to check against a hand-sorted list.
    """
    flat = np.sort(np.asarray(values, dtype=np.float64), axis=None)
    n = flat.size
    if n == 0:
        raise ParameterError("percentile of an empty sample set")
    if not 0.0 <= pct <= 100.0:
        raise ParameterError(f"percentile must be in [0, 100], got {pct}")
    rank = max(1, math.ceil(pct / 100.0 * n))
    return float(flat[rank - 1])


def linear_stretch(
    img: np.ndarray,
    low_pct: float = 1.0,
    high_pct: float = 99.0,
    data_range: float = 1.0,
) -> np.ndarray:
    """Percentile-based contrast/brightness stretch.

    Per channel, remaps the ``low_pct`` percentile to 0 and the
    ``high_pct`` percentile to ``data_range`` with an affine map, clamping
    to ``[0, data_range]``. A channel whose two percentile values coincide
    (flat channel) is returned unchanged.
    """
    if not (0.0 <= low_pct < high_pct <= 100.0):
        raise ParameterError(
            f"percentiles must satisfy 0 <= low < high <= 100, got ({low_pct}, {high_pct})"
        )
    arr = check_image(img, data_range=data_range, name="image")

    def stretch_channel(ch: np.ndarray) -> np.ndarray:
        lo = nearest_rank_percentile(ch, low_pct)
        hi = nearest_rank_percentile(ch, high_pct)
        if hi <= lo:
            return ch
        out = (ch - lo) * (data_range / (hi - lo))
        return np.clip(out, 0.0, data_range)

    if arr.ndim == 2:
        return stretch_channel(arr)
    return np.stack([stretch_channel(arr[..., c]) for c in range(3)], axis=-1)


def quantize(img: np.ndarray, bits: int, data_range: float = 1.0) -> np.ndarray:
    """Quantize to ``2**bits`` levels with round-half-up, staying in float.

    Used by the camera model and by 8-bit file output so both quantize
    identically.
    """
    if not 1 <= int(bits) <= 16:
        raise ParameterError(f"quantization bits must be in [1, 16], got {bits}")
    levels = (1 << int(bits)) - 1
    scaled = np.asarray(img, dtype=np.float64) * (levels / data_range)
    return np.floor(scaled + 0.5) * (data_range / levels)
