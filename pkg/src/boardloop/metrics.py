"""Full-reference image quality metrics and decay-curve analytics.

The central instrument is the structural similarity index with
Gaussian-weighted local moments (11x11 window, sigma 1.5 by default,
stabilizers k1=0.01, k2=0.03). Local statistics are computed only at
window positions fully inside the image: padding rules change the mean
score, and valid-only is the one rule a brute-force sliding-window
oracle can reproduce bit-for-bit. MSE and PSNR are provided for
comparison, and ``decay_stats`` summarizes a per-cycle SSIM sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError, ShapeError
from .validation import check_image, check_positive, check_same_shape


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over all samples (channels included)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    d = a - b
    return float(np.mean(d * d))


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB: ``10*log10(L^2 / mse)``.

    Identical images have zero error; that case returns ``math.inf``
    rather than a large finite number, so callers can distinguish
    "lossless" from "very good" exactly.
    """
    check_positive(data_range, "data_range")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range * data_range / err)


@dataclass(frozen=True)
class SsimParams:
    """Window and stabilizer settings for :func:`ssim`.

    Defaults follow the common Gaussian-window convention: 11x11 window
    (radius 5), sigma 1.5, k1=0.01, k2=0.03.
    """

    k1: float = 0.01
    k2: float = 0.03
    window_radius: int = 5
    gaussian_sigma: float = 1.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ParameterError("k1 and k2 must be positive")
        if self.window_radius < 1:
            raise ParameterError("window_radius must be >= 1")
        if self.gaussian_sigma <= 0:
            raise ParameterError("gaussian_sigma must be positive")


@dataclass(frozen=True)
class SsimResult:
    """Mean score plus the map of local scores.

    ``raw_map`` holds the local values (can be negative); ``display_map``
    is the same map clamped to [0, 1] for saving as an image.
    """

    mean: float
    raw_map: np.ndarray = field(repr=False)

    @property
    def display_map(self) -> np.ndarray:
        return np.clip(self.raw_map, 0.0, 1.0)


def gaussian_kernel1d(sigma: float, radius: int) -> np.ndarray:
    """Normalized 1-D Gaussian taps on ``[-radius, radius]``."""
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _valid_sepconv(img: np.ndarray, kernel: np.ndarray, radius: int) -> np.ndarray:
    # Separable correlation keeping only fully-covered positions. The
    # boundary mode is irrelevant because padded lanes are cropped away.
    out = ndimage.convolve1d(img, kernel, axis=1, mode="constant")
    out = ndimage.convolve1d(out, kernel, axis=0, mode="constant")
    return out[radius:-radius, radius:-radius]


def ssim(
    a: np.ndarray,
    ref: np.ndarray,
    params: SsimParams | None = None,
    data_range: float = 1.0,
) -> SsimResult:
    """Structural similarity of ``a`` against reference ``ref``.

    Both images must be single-channel and at least as large as the
    window (convert color inputs with ``to_luma`` first). Local means,
    variances and covariance are Gaussian-weighted; the local score is

        ((2*mu_a*mu_r + C1) * (2*cov + C2))
        / ((mu_a^2 + mu_r^2 + C1) * (var_a + var_r + C2))

    with C1=(k1*L)^2, C2=(k2*L)^2, and the mean is taken over all valid
    window positions. Deterministic; symmetric in its two arguments.
    """
    p = params or SsimParams()
    a = check_image(a, channels=1, data_range=data_range, name="image")
    ref = check_image(ref, channels=1, data_range=data_range, name="reference")
    check_same_shape(a, ref, ("image", "reference"))
    radius = p.window_radius
    side = 2 * radius + 1
    if a.shape[0] < side or a.shape[1] < side:
        raise ParameterError(
            f"image {a.shape} is smaller than the {side}x{side} window"
        )

    c1 = (p.k1 * data_range) ** 2
    c2 = (p.k2 * data_range) ** 2
    kern = gaussian_kernel1d(p.gaussian_sigma, radius)

    mu_a = _valid_sepconv(a, kern, radius)
    mu_r = _valid_sepconv(ref, kern, radius)
    # E[x^2] - E[x]^2, clamping float-negative variances of constant patches.
    var_a = np.maximum(_valid_sepconv(a * a, kern, radius) - mu_a * mu_a, 0.0)
    var_r = np.maximum(_valid_sepconv(ref * ref, kern, radius) - mu_r * mu_r, 0.0)
    cov = _valid_sepconv(a * ref, kern, radius) - mu_a * mu_r

    raw = ((2.0 * mu_a * mu_r + c1) * (2.0 * cov + c2)) / (
        (mu_a * mu_a + mu_r * mu_r + c1) * (var_a + var_r + c2)
    )
    return SsimResult(mean=float(raw.mean()), raw_map=raw)


def falsecolor_composite(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Overlay two grayscale images in different color bands.

    Channel assignment is R=a, G=b, B=a: where the inputs agree the pixel
    is gray; where ``a`` dominates it is magenta, where ``b`` dominates,
    green.
    """
    a = check_image(a, channels=1, name="first image")
    b = check_image(b, channels=1, name="second image")
    check_same_shape(a, b)
    return np.stack([a, b, a], axis=-1)


@dataclass(frozen=True)
class DecayStats:
    """Summary of an SSIM-versus-cycle sequence.

    Cycle 0 is the reference compared with itself (similarity 1.0), so
    ``values[0]`` is cycle 1 and drops are differences from the previous
    cycle starting at 1.0. ``threshold_cycle`` is filled in when the
    summary was built with a threshold.
    """

    values: tuple[float, ...]
    non_increasing: bool
    first_drop: float
    largest_drop_index: int
    threshold: float | None = None
    threshold_cycle: int | None = None

    @property
    def drops(self) -> tuple[float, ...]:
        prev = (1.0,) + self.values[:-1]
        return tuple(p - v for p, v in zip(prev, self.values))

    def cycles_to_threshold(self, threshold: float) -> int | None:
        """Smallest cycle number whose value is below ``threshold``."""
        for i, v in enumerate(self.values):
            if v < threshold:
                return i + 1
        return None


def decay_stats(values, threshold: float | None = None) -> DecayStats:
    """Summarize a per-cycle similarity sequence.

    ``values`` must be non-empty with entries in [-1, 1]; an implicit 1.0
    at cycle 0 anchors the first drop.
    """
    vals = tuple(float(v) for v in np.asarray(values, dtype=np.float64).ravel())
    if not vals:
        raise ParameterError("similarity sequence is empty")
    if any(not (-1.0 - 1e-12 <= v <= 1.0 + 1e-12) for v in vals):
        raise ParameterError("similarity values must lie in [-1, 1]")
    prev = (1.0,) + vals[:-1]
    drops = [p - v for p, v in zip(prev, vals)]
    threshold_cycle = None
    if threshold is not None:
        threshold_cycle = next(
            (i + 1 for i, v in enumerate(vals) if v < threshold), None
        )
    return DecayStats(
        values=vals,
        non_increasing=all(d >= 0.0 for d in drops),
        first_drop=1.0 - vals[0],
        largest_drop_index=int(np.argmax(drops)) + 1,
        threshold=threshold,
        threshold_cycle=threshold_cycle,
    )


def ssim_sliding_oracle(
    a: np.ndarray,
    ref: np.ndarray,
    params: SsimParams | None = None,
    data_range: float = 1.0,
) -> float:
    """Brute-force reference implementation of :func:`ssim`.

    Walks every valid window position and computes the weighted moments
    per window. Quadratic and slow; exists so the fast separable path can
    be checked against an independent formulation.
    """
    p = params or SsimParams()
    a = np.asarray(a, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if a.shape != ref.shape:
        raise ShapeError("oracle inputs must share a shape")
    r = p.window_radius
    k1d = gaussian_kernel1d(p.gaussian_sigma, r)
    w = np.outer(k1d, k1d)
    c1 = (p.k1 * data_range) ** 2
    c2 = (p.k2 * data_range) ** 2
    h, wid = a.shape
    scores = []
    for y in range(r, h - r):
        for x in range(r, wid - r):
            pa = a[y - r : y + r + 1, x - r : x + r + 1]
            pr = ref[y - r : y + r + 1, x - r : x + r + 1]
            mu_a = float((w * pa).sum())
            mu_r = float((w * pr).sum())
            var_a = max(float((w * pa * pa).sum()) - mu_a * mu_a, 0.0)
            var_r = max(float((w * pr * pr).sum()) - mu_r * mu_r, 0.0)
            cov = float((w * pa * pr).sum()) - mu_a * mu_r
            scores.append(
                ((2 * mu_a * mu_r + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_r**2 + c1) * (var_a + var_r + c2))
            )
    return float(np.mean(scores))
