"""Radiometric model of one projection-capture cycle.

``project`` turns a digital signal into board radiance: the projector adds
gamma-decoded light on top of ambient illumination, and the board/chalk
surface scales it by local reflectance (bare board carries a static
multiplicative grain texture; chalk strokes reflect much more than the
dark board, which is why drawings stay visible through every cycle).

``capture`` is the camera: keystone warp into the camera frame, lens
blur, linear exposure, sensor noise, transfer-curve encoding, and
quantization, optionally followed by marker-based rectification back into
the board frame. ``cycle`` chains the two and returns an image ready to
be projected again.

Default illuminance levels (205 lux ambient, 820 lux projected, and the
2700:700 white-to-color lumen ratio) describe a real desk-scale setup with
a low-end projector. Reflectances are model choices: no measured values
exist for them, so they are picked to give chalk a strong contrast over
the dark board.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .geometry import (
    MarkerLayout,
    camera_yaw_homography,
    detect_markers,
    rectify_homography,
    warp_image,
)
from .metrics import gaussian_kernel1d
from .raster import linear_stretch, nearest_rank_percentile, quantize, to_luma
from .validation import (
    check_image,
    check_in_range,
    check_nonnegative,
    check_positive,
    check_same_shape,
)
from scipy import ndimage

#: Illuminance of the projector beam on the board, lux.
DEFAULT_PROJECTOR_LUX = 820.0
#: Ambient room illuminance on the board, lux.
DEFAULT_AMBIENT_LUX = 205.0
#: Diffuse reflectance of the bare board and of chalk strokes.
DEFAULT_BOARD_REFLECTANCE = 0.15
DEFAULT_CHALK_REFLECTANCE = 0.85
#: Color light output over white light output of a low-end projector.
DEFAULT_CHROMA_RATIO = 700.0 / 2700.0
#: Radiance of a full-white projected signal on the bare board.
WHITE_BOARD_RADIANCE = DEFAULT_BOARD_REFLECTANCE * (
    DEFAULT_AMBIENT_LUX + DEFAULT_PROJECTOR_LUX
)
#: Default exposure scale: full-white board content lands at digital 0.95,
#: leaving headroom so fiducial markers can saturate above all content.
DEFAULT_EXPOSURE_WHITE = WHITE_BOARD_RADIANCE / 0.95
#: Stamped marker radiance relative to the exposure scale, and the
#: detection threshold used during rectification. Content tops out at
#: 0.95, markers clip at 1.0, so 0.975 separates them cleanly.
MARKER_GAIN = 1.25
MARKER_DETECT_THRESHOLD = 0.975


@dataclass(frozen=True)
class ProjectorModel:
    """Projector response: gamma decode, beam illuminance, color output."""

    gamma: float = 2.2
    board_illuminance: float = DEFAULT_PROJECTOR_LUX
    chroma_ratio: float = DEFAULT_CHROMA_RATIO

    def __post_init__(self):
        check_positive(self.gamma, "gamma")
        check_nonnegative(self.board_illuminance, "board_illuminance")
        check_in_range(self.chroma_ratio, 0.0, 1.0, "chroma_ratio", include_lo=False)


@dataclass(frozen=True)
class SceneModel:
    """Board surface and room: ambient light, reflectances, grain texture."""

    ambient_illuminance: float = DEFAULT_AMBIENT_LUX
    board_reflectance: float = DEFAULT_BOARD_REFLECTANCE
    chalk_reflectance: float = DEFAULT_CHALK_REFLECTANCE
    texture_amplitude: float = 0.03
    texture_seed: int = 0

    def __post_init__(self):
        check_nonnegative(self.ambient_illuminance, "ambient_illuminance")
        if not 0.0 < self.board_reflectance < self.chalk_reflectance <= 1.0:
            raise ParameterError(
                "reflectances must satisfy 0 < board < chalk <= 1, got "
                f"board={self.board_reflectance}, chalk={self.chalk_reflectance}"
            )
        check_in_range(self.texture_amplitude, 0.0, 0.5, "texture_amplitude", include_hi=False)


@dataclass(frozen=True)
class CameraModel:
    """Camera geometry and signal chain.

    ``keystone`` is a row-major 9-tuple overriding the perspective warp;
    when ``None`` a trapezoid for a camera yawed by ``keystone_yaw_deg``
    (at a desk-scale distance of ~5.8 board widths) is built per frame
    size. ``exposure_white`` is the radiance that maps to digital 1.0;
    with ``auto_exposure`` it is replaced by the given radiance percentile
    of each captured frame. ``encode_gamma`` is the transfer curve applied
    before quantization, mirroring how real cameras store frames; keep it
    equal to the projector gamma for a tone-neutral loop.
    """

    keystone: tuple[float, ...] | None = None
    keystone_yaw_deg: float = 4.0
    blur_sigma: float = 1.2
    noise_sigma: float = 0.01
    exposure_white: float = DEFAULT_EXPOSURE_WHITE
    auto_exposure: bool = False
    auto_exposure_pct: float = 99.5
    encode_gamma: float = 2.2
    quantization_bits: int = 8
    marker_threshold: float = MARKER_DETECT_THRESHOLD
    seed: int = 0

    def __post_init__(self):
        if self.keystone is not None and len(tuple(self.keystone)) != 9:
            raise ParameterError("keystone must be a row-major 9-tuple or None")
        check_nonnegative(self.blur_sigma, "blur_sigma")
        check_nonnegative(self.noise_sigma, "noise_sigma")
        check_positive(self.exposure_white, "exposure_white")
        check_in_range(self.auto_exposure_pct, 0.0, 100.0, "auto_exposure_pct")
        check_positive(self.encode_gamma, "encode_gamma")
        if not 1 <= int(self.quantization_bits) <= 16:
            raise ParameterError(
                f"quantization_bits must be in [1, 16], got {self.quantization_bits}"
            )
        check_in_range(self.marker_threshold, 0.0, 1.0, "marker_threshold", include_lo=False)

    def keystone_matrix(self, width: int, height: int) -> np.ndarray:
        if self.keystone is not None:
            return np.asarray(self.keystone, dtype=np.float64).reshape(3, 3)
        return camera_yaw_homography(width, height, self.keystone_yaw_deg)


def board_texture(shape: tuple[int, int], scene: SceneModel) -> np.ndarray:
    """Static multiplicative grain of the bare board, zero-mean.

    Regenerated deterministically from ``texture_seed`` so every cycle of
    an experiment sees the same physical surface.
    """
    if scene.texture_amplitude == 0.0:
        return np.zeros(shape)
    rng = np.random.default_rng(scene.texture_seed)
    return scene.texture_amplitude * rng.standard_normal(shape)


def project(
    signal: np.ndarray,
    proj: ProjectorModel,
    scene: SceneModel,
    chalk: np.ndarray | None = None,
) -> np.ndarray:
    """Board radiance produced by projecting ``signal``.

    radiance = rho * (E_ambient + E_projector * signal**gamma), with the
    local reflectance rho blending board (plus grain) and chalk by the
    chalk coverage alpha. Output is unnormalized radiance (lux-scaled),
    shaped like the input; 3-channel signals share one reflectance field.
    """
    sig = check_image(signal, name="signal")
    shape2d = sig.shape[:2]
    rho_board = scene.board_reflectance * (1.0 + board_texture(shape2d, scene))
    if chalk is not None:
        alpha = check_image(chalk, channels=1, name="chalk coverage")
        check_same_shape(alpha, sig if sig.ndim == 2 else sig[..., 0], ("chalk coverage", "signal"))
        rho = (1.0 - alpha) * rho_board + alpha * scene.chalk_reflectance
    else:
        rho = rho_board
    # Texture is zero-mean noise; keep reflectance physical.
    rho = np.clip(rho, 1e-6, 1.0)
    if sig.ndim == 3:
        rho = rho[..., None]
    beam = proj.board_illuminance * np.power(sig, proj.gamma)
    return rho * (scene.ambient_illuminance + beam)


def stamp_markers(
    radiance: np.ndarray,
    layout: MarkerLayout,
    value: float,
) -> np.ndarray:
    """Composite four saturated fiducial disks onto a radiance image.

    Disks sit at the layout's pixel anchors with antialiased edges and are
    rendered as emissive patches (value independent of projected content),
    so rectification works under any illumination the models allow.
    """
    out = np.array(radiance, dtype=np.float64, copy=True)
    h, w = out.shape[:2]
    r = layout.radius_px(w, h)
    for cx, cy in layout.pixel_anchors(w, h):
        x0, x1 = int(math.floor(cx - r - 1)), int(math.ceil(cx + r + 2))
        y0, y1 = int(math.floor(cy - r - 1)), int(math.ceil(cy + r + 2))
        xs = np.arange(max(x0, 0), min(x1, w))
        ys = np.arange(max(y0, 0), min(y1, h))
        dist = np.hypot(xs[None, :] - cx, ys[:, None] - cy)
        cov = np.clip(r + 0.5 - dist, 0.0, 1.0)
        if out.ndim == 3:
            cov = cov[..., None]
        patch = out[ys[0] : ys[-1] + 1, xs[0] : xs[-1] + 1]
        out[ys[0] : ys[-1] + 1, xs[0] : xs[-1] + 1] = patch * (1.0 - cov) + value * cov
    return out


def marker_radiance(cam: CameraModel) -> float:
    """Radiance at which fiducials are stamped for a given camera."""
    return MARKER_GAIN * cam.exposure_white


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, kernel radius ceil(3*sigma), reflect edges.

    The reflected boundary keeps total intensity conserved for the
    normalized kernel.
    """
    if sigma < 0:
        raise ParameterError(f"blur sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return np.asarray(img, dtype=np.float64)
    radius = int(math.ceil(3.0 * sigma))
    k = gaussian_kernel1d(sigma, radius)
    out = ndimage.convolve1d(np.asarray(img, dtype=np.float64), k, axis=0, mode="reflect")
    return ndimage.convolve1d(out, k, axis=1, mode="reflect")


def capture(
    radiance: np.ndarray,
    cam: CameraModel,
    rectify: bool = False,
    markers: MarkerLayout | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Photograph a radiance field and return the digital frame in [0, 1].

    Stage order is fixed: keystone warp, blur, exposure, noise, transfer
    encode, quantization, then (optionally) marker rectification back to
    the board frame. With ``rectify`` the frame must contain the four
    fiducials; detection failures propagate. Deterministic for a fixed
    ``cam.seed`` (or caller-supplied generator).
    """
    rad = np.asarray(radiance, dtype=np.float64)
    if rad.ndim not in (2, 3):
        raise ParameterError(f"radiance must be 2-D or 3-D, got shape {rad.shape}")
    if rad.min() < 0:
        raise ParameterError("radiance must be non-negative")
    h, w = rad.shape[:2]

    key = cam.keystone_matrix(w, h)
    frame = warp_image(rad, key, w, h, fill=0.0)
    frame = gaussian_blur(frame, cam.blur_sigma)

    white = cam.exposure_white
    if cam.auto_exposure:
        white = max(nearest_rank_percentile(frame, cam.auto_exposure_pct), 1e-9)
    digital = np.clip(frame / white, 0.0, 1.0)

    if cam.noise_sigma > 0.0:
        gen = rng if rng is not None else np.random.default_rng(cam.seed)
        digital = digital + cam.noise_sigma * gen.standard_normal(digital.shape)
        digital = np.clip(digital, 0.0, 1.0)

    if cam.encode_gamma != 1.0:
        digital = np.power(digital, 1.0 / cam.encode_gamma)

    digital = quantize(digital, cam.quantization_bits)

    if rectify:
        layout = markers if markers is not None else MarkerLayout()
        luma = to_luma(digital)
        detected = detect_markers(luma, threshold=cam.marker_threshold)
        h_rect = rectify_homography(detected, layout, w, h)
        digital = np.clip(warp_image(digital, h_rect, w, h, fill=0.0), 0.0, 1.0)
    return digital


def attenuate_chroma(signal: np.ndarray, chroma_ratio: float) -> np.ndarray:
    """Shrink per-channel deviation from luma by the projector color ratio."""
    sig = check_image(signal, channels=3, name="signal")
    luma = to_luma(sig)[..., None]
    return np.clip(luma + (sig - luma) * chroma_ratio, 0.0, 1.0)


def cycle(
    signal: np.ndarray,
    proj: ProjectorModel,
    scene: SceneModel,
    cam: CameraModel,
    chalk: np.ndarray | None = None,
    *,
    markers: MarkerLayout | None = None,
    enhance: bool = False,
    stretch_percentiles: tuple[float, float] = (1.0, 99.0),
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """One full project -> capture -> rectify (-> enhance) pass.

    The output is a digital [0, 1] image in the board frame, directly
    usable as the next cycle's input signal. Color signals have their
    chroma attenuated by the projector's color light ratio before
    projection; the reflectance and marker scene is shared across
    channels.
    """
    layout = markers if markers is not None else MarkerLayout()
    sig = check_image(signal, name="signal")
    if sig.ndim == 3:
        sig = attenuate_chroma(sig, proj.chroma_ratio)
    rad = project(sig, proj, scene, chalk)
    rad = stamp_markers(rad, layout, marker_radiance(cam))
    out = capture(rad, cam, rectify=True, markers=layout, rng=rng)
    if enhance:
        out = linear_stretch(out, *stretch_percentiles)
    return out
