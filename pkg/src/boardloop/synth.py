"""Deterministic synthetic imagery for experiments and tests.

Real classroom photographs cannot ship with the package, so case studies
run on generated content: line-art "slides" (bright strokes over the gray
of a photographed board), smooth photo-like images with a full tonal
range, luma-preserving colorizations, and chalk stroke layers. Everything
is a pure function of its seed.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .raster import to_luma

_GOLDEN_ANGLE = 2.399963229728653


def _grid(width: int, height: int):
    if width < 1 or height < 1:
        raise ParameterError(f"image dimensions must be positive, got {width}x{height}")
    return np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )


def _segment_distance(xs, ys, p0, p1):
    """Distance from every grid point to the segment p0-p1."""
    vx, vy = p1[0] - p0[0], p1[1] - p0[1]
    seg2 = vx * vx + vy * vy
    if seg2 < 1e-12:
        return np.hypot(xs - p0[0], ys - p0[1])
    t = np.clip(((xs - p0[0]) * vx + (ys - p0[1]) * vy) / seg2, 0.0, 1.0)
    return np.hypot(xs - (p0[0] + t * vx), ys - (p0[1] + t * vy))


def _stroke_coverage(xs, ys, points, thickness):
    """Soft coverage of a polyline with the given stroke thickness."""
    cov = np.zeros_like(xs)
    for p0, p1 in zip(points[:-1], points[1:]):
        d = _segment_distance(xs, ys, p0, p1)
        np.maximum(cov, np.clip(thickness / 2.0 + 0.5 - d, 0.0, 1.0), out=cov)
    return cov


def draw_disk(img: np.ndarray, cx: float, cy: float, radius: float, value: float) -> np.ndarray:
    """Composite an antialiased filled disk onto a copy of ``img``."""
    out = np.array(img, dtype=np.float64, copy=True)
    h, w = out.shape[:2]
    xs, ys = _grid(w, h)
    cov = np.clip(radius + 0.5 - np.hypot(xs - cx, ys - cy), 0.0, 1.0)
    if out.ndim == 3:
        cov = cov[..., None]
    return out * (1.0 - cov) + value * cov


def line_art(
    width: int,
    height: int,
    seed: int = 0,
    background: float = 0.25,
    foreground: float = 0.95,
    strokes: int = 14,
) -> np.ndarray:
    """High-contrast drawing: bright construction lines on board gray.

    The background level mimics a photographed dark board under room
    light rather than a pure-black digital file; the strokes are the
    projected drawing. Content keeps a margin free so fiducials never
    collide with it.
    """
    xs, ys = _grid(width, height)
    rng = np.random.default_rng(seed)
    img = np.full((height, width), float(background))

    inset = 0.16
    x0, x1 = inset * width, (1 - inset) * width
    y0, y1 = inset * height, (1 - inset) * height
    frame = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    cov = _stroke_coverage(xs, ys, frame, thickness=2.0)

    for _ in range(strokes):
        p0 = (rng.uniform(x0, x1), rng.uniform(y0, y1))
        p1 = (rng.uniform(x0, x1), rng.uniform(y0, y1))
        thick = rng.uniform(1.5, 3.5)
        np.maximum(cov, _stroke_coverage(xs, ys, [p0, p1], thick), out=cov)

    # A couple of circle outlines, as in a geometry lecture sketch.
    for _ in range(2):
        cx = rng.uniform(x0 + 0.1 * width, x1 - 0.1 * width)
        cy = rng.uniform(y0 + 0.1 * height, y1 - 0.1 * height)
        r = rng.uniform(0.08, 0.16) * min(width, height)
        ring = np.clip(1.5 - np.abs(np.hypot(xs - cx, ys - cy) - r), 0.0, 1.0)
        np.maximum(cov, ring, out=cov)

    return img * (1.0 - cov) + float(foreground) * cov


def smooth_photo(width: int, height: int, seed: int = 0) -> np.ndarray:
    """Photo-like image: smooth blobs over a diagonal gradient.

    Spans the full tonal range including deep shadows, which is what makes
    photographic content fragile under repeated reprojection.
    """
    xs, ys = _grid(width, height)
    rng = np.random.default_rng(seed)
    img = 0.5 * (xs / max(width - 1, 1)) + 0.3 * (ys / max(height - 1, 1))
    for _ in range(6):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        sx = rng.uniform(0.12, 0.35) * width
        sy = rng.uniform(0.12, 0.35) * height
        amp = rng.uniform(-0.6, 0.6)
        img = img + amp * np.exp(-0.5 * (((xs - cx) / sx) ** 2 + ((ys - cy) / sy) ** 2))
    lo, hi = img.min(), img.max()
    return 0.05 + 0.90 * (img - lo) / max(hi - lo, 1e-9)


def colorize(gray: np.ndarray, seed: int = 0, strength: float = 0.12) -> np.ndarray:
    """Tint a grayscale image while preserving its Rec.601 luma exactly.

    Adds smoothly varying red/blue chroma and compensates green so the
    weighted sum stays put; chroma is scaled down wherever clipping would
    otherwise break the luma identity.
    """
    g = np.asarray(gray, dtype=np.float64)
    if g.ndim != 2:
        raise ParameterError("colorize expects a single-channel image")
    h, w = g.shape
    xs, ys = _grid(w, h)
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0, 2 * np.pi, size=4)
    cr = strength * np.sin(2 * np.pi * xs / w + phase[0]) * np.cos(2 * np.pi * ys / h + phase[1])
    cb = strength * np.cos(2 * np.pi * xs / w + phase[2]) * np.sin(2 * np.pi * ys / h + phase[3])
    cg = -(0.299 * cr + 0.114 * cb) / 0.587

    # Largest per-pixel scale in [0,1] keeping all channels inside [0,1].
    scale = np.ones_like(g)
    for c in (cr, cg, cb):
        room = np.where(c > 0, (1.0 - g) / np.maximum(c, 1e-12), g / np.maximum(-c, 1e-12))
        scale = np.minimum(scale, np.clip(room, 0.0, 1.0))
    rgb = np.stack([g + scale * cr, g + scale * cg, g + scale * cb], axis=-1)
    return np.clip(rgb, 0.0, 1.0)


def chalk_strokes(
    width: int,
    height: int,
    seed: int = 0,
    count: int = 3,
    thickness: float = 4.0,
    coverage: float = 0.9,
) -> np.ndarray:
    """Chalk-layer alpha mask made of a few hand-drawn-looking polylines."""
    xs, ys = _grid(width, height)
    rng = np.random.default_rng(seed)
    alpha = np.zeros((height, width))
    for _ in range(count):
        n = rng.integers(3, 6)
        pts = np.column_stack(
            [rng.uniform(0.2 * width, 0.8 * width, n), rng.uniform(0.2 * height, 0.8 * height, n)]
        )
        cov = _stroke_coverage(xs, ys, list(map(tuple, pts)), thickness)
        np.maximum(alpha, coverage * cov, out=alpha)
    return alpha


def checkerboard(width: int, height: int, period: int = 8) -> np.ndarray:
    """Binary checkerboard, handy for measuring blur-driven contrast loss."""
    xs, ys = _grid(width, height)
    return (((xs // period) + (ys // period)) % 2).astype(np.float64)


def marker_test_board(
    width: int,
    height: int,
    centers,
    radius: float = 6.0,
    content_level: float = 0.4,
    marker_value: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Board with dim content and bright disks at the given (x, y) centers."""
    rng = np.random.default_rng(seed)
    img = content_level * rng.random((height, width))
    for cx, cy in centers:
        img = draw_disk(img, cx, cy, radius, marker_value)
    return img


def content_crop(width: int, height: int, margin_frac: float = 0.06, radius_frac: float = 0.016,
                 pad: int = 8) -> tuple[int, int, int, int]:
    """Rectangle (x, y, w, h) strictly inside the fiducial ring.

    Metric evaluation uses this crop by default so the stamped markers do
    not contaminate similarity scores.
    """
    m = margin_frac * min(width, height)
    r = max(3.0, radius_frac * min(width, height))
    inset = int(np.ceil(m + r + pad))
    w = width - 2 * inset
    h = height - 2 * inset
    if w < 16 or h < 16:
        raise ParameterError(f"image {width}x{height} too small for a content crop")
    return inset, inset, w, h


def reference_by_name(name: str, width: int, height: int, seed: int = 0) -> np.ndarray:
    """Build a named synthetic reference (used by JSON experiment configs)."""
    generators = {
        "line_art": lambda: line_art(width, height, seed=seed),
        "smooth_photo": lambda: smooth_photo(width, height, seed=seed),
        "smooth_photo_color": lambda: colorize(smooth_photo(width, height, seed=seed), seed=seed),
        "checkerboard": lambda: checkerboard(width, height),
    }
    if name not in generators:
        raise ParameterError(
            f"unknown synthetic reference '{name}' (choose from {sorted(generators)})"
        )
    return generators[name]()


def luma_of(img: np.ndarray) -> np.ndarray:
    """Shorthand used by experiment code: grayscale view of any input."""
    return to_luma(img)
