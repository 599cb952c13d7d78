"""Planar registration: homography estimation, warping, marker detection.

The board is registered through four bright fiducial disks near the frame
corners. Detection thresholds the image, takes connected components inside
an area band, and returns intensity-weighted centroids ordered TL, TR, BR,
BL. A homography mapping those detections onto their known anchor
positions is estimated with the normalized direct linear transform and
applied by inverse-mapped bilinear resampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DetectionError, EstimationError, ParameterError
from .raster import bilinear_sample
from .validation import check_image

#: |det| below this is treated as non-invertible.
_SINGULAR_TOL = 1e-12


def normalize_homography(h: np.ndarray) -> np.ndarray:
    """Scale a 3x3 matrix so its bottom-right entry is 1 (when nonzero)."""
    h = np.asarray(h, dtype=np.float64).reshape(3, 3)
    if abs(h[2, 2]) > _SINGULAR_TOL:
        h = h / h[2, 2]
    return h


def apply_homography(h: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map ``(n, 2)`` points through ``h`` with perspective division."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ones = np.ones((pts.shape[0], 1))
    hom = np.hstack([pts, ones]) @ np.asarray(h, dtype=np.float64).T
    return hom[:, :2] / hom[:, 2:3]


def _hartley_normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity transform: centroid to origin, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    if dist < _SINGULAR_TOL:
        raise EstimationError("correspondence points are coincident")
    s = math.sqrt(2.0) / dist
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def _collinear(p, q, r, tol=1e-9) -> bool:
    area = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    scale = max(abs(q[0] - p[0]), abs(q[1] - p[1]), abs(r[0] - p[0]), abs(r[1] - p[1]), 1.0)
    return abs(area) <= tol * scale * scale


def estimate_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Fit the homography mapping ``src`` points onto ``dst`` points.

    Needs at least four correspondences with no three source points
    collinear. Both point sets are Hartley-normalized before building the
    2n x 9 design matrix; the solution is the right singular vector of the
    smallest singular value. With exactly four points in general position
    the fit is exact; with more it minimizes the algebraic residual.
    Returns a 3x3 matrix normalized so ``h[2, 2] == 1``.
    """
    src = np.atleast_2d(np.asarray(src, dtype=np.float64))
    dst = np.atleast_2d(np.asarray(dst, dtype=np.float64))
    n = src.shape[0]
    if src.shape != dst.shape or src.shape[1] != 2:
        raise EstimationError(
            f"need matching (n, 2) point arrays, got {src.shape} and {dst.shape}"
        )
    if n < 4:
        raise EstimationError(f"need at least 4 correspondences, got {n}")
    if n == 4:
        for i in range(4):
            rest = [j for j in range(4) if j != i]
            if _collinear(src[rest[0]], src[rest[1]], src[rest[2]]):
                raise EstimationError("three of the source points are collinear")

    t_src = _hartley_normalization(src)
    t_dst = _hartley_normalization(dst)
    sn = apply_homography(t_src, src)
    dn = apply_homography(t_dst, dst)

    rows = []
    for (x, y), (u, v) in zip(sn, dn):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
    a = np.asarray(rows)

    _, sing, vt = np.linalg.svd(a)
    if n > 4 and sing[-2] < 1e-10 * max(sing[0], 1.0):
        raise EstimationError("degenerate correspondence configuration")
    hn = vt[-1].reshape(3, 3)
    h = normalize_homography(np.linalg.inv(t_dst) @ hn @ t_src)
    if abs(np.linalg.det(h)) <= _SINGULAR_TOL:
        raise EstimationError("estimated homography is singular")
    return h


def warp_image(
    img: np.ndarray,
    h: np.ndarray,
    out_width: int,
    out_height: int,
    fill: float = 0.0,
) -> np.ndarray:
    """Resample ``img`` under homography ``h`` into an output frame.

    ``h`` maps input coordinates to output coordinates; each output pixel
    pulls its value from ``h^-1 (x, y)`` by bilinear interpolation, taking
    ``fill`` outside the source. Deterministic.
    """
    h = np.asarray(h, dtype=np.float64).reshape(3, 3)
    if abs(np.linalg.det(h)) <= _SINGULAR_TOL:
        raise ParameterError("homography is not invertible")
    hinv = np.linalg.inv(h)
    xs, ys = np.meshgrid(
        np.arange(out_width, dtype=np.float64),
        np.arange(out_height, dtype=np.float64),
    )
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
    sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom
    return bilinear_sample(img, sx, sy, fill)


@dataclass(frozen=True)
class MarkerLayout:
    """Physical marker rectangle plus how it is rendered in simulation.

    The four marker centers form a rectangle of ``physical_width`` x
    ``physical_height`` meters (defaults match a 126 x 85 cm spacing). In
    a W x H raster the centers sit inset from the frame edges by
    ``margin_frac`` of the smaller dimension, ordered TL, TR, BR, BL.
    """

    physical_width: float = 1.26
    physical_height: float = 0.85
    margin_frac: float = 0.06
    radius_frac: float = 0.016

    def __post_init__(self):
        if self.physical_width <= 0 or self.physical_height <= 0:
            raise ParameterError("marker rectangle dimensions must be positive")
        if not 0.0 < self.margin_frac < 0.5:
            raise ParameterError("margin_frac must be in (0, 0.5)")

    @property
    def board_points(self) -> np.ndarray:
        """Corner positions in board meters, ordered TL, TR, BR, BL."""
        w, h = self.physical_width, self.physical_height
        return np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])

    def margin_px(self, width: int, height: int) -> float:
        return self.margin_frac * min(width, height)

    def radius_px(self, width: int, height: int) -> float:
        return max(3.0, self.radius_frac * min(width, height))

    def pixel_anchors(self, width: int, height: int) -> np.ndarray:
        """Marker centers in pixel coordinates, ordered TL, TR, BR, BL."""
        m = self.margin_px(width, height)
        return np.array(
            [
                [m, m],
                [width - 1 - m, m],
                [width - 1 - m, height - 1 - m],
                [m, height - 1 - m],
            ]
        )


def order_corners(points: np.ndarray) -> np.ndarray:
    """Sort four points TL, TR, BR, BL by angle around their centroid."""
    pts = np.asarray(points, dtype=np.float64)
    center = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    # Image y points down, so ascending angle from -pi runs TL, TR, BR, BL.
    return pts[np.argsort(ang)]


def detect_markers(
    img: np.ndarray,
    threshold: float = 0.9,
    *,
    data_range: float = 1.0,
    min_area: int | None = None,
    max_area: int | None = None,
) -> np.ndarray:
    """Locate four bright fiducial disks with sub-pixel precision.

    Pixels above ``threshold * data_range`` are grouped into 8-connected
    components; components outside ``[min_area, max_area]`` are discarded
    (defaults scale with the image so speckle and large content regions
    drop out). Exactly four components must survive, otherwise a
    ``DetectionError`` reporting the count is raised. Returns their
    intensity-weighted centroids as ``(4, 2)`` (x, y) ordered TL, TR, BR,
    BL.
    """
    arr = check_image(img, channels=1, data_range=data_range, name="image")
    h, w = arr.shape
    if min_area is None:
        min_area = max(4, int(2e-5 * h * w))
    if max_area is None:
        max_area = max(min_area + 1, int(0.005 * h * w))

    mask = arr >= threshold * data_range
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        raise DetectionError("expected 4 markers, found 0", found=0)
    areas = ndimage.sum_labels(mask, labels, index=np.arange(1, count + 1))
    keep = [i + 1 for i, a in enumerate(areas) if min_area <= a <= max_area]
    if len(keep) != 4:
        raise DetectionError(
            f"expected 4 markers, found {len(keep)} candidate components "
            f"(threshold {threshold:g}, area band [{min_area}, {max_area}])",
            found=len(keep),
        )
    centroids = ndimage.center_of_mass(arr, labels, keep)  # (row, col) pairs
    pts = np.array([[c, r] for r, c in centroids])
    return order_corners(pts)


def camera_yaw_homography(
    width: int,
    height: int,
    yaw_deg: float,
    distance_ratio: float = 5.77,
) -> np.ndarray:
    """Keystone homography of a camera rotated about the vertical axis.

    Models a pinhole camera at ``distance_ratio`` board-widths from the
    board center whose focal length frames the board exactly when viewed
    head-on. Rotating the board by ``yaw_deg`` produces the trapezoidal
    distortion; the returned matrix maps board-frame pixels to camera-frame
    pixels. ``yaw_deg == 0`` gives the identity.
    """
    if distance_ratio <= 0.5:
        raise ParameterError("distance_ratio must exceed 0.5")
    theta = math.radians(yaw_deg)
    if abs(theta) < 1e-12:
        return np.eye(3)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    corners_px = np.array(
        [[0.0, 0.0], [width - 1.0, 0.0], [width - 1.0, height - 1.0], [0.0, height - 1.0]]
    )
    # Board coordinates in units of board width, origin at the center.
    bx = (corners_px[:, 0] - cx) / width
    by = (corners_px[:, 1] - cy) / width
    rx = bx * math.cos(theta)
    rz = -bx * math.sin(theta)
    denom = distance_ratio - rz
    f = width * distance_ratio
    proj = np.column_stack([f * rx / denom + cx, f * by / denom + cy])
    return estimate_homography(corners_px, proj)


def rectify_homography(
    detected: np.ndarray,
    layout: MarkerLayout,
    width: int,
    height: int,
) -> np.ndarray:
    """Homography sending detected marker points to their board anchors."""
    anchors = layout.pixel_anchors(width, height)
    return estimate_homography(np.asarray(detected, dtype=np.float64), anchors)
