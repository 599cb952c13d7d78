"""Image file I/O.

PNG (8-bit gray/RGB) is handled through Pillow; binary PGM (P5) and PPM
(P6) with maxval 255 are written and parsed directly so their bytes are
fully under our control (golden-file tests rely on that). Loading scales
samples by 1/255 into [0, 1]; saving quantizes with round-half-up.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError, ShapeError
from .raster import quantize
from .validation import check_image


def _to_u8(img: np.ndarray) -> np.ndarray:
    arr = check_image(img, data_range=1.0, name="image")
    return (quantize(arr, 8) * 255.0 + 0.5).astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Load an image file as a float array in [0, 1].

    PGM/PPM are parsed natively; anything else is delegated to Pillow and
    converted to 8-bit gray or RGB. Returns ``(H, W)`` or ``(H, W, 3)``.
    """
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".ppm", ".pnm"):
        return _load_pnm(path)
    with Image.open(path) as im:
        if im.mode in ("1", "L", "I", "I;16", "F"):
            im = im.convert("L")
            arr = np.asarray(im, dtype=np.float64)
        else:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64)
    return arr / 255.0


def save_image(path, img: np.ndarray) -> None:
    """Save a [0, 1] float image as 8-bit PNG, PGM, or PPM (by extension)."""
    path = Path(path)
    u8 = _to_u8(img)
    suffix = path.suffix.lower()
    if suffix == ".png":
        mode = "L" if u8.ndim == 2 else "RGB"
        Image.fromarray(u8, mode=mode).save(path, format="PNG")
    elif suffix in (".pgm", ".ppm"):
        _save_pnm(path, u8, suffix)
    else:
        raise ParameterError(f"unsupported output format '{suffix}' (use .png, .pgm or .ppm)")


def _save_pnm(path: Path, u8: np.ndarray, suffix: str) -> None:
    if suffix == ".pgm":
        if u8.ndim != 2:
            raise ShapeError("PGM stores single-channel images; convert to luma first")
        magic = b"P5"
    else:
        if u8.ndim != 3:
            raise ShapeError("PPM stores 3-channel images")
        magic = b"P6"
    h, w = u8.shape[:2]
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    path.write_bytes(header + u8.tobytes())


_PNM_TOKEN = re.compile(rb"(?:\s|^)(?:#[^\n]*\n\s*)*(\S+)")


def _load_pnm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if data[:2] not in (b"P5", b"P6"):
        raise ParameterError(f"{path}: not a binary PGM/PPM file")
    channels = 1 if data[:2] == b"P5" else 3
    # Header: magic, width, height, maxval; '#' comments may appear between tokens.
    pos = 2
    fields = []
    while len(fields) < 3:
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise ParameterError(f"{path}: truncated PNM header")
        fields.append(int(m.group(1)))
        pos = m.end()
    w, h, maxval = fields
    if maxval != 255:
        raise ParameterError(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = w * h * channels
    raw = np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos)
    if raw.size != expected:
        raise ParameterError(f"{path}: expected {expected} sample bytes")
    arr = raw.reshape((h, w) if channels == 1 else (h, w, 3))
    return arr.astype(np.float64) / 255.0
