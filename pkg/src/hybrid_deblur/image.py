"""Pixel grids and PGM/PPM file I/O.

Images are plain ``float64`` numpy arrays in gray levels (nominal range
[0, 255]). A single plane has shape ``(height, width)``; a color image is a
stack of 1 or 3 planes with shape ``(planes, height, width)``.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

__all__ = [
    "PnmFormatError",
    "as_image",
    "as_color",
    "clamp",
    "round_half_away",
    "load_pnm",
    "save_pnm",
]

MIN_SIDE = 3


class PnmFormatError(ValueError):
    """Raised when a PGM/PPM file is malformed."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def as_image(data, name: str = "image") -> np.ndarray:
    """Validate and return a single plane as a float64 array."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {img.shape}")
    if min(img.shape) < MIN_SIDE:
        raise ValueError(f"{name} must be at least {MIN_SIDE}x{MIN_SIDE}, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name} contains non-finite values")
    return img


def as_color(data, name: str = "image") -> np.ndarray:
    """Return ``data`` as a ``(planes, h, w)`` stack; 2-D input becomes 1 plane."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim == 2:
        img = img[None]
    if img.ndim != 3 or img.shape[0] not in (1, 3):
        raise ValueError(f"{name} must have 1 or 3 planes, got shape {img.shape}")
    return img


def clamp(img, lo: float = 0.0, hi: float = 255.0) -> np.ndarray:
    """Project every pixel onto the box ``[lo, hi]``."""
    if lo > hi:
        raise ValueError(f"empty box: lo={lo} > hi={hi}")
    return np.clip(np.asarray(img, dtype=np.float64), lo, hi)


def round_half_away(x) -> np.ndarray:
    # np.round is half-to-even; files need half-away-from-zero.
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _tokens(buf: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping comments."""
    out = []
    n = len(buf)
    while len(out) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            break
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        out.append(buf[start:pos])
    return out, pos


def _parse_int(tok: bytes, field: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise PnmFormatError(field, f"not an integer: {tok!r}") from None


def parse_pnm(buf: bytes) -> np.ndarray:
    """Decode PGM/PPM bytes to a ``(planes, h, w)`` float64 stack."""
    toks, pos = _tokens(buf, 4, 0)
    if not toks:
        raise PnmFormatError("magic", "empty file")
    magic = toks[0]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise PnmFormatError("magic", f"unsupported magic number {magic!r}")
    if len(toks) < 4:
        missing = ("width", "height", "maxval")[len(toks) - 1]
        raise PnmFormatError(missing, "header truncated")
    width = _parse_int(toks[1], "width")
    height = _parse_int(toks[2], "height")
    maxval = _parse_int(toks[3], "maxval")
    if width <= 0:
        raise PnmFormatError("width", f"must be positive, got {width}")
    if height <= 0:
        raise PnmFormatError("height", f"must be positive, got {height}")
    if maxval != 255:
        raise PnmFormatError("maxval", f"only 255 is supported, got {maxval}")

    planes = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * planes
    if magic in (b"P5", b"P6"):
        # exactly one whitespace byte separates header and raster
        pos += 1
        raster = buf[pos : pos + count]
        if len(raster) < count:
            raise PnmFormatError("payload", f"expected {count} bytes, got {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        fields = buf[pos:].split()
        if len(fields) < count:
            raise PnmFormatError("payload", f"expected {count} samples, got {len(fields)}")
        try:
            values = np.array([int(t) for t in fields[:count]], dtype=np.float64)
        except ValueError:
            raise PnmFormatError("payload", "non-integer sample") from None
        if values.min() < 0 or values.max() > maxval:
            raise PnmFormatError("payload", "sample outside [0, maxval]")
    return values.reshape(height, width, planes).transpose(2, 0, 1).copy()


def load_pnm(path) -> np.ndarray:
    """Load a PGM (1 plane) or PPM (3 planes) file with maxval 255.

    Returns
    -------
    ndarray
        ``(planes, height, width)`` float64 array with values in [0, 255].
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    try:
        return parse_pnm(buf)
    except PnmFormatError as exc:
        raise PnmFormatError(exc.field, f"{exc.args[0]} ({path})") from None


def encode_pnm(img) -> bytes:
    img = as_color(img)
    planes, h, w = img.shape
    raster = np.clip(round_half_away(img), 0, 255).astype(np.uint8)
    magic = b"P5" if planes == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (w, h)
    return header + raster.transpose(1, 2, 0).tobytes()


def save_pnm(img, path) -> None:
    """Write a 1-plane image as binary PGM or a 3-plane image as binary PPM.

    Values are rounded half away from zero and clamped to [0, 255].
    """
    data = encode_pnm(img)
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write image: {exc.strerror}", os.fspath(path)) from exc
