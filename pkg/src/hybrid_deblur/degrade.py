"""Forward-model simulation: kernels, blur + Gaussian noise, test images."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .operators import Psf, convolve_periodic
from .weights import gaussian_smooth

__all__ = [
    "NoiseSpec",
    "make_psf",
    "standard_psfs",
    "parse_psf_spec",
    "noise_sigma",
    "degrade",
    "synthetic_image",
    "RNG_NAME",
]

RNG_NAME = "numpy.random.PCG64"
_SUPERSAMPLE = 16


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise; ``level_percent`` is relative to 255 gray levels."""

    level_percent: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.level_percent < 0:
            raise ValueError(f"noise level must be non-negative, got {self.level_percent}")

    @property
    def sigma(self) -> float:
        return noise_sigma(self.level_percent)

    def to_dict(self) -> dict:
        return {**asdict(self), "sigma": self.sigma, "generator": RNG_NAME}


def noise_sigma(level_percent: float) -> float:
    """Noise standard deviation in gray levels for an ``n%`` level."""
    return level_percent / 100.0 * 255.0


def _grid(size):
    c = size // 2
    return np.arange(size, dtype=np.float64) - c


def _subpixel_grid(size):
    # cell centres of an s x s subdivision of every kernel pixel
    s = _SUPERSAMPLE
    off = (np.arange(s) + 0.5) / s - 0.5
    g = (_grid(size)[:, None] + off[None, :]).ravel()
    return np.meshgrid(g, g, indexing="ij")


def _coverage(mask, size):
    s = _SUPERSAMPLE
    return mask.reshape(size, s, size, s).mean(axis=(1, 3))


def make_psf(kind: str, size: int = 13, **params) -> Psf:
    """Synthesize a normalized square kernel.

    Parameters
    ----------
    kind : {"gaussian", "motion", "disk", "delta"}
    size : int
        Odd kernel side.
    **params
        ``std`` for gaussian; ``length`` and ``angle`` (degrees,
        counter-clockwise from +x) for motion; ``radius`` for disk.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"psf size must be odd and positive, got {size}")
    if kind == "gaussian":
        std = float(params.get("std", 2.0))
        if std <= 0:
            raise ValueError(f"gaussian std must be positive, got {std}")
        y, x = np.meshgrid(_grid(size), _grid(size), indexing="ij")
        taps = np.exp(-(x * x + y * y) / (2 * std * std))
        params = {"std": std}
    elif kind == "motion":
        length = float(params.get("length", 9.0))
        angle = float(params.get("angle", 0.0))
        if length < 1:
            raise ValueError(f"motion length must be >= 1, got {length}")
        rows, cols = _subpixel_grid(size)
        t = math.radians(angle)
        # rows grow downwards, so the +y direction is -row
        along = cols * math.cos(t) - rows * math.sin(t)
        across = cols * math.sin(t) + rows * math.cos(t)
        mask = (np.abs(along) <= length / 2) & (np.abs(across) <= 0.5)
        taps = _coverage(mask.astype(np.float64), size)
        params = {"length": length, "angle": angle}
    elif kind == "disk":
        radius = float(params.get("radius", 4.0))
        if radius <= 0:
            raise ValueError(f"disk radius must be positive, got {radius}")
        rows, cols = _subpixel_grid(size)
        taps = _coverage((rows * rows + cols * cols <= radius * radius).astype(np.float64), size)
        params = {"radius": radius}
    elif kind == "delta":
        taps = np.zeros((size, size))
        taps[size // 2, size // 2] = 1.0
        params = {}
    else:
        raise ValueError(f"unknown psf kind {kind!r}")
    if taps.sum() <= 0:
        raise ValueError(f"{kind} psf with {params} covers no pixel")
    return Psf.from_taps(taps, label=kind, kind=kind, size=size, **params)


def standard_psfs(size: int = 13) -> dict[str, Psf]:
    """The three benchmark kernels, keyed ``"1"``, ``"2"``, ``"3"``."""
    return {
        "1": make_psf("gaussian", size, std=2.0),
        "2": make_psf("motion", size, length=9, angle=45),
        "3": make_psf("disk", size, radius=4),
    }


def parse_psf_spec(spec: str) -> Psf:
    """Build a kernel from ``kind[:size][,key=value...]``, e.g. ``motion:13,length=9,angle=45``.

    ``"1"``, ``"2"`` and ``"3"`` name the standard benchmark kernels.
    """
    spec = spec.strip()
    if spec in ("1", "2", "3"):
        return standard_psfs()[spec]
    head, *rest = spec.split(",")
    kind, _, size = head.partition(":")
    kwargs = {}
    for item in rest:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"bad psf parameter {item!r} in {spec!r}")
        kwargs[key.strip()] = float(value)
    return make_psf(kind.strip(), int(size) if size else 13, **kwargs)


def degrade(f, psf: Psf, noise: NoiseSpec = NoiseSpec()) -> np.ndarray:
    """Blur ``f`` circularly and add seeded Gaussian noise. No clamping."""
    g = convolve_periodic(f, psf)
    if noise.level_percent > 0:
        rng = np.random.default_rng(noise.seed)
        g = g + noise.sigma * rng.standard_normal(g.shape)
    return g


def _smoothstep_disk(yy, xx, cy, cx, r, soft=0.0):
    d = np.hypot(yy - cy, xx - cx)
    if soft <= 0:
        return (d <= r).astype(np.float64)
    return np.clip((r - d) / soft + 0.5, 0.0, 1.0)


def synthetic_image(kind: str, size: int = 128, seed: int = 0) -> np.ndarray:
    """Deterministic gray-level test scenes in [0, 255].

    ``"cells"``
        Dark background with bright, smoothly shaded blobs and a few sharp
        point-like spots, loosely resembling fluorescence microscopy.
    ``"terrain"``
        Piecewise regions with smooth ramps, stripes and sharp boundaries,
        loosely resembling a remote-sensing tile.
    ``"step"``
        Vertical step edge (60 | 190) through the middle.
    ``"shapes"``
        Piecewise-constant rectangles and disks on a flat background.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(size, dtype=np.float64), np.arange(size, dtype=np.float64), indexing="ij")
    s = size / 128.0
    if kind == "step":
        img = np.full((size, size), 60.0)
        img[:, size // 2 :] = 190.0
        return img
    if kind == "shapes":
        img = np.full((size, size), 50.0)
        img[int(20 * s) : int(60 * s), int(15 * s) : int(70 * s)] = 200.0
        img += 90.0 * _smoothstep_disk(yy, xx, 85 * s, 80 * s, 25 * s)
        img[int(75 * s) : int(110 * s), int(20 * s) : int(45 * s)] = 130.0
        return np.clip(img, 0, 255)
    if kind == "cells":
        img = np.full((size, size), 8.0)
        for _ in range(9):
            cy, cx = rng.uniform(12 * s, 116 * s, 2)
            r = rng.uniform(6, 16) * s
            peak = rng.uniform(120, 230)
            d2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / (r * r)
            body = np.clip(1.0 - d2, 0.0, None) ** 0.5
            img += peak * body
        for _ in range(12):
            cy, cx = rng.uniform(4 * s, 124 * s, 2)
            img += rng.uniform(80, 200) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 0.8**2))
        return np.clip(img, 0, 255)
    if kind == "terrain":
        img = 70.0 + 50.0 * (xx / size) + 30.0 * np.sin(2 * np.pi * yy / (60 * s))
        field = (yy - 0.6 * xx) > 30 * s
        img = np.where(field, 150.0 + 25.0 * np.sin(2 * np.pi * (xx + yy) / (9 * s)), img)
        img += 70.0 * _smoothstep_disk(yy, xx, 35 * s, 90 * s, 18 * s)
        road = np.abs(yy - 0.25 * xx - 90 * s) < 2.5 * s
        img = np.where(road, 230.0, img)
        img[int(95 * s) : int(120 * s), int(90 * s) : int(118 * s)] = 20.0
        # spatially correlated texture (smoothed white noise, ~6 gray levels rms)
        tex = gaussian_smooth(rng.standard_normal(img.shape), 1.5)
        img += 6.0 * tex / tex.std()
        return np.clip(img, 0, 255)
    raise ValueError(f"unknown synthetic image kind {kind!r}")
