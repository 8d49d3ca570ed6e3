"""Image quality metrics: SSIM map, mean SSIM and PSNR."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["SsimConfig", "ssim_map", "mssim", "mssim_color", "psnr", "CSV_FIELDS"]

# Row schema of every benchmark / evaluation CSV.
CSV_FIELDS = (
    "image_id",
    "psf_id",
    "noise_percent",
    "method",
    "mssim",
    "psnr",
    "iterations",
    "wall_time_s",
)


@dataclass(frozen=True)
class SsimConfig:
    window_size: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd, got {self.window_size}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("stabilizers c1, c2 must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def to_dict(self) -> dict:
        return asdict(self)


def _window(cfg: SsimConfig) -> np.ndarray:
    r = cfg.window_size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / cfg.window_sigma) ** 2)
    return k / k.sum()


def _filter_valid(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    # separable weighted mean over every fully contained window
    n = k.size
    rows = sliding_window_view(x, n, axis=1) @ k
    return sliding_window_view(rows, n, axis=0) @ k


def _check_pair(ref, test, cfg):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {test.shape}")
    if ref.ndim != 2 or min(ref.shape) < cfg.window_size:
        raise ValueError(f"images must be 2-D and at least {cfg.window_size} px per side")
    return ref, test


def ssim_map(ref, test, cfg: SsimConfig = SsimConfig()) -> np.ndarray:
    """Gaussian-weighted SSIM over valid windows only.

    The output has shape ``(m - w + 1, n - w + 1)`` for window side ``w``.
    """
    x, y = _check_pair(ref, test, cfg)
    k = _window(cfg)
    mu_x = _filter_valid(x, k)
    mu_y = _filter_valid(y, k)
    sxx = _filter_valid(x * x, k) - mu_x * mu_x
    syy = _filter_valid(y * y, k) - mu_y * mu_y
    sxy = _filter_valid(x * y, k) - mu_x * mu_y
    c1, c2 = cfg.c1, cfg.c2
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return num / den


def mssim(ref, test, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean of :func:`ssim_map`."""
    return float(np.mean(ssim_map(ref, test, cfg)))


def mssim_color(ref, test, cfg: SsimConfig = SsimConfig()) -> float:
    """Per-plane mean SSIM averaged over planes (2-D input is one plane)."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.ndim == 2:
        return mssim(ref, test, cfg)
    if ref.shape != test.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {test.shape}")
    return float(np.mean([mssim(a, b, cfg) for a, b in zip(ref, test)]))


def psnr(ref, test, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical inputs."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {test.shape}")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
