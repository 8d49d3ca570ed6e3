"""Adaptive structure weight and IRLS reweighting maps.

The structure weight ``zeta`` sits in [0, 1): close to 1 on edges and
texture (favoring the first-order term), close to 0 on homogeneous areas
(favoring the second-order term). The IRLS maps ``psi1``/``psi2`` turn the
non-convex ``|.|**nu`` penalties into weighted convex ones around the
current iterate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .operators import grad, hessian

__all__ = [
    "WeightConfig",
    "gaussian_kernel1d",
    "gaussian_smooth",
    "hessian_eigenvalues",
    "local_variance",
    "zeta",
    "irls_weights",
    "grad_magnitude",
    "hessian_magnitude",
]


@dataclass(frozen=True)
class WeightConfig:
    """Tunables for ``zeta`` and the IRLS weights.

    ``kappa``, ``sigma`` and ``eps`` have no canonical values; the defaults
    here are implementation choices. ``psi_mode="global"`` switches to the
    single-scalar reading of the reweighting (``||D f||_1 ** (nu - 1)``).
    """

    kappa: float = 1.0
    sigma: float = 1.0
    window: int = 5
    nu1: float = 0.55
    nu2: float = 0.55
    eps: float = 1e-3
    psi_mode: str = "pixel"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        for name in ("nu1", "nu2"):
            nu = getattr(self, name)
            if not 0 < nu <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {nu}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.psi_mode not in ("pixel", "global"):
            raise ValueError(f"psi_mode must be 'pixel' or 'global', got {self.psi_mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Sampled Gaussian of radius ``ceil(3 sigma)``, normalized to unit mass."""
    radius = max(1, math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(f: np.ndarray, sigma: float) -> np.ndarray:
    """Separable circular Gaussian blur."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    k = gaussian_kernel1d(sigma)
    out = convolve1d(np.asarray(f, dtype=np.float64), k, axis=0, mode="wrap")
    return convolve1d(out, k, axis=1, mode="wrap")


def hessian_eigenvalues(f: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel eigenvalues ``(larger, smaller)`` of the smoothed Hessian."""
    # Periodic differencing and smoothing commute; differencing first keeps
    # the result exactly invariant to a constant offset on integer images.
    h = hessian(f)
    a = gaussian_smooth(h[0], sigma)
    d = gaussian_smooth(h[3], sigma)
    b = gaussian_smooth(0.5 * (h[1] + h[2]), sigma)
    mean = 0.5 * (a + d)
    r = np.hypot(0.5 * (a - d), b)
    return mean + r, mean - r


def local_variance(f: np.ndarray, window: int = 5) -> np.ndarray:
    """Mean squared deviation from the *centre* pixel over a periodic window.

    Note this is not the usual sample variance: deviations are taken from
    ``f(x, y)`` itself, not from the window mean.
    """
    f = np.asarray(f, dtype=np.float64)
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if window > min(f.shape):
        raise ValueError(f"window {window} larger than image {f.shape}")
    r = window // 2
    acc = np.zeros_like(f)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy or dx:
                acc += (np.roll(f, (dy, dx), axis=(0, 1)) - f) ** 2
    return acc / (window * window)


def zeta(f: np.ndarray, cfg: WeightConfig) -> np.ndarray:
    """Structure weight from Hessian eigenvalue spread and local variance."""
    lam1, lam2 = hessian_eigenvalues(f, cfg.sigma)
    rho = local_variance(f, cfg.window)
    lo, hi = rho.min(), rho.max()
    if hi > lo:
        rho_hat = (rho - lo) / (hi - lo)
    else:
        rho_hat = np.zeros_like(rho)
    return 1.0 - 1.0 / (1.0 + cfg.kappa * (lam1 - lam2) * rho_hat)


def grad_magnitude(f: np.ndarray) -> np.ndarray:
    g = grad(f)
    return np.sqrt(g[0] ** 2 + g[1] ** 2)


def hessian_magnitude(f: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(hessian(f) ** 2, axis=0))


def irls_weights(f: np.ndarray, cfg: WeightConfig) -> tuple[np.ndarray, np.ndarray]:
    """Reweighting maps ``psi1``, ``psi2`` linearizing ``|.|**nu`` at ``f``.

    In the default per-pixel mode ``psi = (|.| + eps) ** (nu - 1)`` using the
    isotropic gradient magnitude and the Frobenius norm of the Hessian. In
    ``global`` mode each map is the constant ``(sum |.| + eps) ** (nu - 1)``.
    """
    g1 = grad_magnitude(f)
    g2 = hessian_magnitude(f)
    if cfg.psi_mode == "global":
        g1 = np.full_like(g1, g1.sum())
        g2 = np.full_like(g2, g2.sum())
    psi1 = (g1 + cfg.eps) ** (cfg.nu1 - 1.0)
    psi2 = (g2 + cfg.eps) ** (cfg.nu2 - 1.0)
    return psi1, psi2
