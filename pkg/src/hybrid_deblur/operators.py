"""Periodic finite differences, circular convolution and their spectra.

Conventions
-----------
* Axis 0 is ``y`` (rows, length ``m``), axis 1 is ``x`` (columns, length ``n``).
* A vector field is a ``(2, m, n)`` array holding ``(dx, dy)``.
* A tensor field is a ``(4, m, n)`` array holding ``(dxx, dxy, dyx, dyy)``.
* Forward DFT is unnormalized, the inverse carries ``1/(m n)`` (numpy default).

Every operator here is linear and shift invariant under periodic boundaries,
so each one is diagonalized by the 2-D DFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Psf",
    "grad",
    "grad_adjoint",
    "hessian",
    "hessian_adjoint",
    "psf_to_spectrum",
    "operator_spectrum",
    "convolve_periodic",
    "convolve_periodic_adjoint",
    "grad_spectra",
    "hessian_spectra",
    "load_psf",
    "save_psf",
]

MASS_TOL = 1e-12


def _fwd(f, axis):
    return np.roll(f, -1, axis=axis) - f


def _bwd(f, axis):
    return f - np.roll(f, 1, axis=axis)


def grad(f: np.ndarray) -> np.ndarray:
    """Forward differences with periodic wrap, stacked as ``(dx, dy)``."""
    f = np.asarray(f, dtype=np.float64)
    return np.stack([_fwd(f, 1), _fwd(f, 0)])


def grad_adjoint(v: np.ndarray) -> np.ndarray:
    """Exact adjoint of :func:`grad`, i.e. the negative periodic divergence."""
    return -(_bwd(v[0], 1) + _bwd(v[1], 0))


def hessian(f: np.ndarray) -> np.ndarray:
    """Second differences ``(dxx, dxy, dyx, dyy)``.

    ``dxx`` and ``dyy`` are backward-of-forward (the centered 3-point
    stencil); the mixed terms are forward-of-forward in both orders, which
    coincide exactly under periodic shifts.
    """
    f = np.asarray(f, dtype=np.float64)
    fx = _fwd(f, 1)
    fy = _fwd(f, 0)
    dxy = _fwd(fx, 0)
    dyx = _fwd(fy, 1)
    return np.stack([_bwd(fx, 1), dxy, dyx, _bwd(fy, 0)])


def hessian_adjoint(w: np.ndarray) -> np.ndarray:
    """Exact adjoint of :func:`hessian`."""
    # F^T = -B, so (B F)^T = B F and (F F)^T = B B.
    out = _bwd(_fwd(w[0], 1), 1)
    out = out + _bwd(_bwd(w[1], 0), 1)
    out = out + _bwd(_bwd(w[2], 1), 0)
    out = out + _bwd(_fwd(w[3], 0), 0)
    return out


@dataclass(frozen=True)
class Psf:
    """Normalized square blur kernel with odd side length.

    ``raw_sum`` keeps the tap sum seen before normalization, for diagnostics.
    """

    taps: np.ndarray
    label: str = ""
    raw_sum: float = 1.0
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1]:
            raise ValueError(f"psf must be square, got shape {taps.shape}")
        if taps.shape[0] % 2 == 0:
            raise ValueError(f"psf side must be odd, got {taps.shape[0]}")
        if not np.all(np.isfinite(taps)) or np.any(taps < 0):
            raise ValueError("psf taps must be finite and non-negative")
        if abs(taps.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"psf taps must sum to 1, got {taps.sum()!r}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def size(self) -> int:
        return self.taps.shape[0]

    @classmethod
    def from_taps(cls, taps, label: str = "", **params) -> "Psf":
        """Normalize arbitrary non-negative taps to unit mass."""
        taps = np.asarray(taps, dtype=np.float64)
        total = float(taps.sum())
        if not np.isfinite(total) or total <= 0:
            raise ValueError(f"psf taps must have positive finite sum, got {total}")
        taps = taps / total
        # one more pass absorbs the rounding of the first division
        taps = taps / taps.sum()
        return cls(taps, label=label, raw_sum=total, params=params)

    @classmethod
    def delta(cls, size: int = 1) -> "Psf":
        taps = np.zeros((size, size))
        taps[size // 2, size // 2] = 1.0
        return cls(taps, label="delta")


def operator_spectrum(stencil, shape, origin=None) -> np.ndarray:
    """Transfer function of a periodic convolution stencil.

    The stencil is zero-padded to ``shape`` and circularly shifted so that
    the tap at ``origin`` (default: ``size // 2`` on each axis) lands on
    pixel ``(0, 0)``; the result is its unnormalized 2-D DFT. No mass
    normalization is applied.
    """
    k = np.atleast_2d(np.asarray(stencil, dtype=np.float64))
    m, n = shape
    if k.shape[0] > m or k.shape[1] > n:
        raise ValueError(f"stencil {k.shape} larger than image {shape}")
    if origin is None:
        origin = (k.shape[0] // 2, k.shape[1] // 2)
    pad = np.zeros((m, n))
    pad[: k.shape[0], : k.shape[1]] = k
    pad = np.roll(pad, (-origin[0], -origin[1]), axis=(0, 1))
    return np.fft.fft2(pad)


def psf_to_spectrum(psf: Psf, shape) -> np.ndarray:
    """Eigenvalues of the periodic blur matrix, centre tap at the origin."""
    if psf.size > min(shape):
        raise ValueError(f"psf of size {psf.size} does not fit image {tuple(shape)}")
    return operator_spectrum(psf.taps, shape)


def convolve_periodic(f: np.ndarray, psf: Psf, spectrum=None) -> np.ndarray:
    """Circular convolution of ``f`` with ``psf`` via the DFT."""
    f = np.asarray(f, dtype=np.float64)
    if spectrum is None:
        spectrum = psf_to_spectrum(psf, f.shape)
    return np.fft.ifft2(np.fft.fft2(f) * spectrum).real


def convolve_periodic_adjoint(f: np.ndarray, psf: Psf, spectrum=None) -> np.ndarray:
    """Adjoint of :func:`convolve_periodic` (correlation with the kernel)."""
    f = np.asarray(f, dtype=np.float64)
    if spectrum is None:
        spectrum = psf_to_spectrum(psf, f.shape)
    return np.fft.ifft2(np.fft.fft2(f) * np.conj(spectrum)).real


def _delta(shape):
    d = np.zeros(shape)
    d[0, 0] = 1.0
    return d


def grad_spectra(shape) -> np.ndarray:
    """Transfer functions of ``(dx, dy)`` read off the impulse response."""
    return np.fft.fft2(grad(_delta(shape)))


def hessian_spectra(shape) -> np.ndarray:
    """Transfer functions of ``(dxx, dxy, dyx, dyy)``."""
    return np.fft.fft2(hessian(_delta(shape)))


def load_psf(path) -> Psf:
    """Read the text kernel format: a ``size`` line then ``size`` rows.

    Taps are normalized to unit mass; the raw sum is kept on the result.
    """
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty psf file")
    try:
        size = int(lines[0].split()[0])
        rows = [[float(t) for t in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if size <= 0 or len(rows) != size or any(len(r) != size for r in rows):
        raise ValueError(f"{path}: expected {size} rows of {size} values")
    return Psf.from_taps(np.array(rows), label=Path(path).stem)


def save_psf(psf: Psf, path) -> None:
    rows = [" ".join(repr(float(t)) for t in row) for row in psf.taps]
    Path(path).write_text(f"{psf.size}\n" + "\n".join(rows) + "\n")
