"""Slow, independent reference implementations used only by the tests."""

import itertools

import numpy as np


def convolve_direct(f, taps):
    """O(m n k^2) circular convolution, summing the definition directly."""
    m, n = f.shape
    k = taps.shape[0]
    c = k // 2
    out = np.zeros_like(f, dtype=np.float64)
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for a in range(k):
                for b in range(k):
                    acc += taps[a, b] * f[(i - (a - c)) % m, (j - (b - c)) % n]
            out[i, j] = acc
    return out


def correlate_direct(f, taps):
    """Adjoint of :func:`convolve_direct`."""
    return convolve_direct(f, taps[::-1, ::-1])


def local_variance_loops(f, window):
    m, n = f.shape
    r = window // 2
    out = np.zeros_like(f, dtype=np.float64)
    for i in range(m):
        for j in range(n):
            s = 0.0
            for di in range(-r, r + 1):
                for dj in range(-r, r + 1):
                    s += (f[(i + di) % m, (j + dj) % n] - f[i, j]) ** 2
            out[i, j] = s / window**2
    return out


def sym2x2_eigs(a, b, d):
    """Eigenvalues of [[a, b], [b, d]] from the characteristic polynomial."""
    tr = a + d
    det = a * d - b * b
    disc = np.sqrt(np.maximum(tr * tr / 4 - det, 0.0))
    return tr / 2 + disc, tr / 2 - disc


def prox_grid_search(x, t, step=1e-3):
    """Minimize ``t ||y|| + 0.5 ||y - x||^2`` by nested grid refinement.

    An exhaustive 1e-3 grid is too large in 4-D, so the search starts on a
    coarse grid over a box bracketing the minimizer (which lies on the
    segment from 0 to x) and repeatedly re-centres a finer grid on the best
    node, stopping once the node spacing is below ``step``. The objective is
    strongly convex, so the minimizer stays within one spacing of the best
    node at every level.
    """
    x = np.asarray(x, dtype=np.float64)

    def cost(y):
        return t * np.linalg.norm(y, axis=-1) + 0.5 * np.sum((y - x) ** 2, axis=-1)

    pts = 9 if x.size <= 2 else 5
    center = x / 2
    half = np.abs(x) / 2 + step
    while True:
        axes = [np.linspace(c - h, c + h, pts) for c, h in zip(center, half)]
        nodes = np.array(list(itertools.product(*axes)))
        center = nodes[np.argmin(cost(nodes))]
        spacing = 2 * half / (pts - 1)
        if np.all(spacing < step):
            return center
        half = spacing


def rel_inner_gap(ax, y, x, aty):
    lhs = float(np.vdot(ax, y))
    rhs = float(np.vdot(x, aty))
    return abs(lhs - rhs) / (np.linalg.norm(ax) * np.linalg.norm(y) + 1e-300)
