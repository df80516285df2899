"""Dense 2-D fields, finite-difference operators and proximal primitives.

Conventions
-----------
A scalar field is a float64 array of shape ``(height, width)``. A vector
field is a float64 array of shape ``(2, height, width)`` whose first slice
is the x-component (along columns) and whose second slice is the
y-component (along rows).

The gradient uses forward differences with a zero last column (x) and a
zero last row (y). ``divergence`` is its negative adjoint, so that
``<gradient(u), p> == -<u, divergence(p)>`` up to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

__all__ = [
    "GaussianKernel",
    "as_scalar_field",
    "as_vector_field",
    "check_finite",
    "convolve_gaussian",
    "divergence",
    "gradient",
    "project_box",
    "shrink_vector2",
    "soft_shrink",
]


def as_scalar_field(u, name="field"):
    """Return ``u`` as a 2-D float64 array, validating shape and finiteness."""
    arr = np.asarray(u, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    check_finite(arr, name)
    return arr


def as_vector_field(p, name="vector field"):
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2 or arr.shape[1] < 1 or arr.shape[2] < 1:
        raise ValueError(f"{name} must have shape (2, height, width), got {arr.shape}")
    check_finite(arr, name)
    return arr


def check_finite(arr, name="field"):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


def gradient(u):
    """Forward-difference gradient with Neumann boundary.

    Parameters
    ----------
    u : array_like, shape (H, W)

    Returns
    -------
    ndarray, shape (2, H, W)
        ``[0]`` holds ``u[:, j+1] - u[:, j]`` (zero in the last column),
        ``[1]`` holds ``u[i+1, :] - u[i, :]`` (zero in the last row).
    """
    u = np.asarray(u, dtype=np.float64)
    g = np.zeros((2,) + u.shape)
    g[0, :, :-1] = u[:, 1:] - u[:, :-1]
    g[1, :-1, :] = u[1:, :] - u[:-1, :]
    return g


def divergence(p):
    """Backward-difference divergence, the negative adjoint of `gradient`.

    Entries of ``p`` in the last column (x) or last row (y) are ignored,
    matching the zero rows of the gradient matrix.
    """
    p = np.asarray(p, dtype=np.float64)
    px, py = p[0], p[1]
    h, w = px.shape
    d = np.zeros((h, w))
    if w > 1:
        d[:, 0] = px[:, 0]
        d[:, 1:-1] = px[:, 1:-1] - px[:, :-2]
        d[:, -1] = -px[:, -2]
    if h > 1:
        d[0, :] += py[0, :]
        d[1:-1, :] += py[1:-1, :] - py[:-2, :]
        d[-1, :] += -py[-2, :]
    return d


@dataclass(frozen=True)
class GaussianKernel:
    """Truncated, renormalized 1-D Gaussian used separably in 2-D.

    The default radius is ``ceil(3 * sigma)`` (at least 1).
    """

    sigma: float
    radius: int = 0
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        radius = self.radius or max(1, math.ceil(3.0 * self.sigma))
        if radius < 1:
            raise ValueError("radius must be a positive integer")
        object.__setattr__(self, "radius", int(radius))
        x = np.arange(-radius, radius + 1, dtype=np.float64)
        w = np.exp(-0.5 * (x / self.sigma) ** 2)
        w /= w.sum()
        # exact symmetry regardless of summation order
        w = 0.5 * (w + w[::-1])
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def peak(self):
        """Largest weight of the 2-D separable kernel (the center weight)."""
        c = self.weights[self.radius]
        return float(c * c)

    def operator_sup(self, shape):
        """Largest entry of the padded 2-D convolution matrix on ``shape``.

        With replicate padding, border pixels absorb the weights that fall
        outside the grid, so this can exceed `peak`. It bounds
        ``(G * rho)(x) <= operator_sup * sum(rho)`` for nonnegative ``rho``.
        """
        return float(np.prod([self._sup_1d(n) for n in shape]))

    def _sup_1d(self, n):
        m = np.zeros((n, n))
        for i in range(n):
            for k, wk in zip(range(-self.radius, self.radius + 1), self.weights):
                m[i, min(max(i + k, 0), n - 1)] += wk
        return m.max()


def convolve_gaussian(u, kernel):
    """Separable Gaussian smoothing with replicate padding."""
    u = np.asarray(u, dtype=np.float64)
    w = kernel.weights
    rows_first = ndimage.correlate1d(ndimage.correlate1d(u, w, axis=1, mode="nearest"),
                                     w, axis=0, mode="nearest")
    cols_first = ndimage.correlate1d(ndimage.correlate1d(u, w, axis=0, mode="nearest"),
                                     w, axis=1, mode="nearest")
    # averaging both pass orders makes the result commute with transposition bit for bit
    return 0.5 * (rows_first + cols_first)


def soft_shrink(x, threshold):
    """Soft shrinkage ``S(x | t)``, the prox of ``t * |x|``.

    ``x - t`` where ``x > t``, ``x + t`` where ``x < -t`` and zero
    otherwise. Both arguments broadcast; ``threshold`` must be nonnegative.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(threshold, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("threshold must be nonnegative")
    out = np.where(x > t, x - t, np.where(x < -t, x + t, 0.0))
    return out if out.ndim else float(out)


def shrink_vector2(v, threshold):
    """Isotropic shrinkage of 2-vectors, the prox of ``t * ||v||_2``.

    ``v`` has the vector components on its first axis (length 2).
    """
    v = np.asarray(v, dtype=np.float64)
    t = np.asarray(threshold, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("threshold must be nonnegative")
    norm = np.hypot(v[0], v[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > t, 1.0 - t / np.where(norm > 0, norm, 1.0), 0.0)
    return v * scale


def project_box(u, lo=0.0, hi=1.0):
    """Pixelwise clamp to ``[lo, hi]``."""
    if lo > hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    return np.clip(np.asarray(u, dtype=np.float64), lo, hi)
