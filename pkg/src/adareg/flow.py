"""TV-L1 optical flow with an adaptive weight.

For a flow ``w = (u, v)`` the energy is

    sum lam * |rho(w)| + (1 - lam) * (||grad u||_2 + ||grad v||_2)

with the brightness-constancy residual linearized about ``w0``::

    rho(w) = It + Ix * (u - u0) + Iy * (v - v0)

and ``lam = exp(-|rho| / beta)``. ADMM splits ``y = grad u``,
``z = grad v`` and ``s = rho(w)`` with scaled multipliers ``p, q, r``.
The coupling terms in ``u`` and ``v`` are linearized with a ``tau``
proximal term. Because the data penalty couples ``u`` and ``v``, both are
updated together by a pixelwise 2x2 solve. Large motions are handled
coarse to fine with re-warping on every level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import ndimage

from .admm import ConvergenceTrace, SolverConfig, ensure_finite
from .grid import (GaussianKernel, as_scalar_field, convolve_gaussian, divergence, gradient,
                   shrink_vector2, soft_shrink)
from .weights import compute_lambda

__all__ = [
    "FlowState",
    "LinearizedData",
    "PyramidConfig",
    "angular_error",
    "central_differences",
    "endpoint_error",
    "flow_energy",
    "flow_level",
    "flow_pyramid",
    "linearize",
    "resize_flow",
    "valid_flow_mask",
    "warp_bilinear",
]

MIN_LEVEL_SIZE = 8
UNKNOWN_FLOW = 1e9


def warp_bilinear(img, flow):
    """Sample ``img`` at ``x + flow(x)`` with bilinear interpolation.

    Samples outside the grid take the value of the nearest border pixel.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    coords = [yy + flow[1], xx + flow[0]]
    return ndimage.map_coordinates(img, coords, order=1, mode="nearest")


def central_differences(img):
    """Central differences ``(Ix, Iy)`` with replicated borders."""
    pad = np.pad(img, 1, mode="edge")
    ix = 0.5 * (pad[1:-1, 2:] - pad[1:-1, :-2])
    iy = 0.5 * (pad[2:, 1:-1] - pad[:-2, 1:-1])
    return ix, iy


@dataclass
class LinearizedData:
    It: np.ndarray
    Ix: np.ndarray
    Iy: np.ndarray
    v0: np.ndarray

    def residual(self, u, v):
        """Linearized brightness residual at flow ``(u, v)``."""
        return self.It + self.Ix * (u - self.v0[0]) + self.Iy * (v - self.v0[1])


def linearize(I0, I1, v0):
    """Linearize brightness constancy of ``(I0, I1)`` about the flow ``v0``."""
    I0 = as_scalar_field(I0, "I0")
    I1 = as_scalar_field(I1, "I1")
    if I0.shape != I1.shape or v0.shape != (2,) + I0.shape:
        raise ValueError("frame and flow shapes do not match")
    warped = warp_bilinear(I1, v0)
    ix, iy = central_differences(warped)
    return LinearizedData(It=warped - I0, Ix=ix, Iy=iy, v0=np.array(v0, dtype=np.float64))


@dataclass(frozen=True)
class PyramidConfig:
    """Coarse-to-fine schedule.

    ``levels=None`` picks ``floor(log2(min_side / 16)) + 1`` levels.
    """

    levels: Optional[int] = None
    scale: float = 0.5
    warps_per_level: int = 5
    inner_iters: int = 100

    def __post_init__(self):
        if not 0.0 < self.scale < 1.0:
            raise ValueError("scale must lie in (0, 1)")
        if self.levels is not None and self.levels < 1:
            raise ValueError("levels must be positive")
        if self.warps_per_level < 1 or self.inner_iters < 1:
            raise ValueError("warps_per_level and inner_iters must be positive")

    def level_count(self, shape):
        if self.levels is not None:
            return self.levels
        return max(1, int(math.floor(math.log2(min(shape) / 16.0))) + 1)


@dataclass
class FlowState:
    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    lam: np.ndarray

    @classmethod
    def start(cls, flow, data, lam):
        u, v = flow[0].copy(), flow[1].copy()
        return cls(u=u, v=v, y=gradient(u), z=gradient(v), s=data.residual(u, v),
                   p=np.zeros((2,) + u.shape), q=np.zeros((2,) + u.shape),
                   r=np.zeros(u.shape), lam=lam)

    @property
    def flow(self):
        return np.stack([self.u, self.v])


def flow_energy(u, v, data, lam):
    gu, gv = gradient(u), gradient(v)
    reg = np.hypot(gu[0], gu[1]) + np.hypot(gv[0], gv[1])
    return float(np.sum(lam * np.abs(data.residual(u, v)) + (1.0 - lam) * reg))


def _weight(res, wcfg, static_lambda, shape):
    if static_lambda is not None:
        return np.broadcast_to(np.asarray(static_lambda, dtype=np.float64), shape).copy()
    return compute_lambda(np.abs(res), wcfg)


def flow_level(data, wcfg, scfg, state, inner_iters=None, *, static_lambda=None, trace=None):
    """Run ADMM cycles on one linearization; returns the updated state.

    The state is not modified in place.
    """
    mu, tau = scfg.mu, scfg.tau
    n = inner_iters if inner_iters is not None else scfg.max_iters
    ix, iy = data.Ix, data.Iy
    # rho(w) = b + Ix u + Iy v
    b = data.It - ix * data.v0[0] - iy * data.v0[1]
    gg = ix * ix + iy * iy
    st = replace(state)
    u, v, y, z, s, p, q, r, lam = st.u, st.v, st.y, st.z, st.s, st.p, st.q, st.r, st.lam
    for k in range(n):
        c = b - s + r
        ru = tau * u + mu * divergence(gradient(u) - y + p) - mu * ix * c
        rv = tau * v + mu * divergence(gradient(v) - z + q) - mu * iy * c
        # (tau I + mu g g^T) w = rhs, solved by Sherman-Morrison
        k_ = mu * (ix * ru + iy * rv) / (tau + mu * gg)
        u_new = (ru - ix * k_) / tau
        v_new = (rv - iy * k_) / tau

        gu, gv = gradient(u_new), gradient(v_new)
        y_new = shrink_vector2(gu + p, (1.0 - lam) / mu)
        z_new = shrink_vector2(gv + q, (1.0 - lam) / mu)
        res = b + ix * u_new + iy * v_new
        s_new = soft_shrink(res + r, lam / mu)
        p = p + gu - y_new
        q = q + gv - z_new
        r = r + res - s_new
        ensure_finite(u_new, v_new, p, q, r)

        if trace is not None:
            primal = math.sqrt(np.sum((gu - y_new) ** 2) + np.sum((gv - z_new) ** 2)
                               + np.sum((res - s_new) ** 2))
            dual = mu * math.sqrt(np.sum((y_new - y) ** 2) + np.sum((z_new - z) ** 2)
                                  + np.sum((s_new - s) ** 2))
            energy = flow_energy(u_new, v_new, data, lam)
        lam = _weight(res, wcfg, static_lambda, u.shape)
        if trace is not None:
            trace.append(energy, primal, dual, lam)
        u, v, y, z, s = u_new, v_new, y_new, z_new, s_new
    return FlowState(u=u, v=v, y=y, z=z, s=s, p=p, q=q, r=r, lam=lam)


def _downsample(img, shape, scale):
    sigma = 0.6 * math.sqrt(1.0 / scale ** 2 - 1.0)
    blurred = convolve_gaussian(img, GaussianKernel(sigma))
    return _resample(blurred, shape)


def _resample(img, shape):
    h0, w0 = img.shape
    h1, w1 = shape
    ys = (np.arange(h1) + 0.5) * (h0 / h1) - 0.5
    xs = (np.arange(w1) + 0.5) * (w0 / w1) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return ndimage.map_coordinates(img, [yy, xx], order=1, mode="nearest")


def resize_flow(flow, shape):
    """Bilinearly resize a flow field and rescale its vectors to ``shape``."""
    h0, w0 = flow.shape[1:]
    h1, w1 = shape
    return np.stack([_resample(flow[0], shape) * (w1 / w0),
                     _resample(flow[1], shape) * (h1 / h0)])


def _pyramid_shapes(shape, pcfg):
    if min(shape) < MIN_LEVEL_SIZE:
        raise ValueError(f"image smaller than {MIN_LEVEL_SIZE} pixels on a side")
    shapes = [tuple(shape)]
    for _ in range(pcfg.level_count(shape) - 1):
        h, w = shapes[-1]
        nxt = (int(round(h * pcfg.scale)), int(round(w * pcfg.scale)))
        if min(nxt) < MIN_LEVEL_SIZE:
            raise ValueError(f"coarsest pyramid level would be smaller than {MIN_LEVEL_SIZE} pixels")
        shapes.append(nxt)
    return shapes


def flow_pyramid(I0, I1, wcfg=None, scfg=SolverConfig(), pcfg=PyramidConfig(), *,
                 static_lambda=None):
    """Estimate the flow from ``I0`` to ``I1`` coarse to fine.

    Returns
    -------
    flow : ndarray, shape (2, H, W)
        ``flow[0]`` is the displacement along columns, ``flow[1]`` along rows.
    trace : ConvergenceTrace
        Per inner iteration, concatenated over warps and levels.
    """
    I0 = as_scalar_field(I0, "I0")
    I1 = as_scalar_field(I1, "I1")
    if I0.shape != I1.shape:
        raise ValueError("frames differ in shape")
    if static_lambda is None and wcfg is None:
        raise ValueError("either wcfg or static_lambda is required")
    shapes = _pyramid_shapes(I0.shape, pcfg)
    frames = [(I0, I1)]
    for shp in shapes[1:]:
        a, b = frames[-1]
        frames.append((_downsample(a, shp, pcfg.scale), _downsample(b, shp, pcfg.scale)))

    trace = ConvergenceTrace()
    flow = np.zeros((2,) + shapes[-1])
    for level in range(len(shapes) - 1, -1, -1):
        f0, f1 = frames[level]
        if flow.shape[1:] != f0.shape:
            flow = resize_flow(flow, f0.shape)
        state = None
        for _ in range(pcfg.warps_per_level):
            data = linearize(f0, f1, flow)
            if state is None:
                lam = _weight(data.It, wcfg, static_lambda, f0.shape)
                state = FlowState.start(flow, data, lam)
            else:
                # splits tied to the old linearization restart at the new one
                state.s = data.residual(state.u, state.v)
                state.r = np.zeros_like(state.r)
            state = flow_level(data, wcfg, scfg, state, pcfg.inner_iters,
                               static_lambda=static_lambda, trace=trace)
            flow = state.flow
    return flow, trace


def valid_flow_mask(gt):
    """Pixels whose ground truth is known (finite and below the unknown tag)."""
    gt = np.asarray(gt)
    return np.all(np.isfinite(gt), axis=0) & np.all(np.abs(gt) < UNKNOWN_FLOW, axis=0)


def _select(w, gt, mask):
    w = np.asarray(w, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if w.shape != gt.shape:
        raise ValueError("flow shapes differ")
    valid = valid_flow_mask(gt)
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    return w[:, valid], gt[:, valid]


def endpoint_error(w, gt, mask=None):
    """Mean Euclidean distance between flow vectors, in pixels."""
    a, b = _select(w, gt, mask)
    if a.shape[1] == 0:
        return float("nan")
    return float(np.mean(np.hypot(a[0] - b[0], a[1] - b[1])))


def angular_error(w, gt, mask=None):
    """Mean angle in degrees between ``(u, v, 1)`` and ``(u_gt, v_gt, 1)``."""
    a, b = _select(w, gt, mask)
    if a.shape[1] == 0:
        return float("nan")
    num = a[0] * b[0] + a[1] * b[1] + 1.0
    den = np.sqrt((a[0] ** 2 + a[1] ** 2 + 1.0) * (b[0] ** 2 + b[1] ** 2 + 1.0))
    return float(np.degrees(np.mean(np.arccos(np.clip(num / den, -1.0, 1.0)))))
