"""Synthetic test scenes: biased noise, two-level phantoms, moving textures.

All generators are pure functions of their arguments. Random draws use
numpy's counter-based Philox bit generator so a seed reproduces the same
field on every platform.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import GaussianKernel, as_scalar_field, convolve_gaussian

__all__ = [
    "BiasedNoiseSpec",
    "NoiseProfile",
    "PhantomShape",
    "SyntheticScene",
    "add_biased_noise",
    "make_piecewise_image",
    "make_texture",
    "make_translation_pair",
    "make_two_level_phantom",
    "make_two_motion_pair",
    "noise_profile",
]


class NoiseProfile(enum.Enum):
    HALF_PLANE_RAMP = "halfplane"
    RADIAL_RAMP = "radial"
    UNIFORM = "uniform"


class PhantomShape(enum.Enum):
    DISK = "disk"
    BLOB = "blob"


@dataclass(frozen=True)
class BiasedNoiseSpec:
    sigma_max: float
    bias_profile: NoiseProfile = NoiseProfile.HALF_PLANE_RAMP
    rng_seed: int = 0

    def __post_init__(self):
        if not self.sigma_max >= 0:
            raise ValueError("sigma_max must be nonnegative")
        object.__setattr__(self, "bias_profile", NoiseProfile(self.bias_profile))


@dataclass
class SyntheticScene:
    clean: np.ndarray
    noisy: np.ndarray
    truth_mask: Optional[np.ndarray] = None
    truth_flow: Optional[np.ndarray] = None

    def __post_init__(self):
        shape = self.clean.shape
        if self.noisy.shape != shape:
            raise ValueError("clean and noisy shapes differ")
        if self.truth_mask is not None and self.truth_mask.shape != shape:
            raise ValueError("mask shape differs from image shape")
        if self.truth_flow is not None and self.truth_flow.shape != (2,) + shape:
            raise ValueError("flow shape differs from image shape")


def _rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def noise_profile(shape, profile):
    """Per-pixel noise scale in [0, 1] for the given profile."""
    h, w = shape
    profile = NoiseProfile(profile)
    if profile is NoiseProfile.UNIFORM:
        return np.ones(shape)
    if profile is NoiseProfile.HALF_PLANE_RAMP:
        ramp = np.arange(w) / max(w - 1, 1)
        return np.broadcast_to(ramp, shape).copy()
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    r = np.hypot(yy - cy, xx - cx)
    rmax = np.hypot(cy, cx)
    return r / rmax if rmax > 0 else np.zeros(shape)


def add_biased_noise(clean, spec):
    """Add zero-mean Gaussian noise whose std varies across the image.

    The std at a pixel is ``spec.sigma_max * profile``, where the profile
    ramps from 0 to 1 left to right (half-plane ramp), center to corners
    (radial ramp), or is constant 1 (uniform). The result is not clamped.
    """
    clean = as_scalar_field(clean, "clean")
    if spec.sigma_max == 0:
        return clean.copy()
    sigma = spec.sigma_max * noise_profile(clean.shape, spec.bias_profile)
    return clean + sigma * _rng(spec.rng_seed).standard_normal(clean.shape)


def make_two_level_phantom(w, h, lo=0.25, hi=0.75, shape=PhantomShape.DISK, radius=None):
    """Image equal to ``hi`` inside a shape and ``lo`` outside.

    The disk is centered with radius ``min(w, h) / 4`` unless given. The blob
    is a fixed union of three disks of relative size.
    """
    if not 0.0 <= lo < hi <= 1.0 and not 0.0 <= hi < lo <= 1.0:
        raise ValueError("levels must be distinct and lie in [0, 1]")
    shape = PhantomShape(shape)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    if shape is PhantomShape.DISK:
        r = radius if radius is not None else min(w, h) / 4.0
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
    else:
        s = min(w, h)
        mask = np.zeros((h, w), dtype=bool)
        for oy, ox, rr in ((0.0, -0.12, 0.18), (-0.1, 0.12, 0.14), (0.14, 0.1, 0.12)):
            mask |= (yy - cy - oy * s) ** 2 + (xx - cx - ox * s) ** 2 <= (rr * s) ** 2
    clean = np.where(mask, hi, lo).astype(np.float64)
    return SyntheticScene(clean=clean, noisy=clean.copy(), truth_mask=mask)


def make_piecewise_image(w, h):
    """Piecewise-smooth test image: a vertical ramp, a bright blob, a gray box."""
    yy = np.mgrid[0:h, 0:w][0] / max(h - 1, 1)
    blob = make_two_level_phantom(w, h, shape=PhantomShape.BLOB).truth_mask
    img = np.where(blob, 0.8, 0.2 + 0.3 * yy)
    img[int(0.16 * h):int(0.39 * h), int(0.62 * w):int(0.9 * w)] = 0.55
    return img


def make_texture(w, h, seed=0, smoothness=1.5):
    """Smooth random texture in [0, 1] (Gaussian-filtered white noise)."""
    noise = _rng(seed).standard_normal((h, w))
    tex = convolve_gaussian(noise, GaussianKernel(smoothness))
    tex -= tex.min()
    return tex / tex.max()


def make_translation_pair(base, t):
    """Frames ``(base, base shifted by t)`` with constant ground-truth flow ``t``.

    ``t = (tx, ty)`` is in pixels along columns and rows. The second frame
    satisfies ``I1(x + t) = I0(x)`` up to border clamping.
    """
    from .flow import warp_bilinear

    base = as_scalar_field(base, "base")
    tx, ty = float(t[0]), float(t[1])
    flow = np.empty((2,) + base.shape)
    flow[0], flow[1] = tx, ty
    second = warp_bilinear(base, -flow)
    return SyntheticScene(clean=base.copy(), noisy=second, truth_flow=flow)


def make_two_motion_pair(base, mask, t_inside, t_outside):
    """Two independently translating layers.

    Pixels of frame 0 inside ``mask`` move by ``t_inside``, the rest by
    ``t_outside``. In frame 1 the moved inside layer is drawn over the
    outside layer, so the outside layer is occluded along the trailing
    edge of the moving region.
    """
    from .flow import warp_bilinear

    base = as_scalar_field(base, "base")
    mask = np.asarray(mask, dtype=bool)
    ti = np.empty((2,) + base.shape)
    ti[0], ti[1] = t_inside
    to = np.empty_like(ti)
    to[0], to[1] = t_outside
    inside = warp_bilinear(base, -ti)
    outside = warp_bilinear(base, -to)
    moved_mask = warp_bilinear(mask.astype(np.float64), -ti) > 0.5
    second = np.where(moved_mask, inside, outside)
    flow = np.where(mask, ti, to)
    return SyntheticScene(clean=base.copy(), noisy=second, truth_mask=mask, truth_flow=flow)
