"""Image-quality metrics: PSNR and Gaussian-window SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = ["SsimConfig", "psnr", "ssim", "ssim_map", "ssim_window"]


def psnr(u, ref, dynamic_range=1.0):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    u = np.asarray(u, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if u.shape != ref.shape:
        raise ValueError("shape mismatch")
    if not dynamic_range > 0:
        raise ValueError("dynamic_range must be positive")
    mse = np.mean((u - ref) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(dynamic_range ** 2 / mse))


@dataclass(frozen=True)
class SsimConfig:
    window_sigma: float = 1.5
    window_radius: int = 5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    @property
    def size(self):
        return 2 * self.window_radius + 1


def ssim_window(cfg):
    """Normalized 1-D Gaussian window; the 2-D window is its outer product."""
    x = np.arange(-cfg.window_radius, cfg.window_radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / cfg.window_sigma) ** 2)
    return g / g.sum()


def _filter_valid(img, g, r):
    out = ndimage.correlate1d(img, g, axis=0, mode="constant")
    out = ndimage.correlate1d(out, g, axis=1, mode="constant")
    return out[r:-r, r:-r] if r else out


def ssim_map(u, ref, cfg=SsimConfig()):
    """Local SSIM at every position where the whole window fits."""
    u = np.asarray(u, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if u.shape != ref.shape:
        raise ValueError("shape mismatch")
    if min(u.shape) < cfg.size:
        raise ValueError(f"image smaller than the {cfg.size}x{cfg.size} SSIM window")
    g, r = ssim_window(cfg), cfg.window_radius
    c1 = (cfg.k1 * cfg.dynamic_range) ** 2
    c2 = (cfg.k2 * cfg.dynamic_range) ** 2
    mx = _filter_valid(u, g, r)
    my = _filter_valid(ref, g, r)
    sxx = _filter_valid(u * u, g, r) - mx * mx
    syy = _filter_valid(ref * ref, g, r) - my * my
    sxy = _filter_valid(u * ref, g, r) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim(u, ref, cfg=SsimConfig()):
    """Mean structural similarity of ``u`` against ``ref``."""
    return float(np.mean(ssim_map(u, ref, cfg)))
