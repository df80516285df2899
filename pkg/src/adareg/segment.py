"""Two-phase piecewise-constant segmentation with an adaptive weight.

A relaxed indicator ``u`` in [0, 1] minimizes

    sum lam * ((f - c1)^2 * u + (f - c2)^2 * (1 - u)) + (1 - lam) * |grad u|_1

alternating with closed-form region means ``c1``, ``c2``. The weight is
``lam = exp(-rho / beta)`` on the region misfit ``rho``. The final mask
thresholds ``u`` at ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admm import PRIMAL_TOL, ConvergenceTrace, SolverConfig, ensure_finite, relative_change
from .grid import as_scalar_field, divergence, gradient, project_box, soft_shrink
from .weights import compute_lambda

__all__ = [
    "DegenerateRegionError",
    "SegmentResult",
    "estimate_means",
    "f_measure",
    "region_misfit",
    "segment",
    "segment_energy",
]


class DegenerateRegionError(ValueError):
    """One of the two regions is empty, or the regions cannot be told apart."""


@dataclass
class SegmentResult:
    mask: np.ndarray
    u: np.ndarray
    c1: float
    c2: float
    trace: ConvergenceTrace
    lam: np.ndarray


def estimate_means(f, u):
    """Region means ``c1 = sum(f u) / sum(u)``, ``c2 = sum(f (1-u)) / sum(1-u)``."""
    f = np.asarray(f, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    a, b = u.sum(), (1.0 - u).sum()
    tiny = 1e-9 * u.size
    if a <= tiny or b <= tiny:
        raise DegenerateRegionError("one region is empty")
    return float((f * u).sum() / a), float((f * (1.0 - u)).sum() / b)


def region_misfit(f, u, c1, c2):
    """Pointwise residual ``(f - c1)^2 u + (f - c2)^2 (1 - u)``."""
    return (f - c1) ** 2 * u + (f - c2) ** 2 * (1.0 - u)


def segment_energy(u, f, lam, c1, c2):
    """Relaxed energy with the u-independent term dropped.

    ``sum lam * q * u + (1 - lam) * (|dx u| + |dy u|)`` with
    ``q = (f - c1)^2 - (f - c2)^2``.
    """
    u = np.asarray(u, dtype=np.float64)
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), u.shape)
    q = (f - c1) ** 2 - (f - c2) ** 2
    g = gradient(u)
    return float(np.sum(lam * q * u + (1.0 - lam) * (np.abs(g[0]) + np.abs(g[1]))))


def segment(f, wcfg=None, scfg=SolverConfig(), theta=0.5, *, static_lambda=None,
            means=None, callback=None):
    """Segment ``f`` into two regions.

    Parameters
    ----------
    f : array_like, shape (H, W)
    wcfg : AdaptiveWeightConfig, optional
        Required unless ``static_lambda`` is given.
    scfg : SolverConfig
    theta : float
        Threshold on the relaxed indicator, ``0 < theta < 1``.
    static_lambda : float or array_like, optional
        Freeze the weight instead of updating it from the misfit.
    means : (float, float), optional
        Freeze ``(c1, c2)`` instead of re-estimating them each iteration.
    callback : callable, optional
        Called as ``callback(k, u, lam)`` after each iteration.

    Raises
    ------
    DegenerateRegionError
        If ``f`` is constant or the initial indicator leaves a region empty.
    """
    f = as_scalar_field(f, "f")
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if static_lambda is None and wcfg is None:
        raise ValueError("either wcfg or static_lambda is required")
    lo, hi = f.min(), f.max()
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        raise DegenerateRegionError("input image is constant")
    mu, tau = scfg.mu, scfg.tau

    u = (f - lo) / (hi - lo)
    z = gradient(u)
    y = np.zeros_like(z)
    c1, c2 = means if means is not None else estimate_means(f, u)
    if static_lambda is not None:
        lam = np.broadcast_to(np.asarray(static_lambda, dtype=np.float64), f.shape).copy()
        if np.any(lam < 0) or np.any(lam > 1):
            raise ValueError("static_lambda must lie in [0, 1]")
    else:
        lam = compute_lambda(region_misfit(f, u, c1, c2), wcfg)

    trace = ConvergenceTrace()
    for k in range(scfg.max_iters):
        if means is None and k > 0:
            try:
                c1, c2 = estimate_means(f, u)
            except DegenerateRegionError:
                trace.warnings.append(f"iteration {k + 1}: degenerate region, means kept")
        q = (f - c1) ** 2 - (f - c2) ** 2
        u_new = project_box(u - (lam / tau) * q + (mu / tau) * divergence(gradient(u) - z + y))
        g = gradient(u_new)
        z_new = soft_shrink(g + y, (1.0 - lam) / mu)
        y = y + g - z_new
        ensure_finite(u_new, z_new, y)

        energy = segment_energy(u_new, f, lam, c1, c2)
        primal = np.linalg.norm(g - z_new)
        dual = mu * np.linalg.norm(z_new - z)
        if static_lambda is None and (k + 1) % scfg.lambda_update_every == 0:
            lam = compute_lambda(region_misfit(f, u_new, c1, c2), wcfg)
        trace.append(energy, primal, dual, lam)

        change = relative_change(u_new, u)
        u, z = u_new, z_new
        if callback is not None:
            callback(k, u, lam)
        if change < scfg.tol_rel_change and primal <= PRIMAL_TOL * np.sqrt(f.size):
            trace.converged = True
            break

    return SegmentResult(mask=u > theta, u=u, c1=c1, c2=c2, trace=trace, lam=lam)


def f_measure(mask, truth):
    """Harmonic mean of precision and recall of ``mask`` against ``truth``."""
    mask = np.asarray(mask, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if mask.shape != truth.shape:
        raise ValueError("shape mismatch")
    tp = np.count_nonzero(mask & truth)
    fp = np.count_nonzero(mask & ~truth)
    fn = np.count_nonzero(~mask & truth)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)
