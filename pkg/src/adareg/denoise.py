"""TV denoising with an adaptive data/regularization weight.

Minimizes, for a weight field ``lam`` that is refreshed from the current
residual ``rho = (u - f)^2 / 2``,

    sum lam * (u - f)^2 / 2 + (1 - lam) * (|dx u| + |dy u|)

by linearized ADMM on the splitting ``z = grad u``.
"""

from __future__ import annotations

import numpy as np

from .admm import PRIMAL_TOL, ConvergenceTrace, SolverConfig, ensure_finite, relative_change
from .grid import as_scalar_field, divergence, gradient, soft_shrink
from .weights import compute_lambda

__all__ = ["denoise", "denoise_energy", "denoise_residual"]


def denoise_residual(u, f):
    return 0.5 * (u - f) ** 2


def denoise_energy(u, f, lam):
    """Anisotropic weighted ROF energy of ``u`` for data ``f`` and weight ``lam``."""
    u = np.asarray(u, dtype=np.float64)
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), u.shape)
    g = gradient(u)
    tv = np.abs(g[0]) + np.abs(g[1])
    return float(np.sum(lam * denoise_residual(u, f) + (1.0 - lam) * tv))


def denoise(f, wcfg=None, scfg=SolverConfig(), *, static_lambda=None, callback=None):
    """Denoise ``f`` with adaptive (or static) TV regularization.

    Parameters
    ----------
    f : array_like, shape (H, W)
        Noisy image, nominally in [0, 1].
    wcfg : AdaptiveWeightConfig, optional
        Weight map parameters. Required unless ``static_lambda`` is given.
    scfg : SolverConfig
    static_lambda : float or array_like, optional
        Freeze the weight at this value (scalar or per-pixel) instead of
        updating it from the residual.
    callback : callable, optional
        Called as ``callback(k, u, lam)`` after each iteration.

    Returns
    -------
    u : ndarray
        Reconstruction clamped to [0, 1].
    trace : ConvergenceTrace
    """
    f = as_scalar_field(f, "f")
    if static_lambda is None and wcfg is None:
        raise ValueError("either wcfg or static_lambda is required")
    mu, tau = scfg.mu, scfg.tau

    u = f.copy()
    z = gradient(u)
    y = np.zeros_like(z)
    if static_lambda is not None:
        lam = np.broadcast_to(np.asarray(static_lambda, dtype=np.float64), f.shape).copy()
        if lam.shape != f.shape:
            raise ValueError("static_lambda does not match the image shape")
        if np.any(lam < 0) or np.any(lam > 1):
            raise ValueError("static_lambda must lie in [0, 1]")
    else:
        lam = compute_lambda(denoise_residual(u, f), wcfg)

    trace = ConvergenceTrace()
    for k in range(scfg.max_iters):
        # same as (tau u + lam f + mu div(.)) / (lam + tau), but exact at u = f
        u_new = u + (lam * (f - u) + mu * divergence(gradient(u) - z + y)) / (lam + tau)
        g = gradient(u_new)
        z_new = soft_shrink(g + y, (1.0 - lam) / mu)
        y = y + g - z_new
        ensure_finite(u_new, z_new, y)

        energy = denoise_energy(u_new, f, lam)
        primal = np.linalg.norm(g - z_new)
        dual = mu * np.linalg.norm(z_new - z)
        if static_lambda is None and (k + 1) % scfg.lambda_update_every == 0:
            lam = compute_lambda(denoise_residual(u_new, f), wcfg)
        trace.append(energy, primal, dual, lam)

        change = relative_change(u_new, u)
        u, z = u_new, z_new
        if callback is not None:
            callback(k, u, lam)
        if change < scfg.tol_rel_change and primal <= PRIMAL_TOL * np.sqrt(f.size):
            trace.converged = True
            break

    return np.clip(u, 0.0, 1.0), trace
