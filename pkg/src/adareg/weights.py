"""Spatially adaptive regularization weight.

The weight trades data fidelity against regularization pixel by pixel::

    lam = exp(-rho / beta)                         (plain)
    lam = (1 - eps) * exp(-(G * rho) / beta)       (smoothed)

where ``rho`` is the pointwise residual of the current iterate. Pixels
that fit the model well keep ``lam`` close to one (little smoothing);
pixels with a large residual get a small ``lam`` and are regularized more.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .grid import GaussianKernel, convolve_gaussian

__all__ = [
    "AdaptiveWeightConfig",
    "InvalidResidualError",
    "InvalidWeightError",
    "WeightMode",
    "WeightStats",
    "compute_lambda",
    "entropy_penalty",
    "lambda_lower_bound",
    "weight_stats",
]


class InvalidResidualError(ValueError):
    pass


class InvalidWeightError(ValueError):
    pass


class WeightMode(enum.Enum):
    PLAIN = "plain"
    SMOOTHED = "smoothed"


@dataclass(frozen=True)
class AdaptiveWeightConfig:
    """Parameters of the residual-to-weight map.

    Parameters
    ----------
    beta : float
        Residual scale; larger values keep the weight closer to one.
    epsilon : float
        Minimal-regularization floor, ``0 <= epsilon < 1``.
    kernel : GaussianKernel, optional
        Smoothing kernel, required in smoothed mode and forbidden in plain mode.
    mode : WeightMode
    """

    beta: float
    epsilon: float = 0.0
    kernel: Optional[GaussianKernel] = None
    mode: WeightMode = WeightMode.PLAIN

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        mode = WeightMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode is WeightMode.SMOOTHED and self.kernel is None:
            raise ValueError("smoothed mode requires a kernel")
        if mode is WeightMode.PLAIN and self.kernel is not None:
            raise ValueError("plain mode takes no kernel")
        if mode is WeightMode.PLAIN and self.epsilon != 0.0:
            raise ValueError("plain mode has epsilon = 0; use smoothed mode for a floor")

    @classmethod
    def plain(cls, beta):
        return cls(beta=beta)

    @classmethod
    def smoothed(cls, beta, epsilon=0.1, sigma=1.0):
        return cls(beta=beta, epsilon=epsilon, kernel=GaussianKernel(sigma),
                   mode=WeightMode.SMOOTHED)

    @property
    def upper(self):
        """Largest attainable weight, ``1 - epsilon``."""
        return 1.0 - self.epsilon


class WeightStats(NamedTuple):
    mean: float
    std_dev: float
    min: float
    max: float


def compute_lambda(rho, cfg):
    """Map a nonnegative residual field to the adaptive weight field."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise InvalidResidualError("residual must be finite and nonnegative")
    if cfg.mode is WeightMode.SMOOTHED:
        rho = convolve_gaussian(rho, cfg.kernel)
        return cfg.upper * np.exp(-rho / cfg.beta)
    return np.exp(-rho / cfg.beta)


def lambda_lower_bound(rho, cfg):
    """Residual-mass lower bound on the smoothed weight.

    Returns ``(1 - eps) * exp(-g_sup * sum(rho) / beta)`` where ``g_sup``
    bounds every entry of the padded convolution operator, so the result
    never exceeds ``compute_lambda(rho, cfg).min()``.
    """
    if cfg.mode is not WeightMode.SMOOTHED:
        raise NotImplementedError("lower bound is defined for smoothed mode only")
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise InvalidResidualError("residual must be nonnegative")
    g_sup = cfg.kernel.operator_sup(rho.shape)
    return float(cfg.upper * np.exp(-g_sup * rho.sum() / cfg.beta))


def entropy_penalty(lam, slack=1e-12):
    """Grid sum of ``lam*log(lam) - lam + 1`` (negative approximate entropy).

    Zero exactly when ``lam`` is identically one. ``0 * log 0`` is taken as 0.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < -slack) or np.any(lam > 1 + slack) or not np.all(np.isfinite(lam)):
        raise InvalidWeightError("weights must lie in (0, 1]")
    lam = np.clip(lam, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        xlogx = np.where(lam > 0, lam * np.log(lam), 0.0)
    return float(np.sum(xlogx - lam + 1.0))


def weight_stats(lam):
    lam = np.asarray(lam, dtype=np.float64)
    return WeightStats(float(lam.mean()), float(lam.std()), float(lam.min()), float(lam.max()))
