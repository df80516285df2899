"""Shared configuration and bookkeeping for the linearized ADMM solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .weights import weight_stats

# per-pixel RMS bound on ||grad u - z|| required before the u-change test may stop
PRIMAL_TOL = 1e-3

__all__ = ["ConvergenceTrace", "DivergenceError", "SolverConfig", "TraceRecord"]


class DivergenceError(FloatingPointError):
    """Raised when an iterate becomes non-finite."""


@dataclass(frozen=True)
class SolverConfig:
    """Iteration parameters common to all solvers.

    ``mu`` is the augmentation parameter and ``tau`` the weight of the
    proximal term that linearizes the coupling ``mu/2 ||K u - z + y||^2``.
    The u-step is a contraction only when ``tau >= mu * ||K||^2``, which is
    8 for the 2-D forward-difference gradient.
    """

    mu: float = 1.0
    tau: float = 8.0
    max_iters: int = 300
    tol_rel_change: float = 1e-5
    lambda_update_every: int = 1

    def __post_init__(self):
        if not self.mu > 0 or not self.tau > 0:
            raise ValueError("mu and tau must be positive")
        if self.max_iters < 1 or self.lambda_update_every < 1:
            raise ValueError("max_iters and lambda_update_every must be positive")
        if not self.tol_rel_change >= 0:
            raise ValueError("tol_rel_change must be nonnegative")


@dataclass
class TraceRecord:
    energy: float
    primal_res: float
    dual_res: float
    lambda_mean: float
    lambda_std: float
    lambda_min: float
    lambda_max: float


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    converged: bool = False

    def append(self, energy, primal_res, dual_res, lam):
        s = weight_stats(lam)
        self.records.append(TraceRecord(float(energy), float(primal_res), float(dual_res),
                                        s.mean, s.std_dev, s.min, s.max))

    def extend(self, other):
        self.records.extend(other.records)
        self.warnings.extend(other.warnings)
        self.converged = other.converged

    def __len__(self):
        return len(self.records)

    @property
    def iterations(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def rows(self):
        """Rows ``(iter, energy, primal_res, dual_res, lambda_mean, lambda_std)``."""
        return [(i + 1, r.energy, r.primal_res, r.dual_res, r.lambda_mean, r.lambda_std)
                for i, r in enumerate(self.records)]


def ensure_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError("iterate became non-finite")


def relative_change(new, old):
    den = np.linalg.norm(old)
    num = np.linalg.norm(new - old)
    if den == 0:
        return 0.0 if num == 0 else np.inf
    return num / den
