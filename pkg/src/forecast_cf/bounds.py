"""Desired-trajectory bands over the forecast horizon.

The band starts at ``c(x) * (1 + s -/+ fr * std(x))`` and both edges are
translated by the same power-curve ramp towards ``start + c(x) * cp``, so
the band width ``2 * c(x) * fr * std(x)`` is constant over the horizon and
``cp = 0`` gives a horizontal band.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

CENTERS = {
    "median": np.median,
    "max": np.max,
    "min": np.min,
    "mean": np.mean,
    "last": lambda x: x[-1],
}


@dataclass(frozen=True)
class BoundSpec:
    center: str = "median"
    shift: float = 0.0
    fraction: float = 1.0
    change_percent: float = 0.0
    poly_order: int = 1
    limits: tuple[float, float] | None = None

    def __post_init__(self):
        if self.center not in CENTERS:
            raise ValueError(f"unknown center {self.center!r}; choose from {sorted(CENTERS)}")
        if self.fraction < 0:
            raise ValueError("fraction must be >= 0")
        if int(self.poly_order) != self.poly_order or self.poly_order < 1:
            raise ValueError("poly_order must be a positive integer")
        if self.limits is not None and self.limits[0] > self.limits[1]:
            raise ValueError("lower limit must not exceed upper limit")


@dataclass(frozen=True)
class TrajectoryBounds:
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if alpha.ndim != 1 or alpha.shape != beta.shape:
            raise ValueError(f"alpha {alpha.shape} and beta {beta.shape} must be equal-length vectors")
        if np.any(alpha > beta):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    def __len__(self):
        return self.alpha.size

    @property
    def midpoint(self) -> np.ndarray:
        return (self.alpha + self.beta) / 2.0


def _ramp(start: float, end: float, T: int, order: int) -> np.ndarray:
    if T == 1:
        return np.array([start])
    frac = (np.arange(T) / (T - 1)) ** order
    return start + (end - start) * frac


def polynomial_bounds(x, T: int, spec: BoundSpec) -> TrajectoryBounds:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("cannot build bounds from an empty window")
    if T < 1:
        raise ValueError("T must be >= 1")
    c = float(CENTERS[spec.center](x))
    sigma = float(np.std(x))
    alpha_1 = c * (1.0 + spec.shift - spec.fraction * sigma)
    beta_1 = c * (1.0 + spec.shift + spec.fraction * sigma)
    if alpha_1 > beta_1:
        logger.warning("negative center %.6g produced a crossed band; swapping lower and upper", c)
        alpha_1, beta_1 = beta_1, alpha_1
    delta = c * spec.change_percent
    return TrajectoryBounds(
        _ramp(alpha_1, alpha_1 + delta, T, spec.poly_order),
        _ramp(beta_1, beta_1 + delta, T, spec.poly_order),
    )


def limited_bounds(bounds: TrajectoryBounds, lower_limit: float, upper_limit: float) -> TrajectoryBounds:
    """Clamp the lower edge from below and the upper edge from above."""
    if lower_limit > upper_limit:
        raise ValueError("lower limit must not exceed upper limit")
    alpha = np.maximum(bounds.alpha, lower_limit)
    beta = np.minimum(bounds.beta, upper_limit)
    if np.any(alpha > beta):
        bad = np.flatnonzero(alpha > beta).tolist()
        raise ValueError(f"limits cross the band at horizon steps {bad}")
    return TrajectoryBounds(alpha, beta)


def make_bounds(x, T: int, spec: BoundSpec) -> TrajectoryBounds:
    bounds = polynomial_bounds(x, T, spec)
    if spec.limits is not None:
        bounds = limited_bounds(bounds, *spec.limits)
    return bounds
