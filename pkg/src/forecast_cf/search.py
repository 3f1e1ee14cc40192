"""Gradient-based counterfactual search over the back-horizon window.

A copy of the input window is moved by Adam steps on a masked band loss;
horizon steps whose forecast already sits inside the band are masked out
of the loss, and the search stops as soon as every step is inside or the
iteration budget runs out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import TrajectoryBounds
from .errors import NonFiniteError
from .forecaster import ForecastModel
from .optim import AdamConfig, AdamState, adam_step

__all__ = [
    "SearchConfig", "CounterfactualResult", "mask", "band_loss",
    "loss_input_gradient", "adam_step", "AdamState", "generate",
]


@dataclass(frozen=True)
class SearchConfig:
    learning_rate: float = 0.001
    max_iter: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        self.adam  # validates the remaining fields

    @property
    def adam(self) -> AdamConfig:
        return AdamConfig(self.learning_rate, self.beta1, self.beta2, self.epsilon)


@dataclass
class CounterfactualResult:
    original: np.ndarray
    counterfactual: np.ndarray
    forecast: np.ndarray
    iterations_used: int
    fully_valid: bool
    final_mask: np.ndarray


def _check_lengths(forecast, bounds: TrajectoryBounds) -> np.ndarray:
    forecast = np.asarray(forecast, dtype=float)
    if forecast.shape != bounds.alpha.shape:
        raise ValueError(f"forecast shape {forecast.shape} does not match bounds of length {len(bounds)}")
    return forecast


def mask(forecast, bounds: TrajectoryBounds) -> np.ndarray:
    """1 where the forecast lies outside ``[alpha, beta]`` (edges count as inside), else 0."""
    forecast = _check_lengths(forecast, bounds)
    inside = (forecast >= bounds.alpha) & (forecast <= bounds.beta)
    return (~inside).astype(int)


def band_loss(forecast, bounds: TrajectoryBounds, v) -> float:
    forecast = _check_lengths(forecast, bounds)
    v = np.asarray(v, dtype=float)
    if v.shape != forecast.shape:
        raise ValueError("mask length does not match forecast")
    return float(np.sum(v * ((forecast - bounds.alpha) ** 2 + (forecast - bounds.beta) ** 2)))


def _upstream(forecast, bounds: TrajectoryBounds, v) -> np.ndarray:
    return np.asarray(v, dtype=float) * (2.0 * (forecast - bounds.alpha) + 2.0 * (forecast - bounds.beta))


def loss_input_gradient(model: ForecastModel, x, bounds: TrajectoryBounds, v) -> np.ndarray:
    """Exact gradient of ``band_loss(model.predict(x), bounds, v)`` with ``v`` held fixed."""
    forecast = _check_lengths(model.predict(x), bounds)
    return model.input_gradient(x, _upstream(forecast, bounds, v))


def generate(model: ForecastModel, x, bounds: TrajectoryBounds, config: SearchConfig | None = None) -> CounterfactualResult:
    config = config or SearchConfig()
    original = np.array(x, dtype=float)
    if original.shape != (model.d,):
        raise ValueError(f"model expects a window of length {model.d}, got shape {original.shape}")
    if len(bounds) != model.T:
        raise ValueError(f"model forecasts {model.T} steps but bounds have length {len(bounds)}")

    adam = config.adam
    x_star = original.copy()
    forecast = model.predict(x_star)
    v = mask(forecast, bounds)
    state = AdamState.zeros(model.d)
    t = 0
    while v.any() and t < config.max_iter:
        g = model.input_gradient(x_star, _upstream(forecast, bounds, v))
        x_star, state = adam_step(x_star, g, state, adam)
        forecast = model.predict(x_star)
        if not (np.all(np.isfinite(x_star)) and np.all(np.isfinite(forecast))):
            raise NonFiniteError(f"non-finite values after search iteration {t + 1}")
        v = mask(forecast, bounds)
        t += 1

    return CounterfactualResult(
        original=original,
        counterfactual=x_star,
        forecast=forecast,
        iterations_used=t,
        fully_valid=not v.any(),
        final_mask=v,
    )
