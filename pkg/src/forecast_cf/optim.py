"""Elementwise Adam with bias correction, shared by model training and the counterfactual search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    # keras default (many other libraries use 1e-8)
    epsilon: float = 1e-7

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    s: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> AdamState:
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(x, g, state: AdamState, config: AdamConfig) -> tuple[np.ndarray, AdamState]:
    """Return the updated point and moment state; inputs are left untouched."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if x.shape != g.shape or state.m.shape != x.shape or state.s.shape != x.shape:
        raise ValueError(f"shape mismatch: x {x.shape}, g {g.shape}, state {state.m.shape}")
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * g
    s = config.beta2 * state.s + (1.0 - config.beta2) * (g * g)
    m_hat = m / (1.0 - config.beta1 ** t)
    s_hat = s / (1.0 - config.beta2 ** t)
    x_new = x - config.learning_rate * m_hat / (np.sqrt(s_hat) + config.epsilon)
    return x_new, AdamState(m, s, t)
