"""Seeded trend + seasonal + noise series, a stand-in for benchmark datasets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .series_data import TimeSeries


@dataclass(frozen=True)
class SyntheticSpec:
    n_series: int = 20
    length: int = 200
    slope_min: float = 0.01
    slope_max: float = 0.05
    amplitude: float = 1.0
    period: int = 12
    noise: float = 0.1
    level: float = 10.0
    seed: int = 42

    def __post_init__(self):
        if self.n_series < 1:
            raise ConfigError("n_series must be >= 1")
        if self.length < 1:
            raise ConfigError("length must be >= 1")
        if self.slope_min > self.slope_max:
            raise ConfigError("slope_min must not exceed slope_max")
        if self.amplitude < 0 or self.noise < 0:
            raise ConfigError("amplitude and noise must be >= 0")
        if not 1 <= self.period < self.length:
            raise ConfigError("period must lie in [1, length)")


def generate_series(spec: SyntheticSpec) -> tuple[list[TimeSeries], list[dict]]:
    """Return the series and, per series, the drawn ``slope`` and ``phase``.

    ``value[t] = level + slope * t + amplitude * sin(2 pi t / period + phase) + noise``
    """
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.length, dtype=float)
    width = len(str(spec.n_series - 1))
    series, params = [], []
    for i in range(spec.n_series):
        slope = float(rng.uniform(spec.slope_min, spec.slope_max))
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        clean = spec.level + slope * t + spec.amplitude * np.sin(2.0 * np.pi * t / spec.period + phase)
        eps = rng.normal(0.0, spec.noise, spec.length) if spec.noise > 0 else 0.0
        sid = f"s{i:0{width}d}"
        series.append(TimeSeries(sid, clean + eps))
        params.append({"series_id": sid, "slope": slope, "phase": phase})
    return series, params
