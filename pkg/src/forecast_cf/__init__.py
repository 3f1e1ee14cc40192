"""Band-constrained counterfactual search for multi-step time series forecasters."""

from .bounds import BoundSpec, TrajectoryBounds, make_bounds
from .forecaster import LinearAR, MLPForecaster, SeasonalNaive
from .search import CounterfactualResult, SearchConfig, generate

__version__ = "0.1.0"

__all__ = [
    "BoundSpec", "TrajectoryBounds", "make_bounds",
    "LinearAR", "MLPForecaster", "SeasonalNaive",
    "CounterfactualResult", "SearchConfig", "generate",
]
