"""Forecast accuracy (sMAPE, MASE) and counterfactual quality measures.

Counterfactual metrics:

* validity ratio -- mean fraction of horizon steps whose forecast is in band;
* stepwise validity AUC -- mean length of the in-band prefix, divided by T.
  This is the area under the curve "share of counterfactuals with at least
  t consecutively valid steps from the first one" over t/T;
* proximity -- mean Euclidean distance between original and counterfactual;
* compactness -- mean fraction of window steps changed by at most ``tol``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import TrajectoryBounds
from .forecaster import seasonal_naive_errors

PER_SAMPLE_COLUMNS = ("sample_id", "validity_ratio", "prefix_valid_steps", "proximity", "compactness")
CF_METRICS = ("validity_ratio", "step_auc", "proximity", "compactness")


def _mean(values) -> float:
    # fsum is correctly rounded, so aggregates do not depend on sample order
    values = list(values)
    return math.fsum(values) / len(values)


def smape(actual, forecast) -> float:
    actual = np.asarray(actual, dtype=float)
    forecast = np.asarray(forecast, dtype=float)
    if actual.shape != forecast.shape:
        raise ValueError("actual and forecast must have equal length")
    num = np.abs(actual - forecast)
    den = np.abs(actual) + np.abs(forecast)
    ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(200.0 * np.mean(ratio))


def mase(window, forecast, m: int = 1) -> float:
    """MASE of one window; NaN when the window is constant (zero naive error).

    ``window`` is a :class:`~forecast_cf.series_data.WindowPair` or an
    ``(input, target)`` pair.
    """
    if hasattr(window, "target"):
        inp, target = window.input, window.target
    else:
        inp, target = window
    inp = np.asarray(inp, dtype=float)
    target = np.asarray(target, dtype=float)
    forecast = np.asarray(forecast, dtype=float)
    if forecast.shape != target.shape:
        raise ValueError("forecast and target must have equal length")
    scale = seasonal_naive_errors(np.concatenate([inp, target]), m)
    if scale == 0:
        return math.nan
    return float(np.mean(np.abs(target - forecast)) / scale)


def step_validity(forecast, bounds: TrajectoryBounds) -> np.ndarray:
    forecast = np.asarray(forecast, dtype=float)
    if forecast.shape != bounds.alpha.shape:
        raise ValueError("forecast length does not match bounds")
    return (forecast >= bounds.alpha) & (forecast <= bounds.beta)


def prefix_valid_steps(forecast, bounds: TrajectoryBounds) -> int:
    valid = step_validity(forecast, bounds)
    broken = np.flatnonzero(~valid)
    return int(broken[0]) if broken.size else int(valid.size)


def _require(results):
    results = list(results)
    if not results:
        raise ValueError("need at least one (forecast, bounds) result")
    return results


def validity_ratio(results) -> float:
    results = _require(results)
    return _mean(step_validity(f, b).mean() for f, b in results)


def step_auc(results) -> float:
    results = _require(results)
    return _mean(prefix_valid_steps(f, b) / len(b) for f, b in results)


def _pairs(originals, counterfactuals):
    originals = [np.asarray(x, dtype=float) for x in originals]
    counterfactuals = [np.asarray(x, dtype=float) for x in counterfactuals]
    if len(originals) != len(counterfactuals) or not originals:
        raise ValueError("need equally many (>= 1) originals and counterfactuals")
    for x, xc in zip(originals, counterfactuals):
        if x.shape != xc.shape:
            raise ValueError("original and counterfactual windows differ in length")
    return originals, counterfactuals


def proximity(originals, counterfactuals) -> float:
    originals, counterfactuals = _pairs(originals, counterfactuals)
    return _mean(float(np.linalg.norm(x - xc)) for x, xc in zip(originals, counterfactuals))


def compactness(originals, counterfactuals, tol: float = 0.01) -> float:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    originals, counterfactuals = _pairs(originals, counterfactuals)
    return _mean(float(np.mean(np.abs(x - xc) <= tol)) for x, xc in zip(originals, counterfactuals))


def forecast_accuracy(inputs, targets, forecasts, m: int = 1) -> dict:
    """Mean sMAPE and MASE over windows; constant windows are left out of MASE."""
    smapes, mases, excluded = [], [], 0
    for x, y, f in zip(inputs, targets, forecasts):
        smapes.append(smape(y, f))
        value = mase((x, y), f, m)
        if math.isnan(value):
            excluded += 1
        else:
            mases.append(value)
    return {
        "smape": _mean(smapes) if smapes else math.nan,
        "mase": _mean(mases) if mases else math.nan,
        "mase_excluded": excluded,
    }


@dataclass
class EvaluationReport:
    per_sample: list[dict]
    aggregate: dict
    tol: float
    K: int
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {"K": self.K, "tol": self.tol, "aggregate": self.aggregate, "metadata": self.metadata}
        return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=PER_SAMPLE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.per_sample:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()


def evaluate(originals, counterfactuals, cf_forecasts, bounds, tol: float = 0.01,
             sample_ids=None, accuracy: dict | None = None, metadata: dict | None = None) -> EvaluationReport:
    originals, counterfactuals = _pairs(originals, counterfactuals)
    bounds = list(bounds)
    cf_forecasts = [np.asarray(f, dtype=float) for f in cf_forecasts]
    if not (len(bounds) == len(cf_forecasts) == len(originals)):
        raise ValueError("originals, counterfactuals, forecasts and bounds must align")
    K = len(originals)
    sample_ids = list(range(K)) if sample_ids is None else list(sample_ids)

    per_sample = []
    for sid, x, xc, f, b in zip(sample_ids, originals, counterfactuals, cf_forecasts, bounds):
        per_sample.append({
            "sample_id": sid,
            "validity_ratio": float(step_validity(f, b).mean()),
            "prefix_valid_steps": prefix_valid_steps(f, b),
            "proximity": float(np.linalg.norm(x - xc)),
            "compactness": float(np.mean(np.abs(x - xc) <= tol)),
        })

    results = list(zip(cf_forecasts, bounds))
    aggregate = {
        "validity_ratio": validity_ratio(results),
        "step_auc": step_auc(results),
        "proximity": proximity(originals, counterfactuals),
        "compactness": compactness(originals, counterfactuals, tol),
    }
    if accuracy:
        aggregate.update(accuracy)
    meta = {"units": "normalized (per-series min-max)", "smape_zero_denominator": "contributes 0"}
    meta.update(metadata or {})
    return EvaluationReport(per_sample, aggregate, tol, K, meta)
