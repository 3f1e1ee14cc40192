"""Experiment steps behind the CLI subcommands.

Everything lives under the configured output directory::

    data/series.csv              synthetic input (when no CSV is configured)
    data/{train,val,test}.csv    normalized windows
    data/scalers.json            per-series min/max
    data/prepare.json            window counts, skipped series, warnings
    model/checkpoint.json        trained forecaster
    model/loss_history.csv       per-epoch train/val MAE
    cf/<method>.jsonl            one counterfactual record per test window
    reports/<method>.json        aggregate metrics
    reports/<method>_samples.csv per-sample metrics
    reports/comparison.csv       methods x counterfactual metrics
    reports/horizon_sweep.csv, reports/ablation_<cp|fr>.csv

See FORMATS.md for the column-level description.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baselines import TrainingBank, base_nn, base_shift
from .bounds import TrajectoryBounds, make_bounds
from .config import METHODS, ExperimentConfig
from .errors import ConfigError, DataError, NonFiniteError
from .forecaster import ForecastModel, build_model, load_checkpoint, save_checkpoint, train
from .metrics import CF_METRICS, EvaluationReport, evaluate, forecast_accuracy
from .search import generate
from .series_data import PreparedData, Scaler, WindowSet, load_csv, prepare_windows, write_csv
from .synthetic import SyntheticSpec, generate_series

logger = logging.getLogger(__name__)


class Layout:
    def __init__(self, root):
        self.root = Path(root)
        self.data = self.root / "data"
        self.model = self.root / "model"
        self.cf = self.root / "cf"
        self.reports = self.root / "reports"

    def windows(self, split: str) -> Path:
        return self.data / f"{split}.csv"

    @property
    def checkpoint(self) -> Path:
        return self.model / "checkpoint.json"

    def cf_file(self, method: str) -> Path:
        return self.cf / f"{method}.jsonl"


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot write ({exc.strerror})") from None


def _csv_text(header, rows, config: ExperimentConfig | None = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# --- data ----------------------------------------------------------------

def cmd_synth(spec: SyntheticSpec, path) -> Path:
    series, _ = generate_series(spec)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_csv(series, path)
    except OSError as exc:
        raise DataError(f"{path}: cannot write ({exc.strerror})") from None
    return path


def load_series(config: ExperimentConfig):
    if config.csv is not None:
        return list(load_csv(config.csv).values())
    series, _ = generate_series(config.synthetic)
    return series


def prepare_in_memory(config: ExperimentConfig, horizon: int | None = None) -> PreparedData:
    data = prepare_windows(load_series(config), config.split_spec(horizon))
    if len(data.train) == 0:
        raise DataError("no series is long enough to produce training windows")
    return data


def _write_windows(path: Path, ws: WindowSet, d: int, T: int) -> None:
    header = ["series_id", "origin_index"] + [f"x{i}" for i in range(d)] + [f"y{i}" for i in range(T)]
    rows = ([sid, int(o)] + [float(v) for v in x] + [float(v) for v in y]
            for sid, o, x, y in zip(ws.series_ids, ws.origins, ws.inputs, ws.targets))
    _write_text(path, _csv_text(header, rows))


def _read_windows(path: Path) -> WindowSet:
    if not path.is_file():
        raise DataError(f"{path}: prepared dataset not found; run 'prepare' first")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(h.startswith("x") for h in header)
        T = sum(h.startswith("y") for h in header)
        ids, origins, xs, ys = [], [], [], []
        for row in reader:
            ids.append(row[0])
            origins.append(int(row[1]))
            vals = [float(v) for v in row[2:]]
            xs.append(vals[:d])
            ys.append(vals[d:])
    if not ids:
        return WindowSet.empty(d, T)
    return WindowSet(ids, np.array(origins, dtype=int), np.array(xs), np.array(ys))


def cmd_prepare(config: ExperimentConfig) -> PreparedData:
    lay = Layout(config.out)
    if config.csv is None:
        cmd_synth(config.synthetic, lay.data / "series.csv")
    data = prepare_in_memory(config)
    for split in ("train", "val", "test"):
        _write_windows(lay.windows(split), getattr(data, split), data.d, data.T)
    scalers = {sid: {"min": s.min, "max": s.max} for sid, s in data.scalers.items()}
    _write_text(lay.data / "scalers.json", _dumps(scalers))
    summary = {"counts": data.counts(), "d": data.d, "T": data.T, "skipped": data.skipped,
               "warnings": data.warnings, "config": config.to_dict()}
    _write_text(lay.data / "prepare.json", _dumps(summary))
    return data


def load_prepared(config: ExperimentConfig) -> PreparedData:
    lay = Layout(config.out)
    sets = {split: _read_windows(lay.windows(split)) for split in ("train", "val", "test")}
    path = lay.data / "scalers.json"
    if not path.is_file():
        raise DataError(f"{path}: scalers not found; run 'prepare' first")
    raw = json.loads(path.read_text(encoding="utf-8"))
    scalers = {sid: Scaler(sid, v["min"], v["max"]) for sid, v in raw.items()}
    d, T = sets["train"].inputs.shape[1], sets["train"].targets.shape[1]
    return PreparedData(d, T, sets["train"], sets["val"], sets["test"], scalers)


# --- model ---------------------------------------------------------------

def train_in_memory(config: ExperimentConfig, data: PreparedData, seed: int | None = None):
    seed = config.seed if seed is None else seed
    if len(data.train) == 0 or len(data.val) == 0:
        raise DataError("training needs at least one training and one validation window")
    try:
        model = build_model(config.forecaster, data.d, data.T, seed=seed, hidden=config.hidden, m=config.m)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if model.params.size == 0:
        return model, []
    return train(model, data.train, data.val, config.train_config(seed))


def cmd_train(config: ExperimentConfig) -> ForecastModel:
    lay = Layout(config.out)
    data = load_prepared(config)
    model, history = train_in_memory(config, data)
    lay.model.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, lay.checkpoint, seed=config.seed, train_config=config.train_config())
    rows = ((epoch, tr, va) for epoch, (tr, va) in enumerate(history, start=1))
    _write_text(lay.model / "loss_history.csv", _csv_text(["epoch", "train_mae", "val_mae"], rows, config))
    if history:
        logger.info("best validation MAE %.6f", min(va for _, va in history))
    return model


# --- counterfactuals -----------------------------------------------------

def _search_one(args):
    model, x, bounds, search = args
    try:
        res = generate(model, x, bounds, search)
    except NonFiniteError as exc:
        return None, str(exc)
    return res, None


def generate_counterfactuals(method: str, model: ForecastModel, inputs, bounds: list[TrajectoryBounds],
                             config: ExperimentConfig, bank: TrainingBank | None = None) -> list[dict]:
    """Run one method over all windows; returns one record per window, in input order.

    A search aborted by non-finite values keeps the original window and
    carries the diagnostic in ``error``.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    inputs = np.asarray(inputs, dtype=float)
    records = []
    if method == "forecastcf":
        jobs = [(model, x, b, config.search) for x, b in zip(inputs, bounds)]
        if config.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                outcomes = list(pool.map(_search_one, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
        else:
            outcomes = [_search_one(job) for job in jobs]
        for x, (res, err) in zip(inputs, outcomes):
            if res is None:
                logger.warning("search aborted: %s", err)
                f = model.predict(x)
                records.append({"counterfactual": x.copy(), "forecast": f, "iterations_used": config.search.max_iter,
                                "fully_valid": False, "error": err})
            else:
                records.append({"counterfactual": res.counterfactual, "forecast": res.forecast,
                                "iterations_used": res.iterations_used, "fully_valid": res.fully_valid, "error": None})
        return records

    if method == "basenn":
        if bank is None or len(bank) == 0:
            raise DataError("basenn needs a non-empty training bank")
        cfs = [base_nn(bank, b) for b in bounds]
    else:
        cfs = [base_shift(x, config.bounds.change_percent) for x in inputs]
    forecasts = model.predict_batch(np.array(cfs)) if cfs else []
    for xc, f, b in zip(cfs, forecasts, bounds):
        valid = bool(np.all((f >= b.alpha) & (f <= b.beta)))
        records.append({"counterfactual": xc, "forecast": f, "iterations_used": 0, "fully_valid": valid, "error": None})
    return records


def window_bounds(config: ExperimentConfig, inputs, T: int) -> list[TrajectoryBounds]:
    try:
        return [make_bounds(x, T, config.bounds) for x in inputs]
    except ValueError as exc:
        raise ConfigError(f"bound construction failed: {exc}") from None


def cmd_generate(config: ExperimentConfig, method: str) -> list[dict]:
    lay = Layout(config.out)
    data = load_prepared(config)
    if len(data.test) == 0:
        raise DataError("no test windows; nothing to explain")
    model = load_checkpoint(lay.checkpoint)
    bounds = window_bounds(config, data.test.inputs, data.T)
    bank = TrainingBank.from_windows(data.train) if method == "basenn" else None
    records = generate_counterfactuals(method, model, data.test.inputs, bounds, config, bank)

    lines = []
    for i, (sid, origin, x, b, rec) in enumerate(zip(data.test.series_ids, data.test.origins,
                                                     data.test.inputs, bounds, records)):
        lines.append(json.dumps({
            "sample_id": i, "series_id": sid, "origin_index": int(origin), "method": method,
            "original": x.tolist(), "counterfactual": np.asarray(rec["counterfactual"]).tolist(),
            "forecast": np.asarray(rec["forecast"]).tolist(),
            "alpha": b.alpha.tolist(), "beta": b.beta.tolist(),
            "iterations_used": rec["iterations_used"], "fully_valid": rec["fully_valid"],
            "error": rec["error"],
        }, sort_keys=True))
    _write_text(lay.cf_file(method), "\n".join(lines) + "\n")
    return records


def read_counterfactuals(path: Path) -> list[dict]:
    if not path.is_file():
        raise DataError(f"{path}: counterfactuals not found; run 'generate' first")
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


# --- evaluation ----------------------------------------------------------

def model_accuracy(model: ForecastModel, windows: WindowSet, scalers: dict[str, Scaler], m: int) -> dict:
    """Forecast sMAPE/MASE on ``windows``, measured in original units."""
    if len(windows) == 0:
        return {"smape": float("nan"), "mase": float("nan"), "mase_excluded": 0}
    forecasts = model.predict_batch(windows.inputs)
    sc = [scalers[sid] for sid in windows.series_ids]
    return forecast_accuracy(
        [s.invert(x) for s, x in zip(sc, windows.inputs)],
        [s.invert(y) for s, y in zip(sc, windows.targets)],
        [s.invert(f) for s, f in zip(sc, forecasts)],
        m,
    )


def evaluate_records(method: str, originals, records, bounds, config: ExperimentConfig,
                     accuracy: dict | None = None) -> EvaluationReport:
    return evaluate(
        originals,
        [r["counterfactual"] for r in records],
        [r["forecast"] for r in records],
        bounds,
        tol=config.tol,
        accuracy=accuracy,
        metadata={"method": method, "aborted": sum(r.get("error") is not None for r in records),
                  "fully_valid": sum(bool(r["fully_valid"]) for r in records)},
    )


def write_report(lay: Layout, name: str, report: EvaluationReport, config: ExperimentConfig) -> None:
    payload = json.loads(report.to_json())
    payload["config"] = config.to_dict()
    _write_text(lay.reports / f"{name}.json", _dumps(payload))
    text = "# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n" + report.to_csv()
    _write_text(lay.reports / f"{name}_samples.csv", text)


def cmd_evaluate(config: ExperimentConfig) -> dict[str, EvaluationReport]:
    lay = Layout(config.out)
    data = load_prepared(config)
    model = load_checkpoint(lay.checkpoint)
    accuracy = model_accuracy(model, data.test, data.scalers, config.m)
    reports = {}
    for method in config.methods:
        rows = read_counterfactuals(lay.cf_file(method))
        originals = [np.array(r["original"]) for r in rows]
        bounds = [TrajectoryBounds(np.array(r["alpha"]), np.array(r["beta"])) for r in rows]
        records = [{"counterfactual": np.array(r["counterfactual"]), "forecast": np.array(r["forecast"]),
                    "fully_valid": r["fully_valid"], "error": r["error"]} for r in rows]
        report = evaluate_records(method, originals, records, bounds, config, accuracy)
        write_report(lay, method, report, config)
        reports[method] = report
    table = ([method] + [reports[method].aggregate[k] for k in CF_METRICS] for method in config.methods)
    _write_text(lay.reports / "comparison.csv", _csv_text(["method", *CF_METRICS], table, config))
    return reports


def run_pipeline(config: ExperimentConfig) -> dict[str, EvaluationReport]:
    cmd_prepare(config)
    cmd_train(config)
    for method in config.methods:
        cmd_generate(config, method)
    return cmd_evaluate(config)


def run_repeats(config: ExperimentConfig, repeats: int) -> list[dict]:
    """Full pipeline ``repeats`` times with training seeds seed, seed+1, ...; writes mean comparison."""
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if repeats == 1:
        reports = run_pipeline(config)
        return [{m: r.aggregate for m, r in reports.items()}]
    runs = []
    for r in range(repeats):
        sub = replace(config, seed=config.seed + r, out=str(Path(config.out) / f"repeat_{r}"))
        runs.append({m: rep.aggregate for m, rep in run_pipeline(sub).items()})
    rows = ([m] + [float(np.mean([run[m][k] for run in runs])) for k in CF_METRICS] for m in config.methods)
    _write_text(Layout(config.out).reports / "comparison_mean.csv", _csv_text(["method", *CF_METRICS], rows, config))
    return runs


# --- experiment protocols ------------------------------------------------

SWEEP_COLUMNS = ["horizon", "back_horizon", "n_test", *CF_METRICS, "smape", "mase", "status"]


def _forecastcf_metrics(config: ExperimentConfig, model: ForecastModel, data: PreparedData) -> dict:
    bounds = window_bounds(config, data.test.inputs, data.T)
    records = generate_counterfactuals("forecastcf", model, data.test.inputs, bounds, config)
    report = evaluate_records("forecastcf", list(data.test.inputs), records, bounds, config)
    return report.aggregate


def cmd_horizon_sweep(config: ExperimentConfig, horizons) -> list[dict]:
    """Retrain and explain at each horizon, back horizon scaled by the configured multiplier."""
    horizons = [int(h) for h in horizons]
    if not horizons or min(horizons) < 1:
        raise ConfigError("horizons must be a non-empty list of integers >= 1")
    rows = []
    for h in horizons:
        row = {"horizon": h, "back_horizon": config.split_spec(h).back_horizon}
        try:
            data = prepare_in_memory(config, h)
            if len(data.test) == 0:
                raise DataError("no test windows")
            model, _ = train_in_memory(config, data)
            row.update(_forecastcf_metrics(config, model, data))
            acc = model_accuracy(model, data.test, data.scalers, config.m)
            row.update(n_test=len(data.test), smape=acc["smape"], mase=acc["mase"], status="ok")
        except (DataError, ConfigError, ValueError) as exc:
            logger.error("horizon %d failed: %s", h, exc)
            row.update(status=f"failed: {exc}")
        rows.append(row)
    table = ([row.get(c, "") for c in SWEEP_COLUMNS] for row in rows)
    _write_text(Layout(config.out).reports / "horizon_sweep.csv", _csv_text(SWEEP_COLUMNS, table, config))
    return rows


ABLATION_FIELDS = {"cp": "change_percent", "fr": "fraction"}


def cmd_ablation(config: ExperimentConfig, parameter: str, values) -> list[dict]:
    """Vary ``cp`` or ``fr`` with one trained model (loaded from the output dir if present)."""
    if parameter not in ABLATION_FIELDS:
        raise ConfigError(f"ablation parameter must be one of {sorted(ABLATION_FIELDS)}")
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("ablation needs at least one value")
    lay = Layout(config.out)
    if lay.checkpoint.is_file() and lay.windows("test").is_file():
        data, model = load_prepared(config), load_checkpoint(lay.checkpoint)
    else:
        data = prepare_in_memory(config)
        model, _ = train_in_memory(config, data)
    if len(data.test) == 0:
        raise DataError("no test windows; nothing to explain")

    rows = []
    for value in values:
        try:
            bounds = replace(config.bounds, **{ABLATION_FIELDS[parameter]: value})
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        row = {parameter: value}
        row.update(_forecastcf_metrics(replace(config, bounds=bounds), model, data))
        rows.append(row)
    columns = [parameter, *CF_METRICS]
    table = ([row[c] for c in columns] for row in rows)
    _write_text(lay.reports / f"ablation_{parameter}.csv", _csv_text(columns, table, config))
    return rows
