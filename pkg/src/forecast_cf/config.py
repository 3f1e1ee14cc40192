"""Experiment configuration: an INI-style key-value file plus ``section.key=value`` overrides.

Example::

    [data]
    csv = series.csv          ; omit to use the [synthetic] generator

    [split]
    horizon = 10
    back_horizon_multiplier = 2

    [bounds]
    fraction = 1.0
    change_percent = 0.1

    [run]
    methods = forecastcf, basenn, baseshift
    seed = 42
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .bounds import BoundSpec
from .errors import ConfigError
from .forecaster import TrainConfig
from .search import SearchConfig
from .series_data import SplitSpec
from .synthetic import SyntheticSpec

METHODS = ("forecastcf", "basenn", "baseshift")
# back_horizon = multiplier * horizon; 1.25, 1.5, 2 and 3 are the values used on the benchmark datasets
DEFAULT_MULTIPLIER = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    csv: str | None = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    horizon: int = 10
    back_horizon: int | None = None
    back_horizon_multiplier: float = DEFAULT_MULTIPLIER
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    stride: int = 1
    forecaster: str = "mlp"
    hidden: int = 32
    train: TrainConfig = field(default_factory=TrainConfig)
    bounds: BoundSpec = field(default_factory=BoundSpec)
    search: SearchConfig = field(default_factory=SearchConfig)
    methods: tuple[str, ...] = METHODS
    tol: float = 0.01
    m: int = 1
    seed: int = 42
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if self.horizon < 1 or self.back_horizon_multiplier <= 0:
            raise ConfigError("horizon and back_horizon_multiplier must be positive")
        if self.tol < 0 or self.m < 1 or self.workers < 1:
            raise ConfigError("tol must be >= 0, m and workers >= 1")

    @property
    def d(self) -> int:
        return self.back_horizon or back_horizon_for(self.horizon, self.back_horizon_multiplier)

    def split_spec(self, horizon: int | None = None) -> SplitSpec:
        T = horizon or self.horizon
        d = self.d if T == self.horizon else back_horizon_for(T, self.back_horizon_multiplier)
        try:
            return SplitSpec(d, T, self.train_frac, self.val_frac, self.test_frac, self.stride)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return replace(self.train, seed=self.seed if seed is None else seed)

    def to_dict(self) -> dict:
        """Resolved config for embedding in reports; the output directory is left out."""
        out = asdict(self)
        out.pop("out")
        out["methods"] = list(self.methods)
        out["back_horizon"] = self.d
        out["train"]["seed"] = self.seed
        if self.csv is not None:
            out.pop("synthetic")
        if out["bounds"]["limits"] is not None:
            out["bounds"]["limits"] = list(out["bounds"]["limits"])
        return out


def back_horizon_for(horizon: int, multiplier: float) -> int:
    # 1e-9 guard so that e.g. 1.5 * 2 never rounds up to 4
    return max(1, math.ceil(multiplier * horizon - 1e-9))


def _float_pair(text: str):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return float(parts[0]), float(parts[1])


def _methods(text: str):
    return tuple(p.strip().lower() for p in text.split(",") if p.strip())


# section -> key -> (target, converter); target is "field" or "sub.field"
_KEYS = {
    "data": {"csv": ("csv", str)},
    "synthetic": {
        f.name: (f"synthetic.{f.name}", int if f.name in ("n_series", "length", "period", "seed") else float)
        for f in fields(SyntheticSpec)
    },
    "split": {
        "horizon": ("horizon", int), "back_horizon": ("back_horizon", int),
        "back_horizon_multiplier": ("back_horizon_multiplier", float),
        "train_frac": ("train_frac", float), "val_frac": ("val_frac", float),
        "test_frac": ("test_frac", float), "stride": ("stride", int),
    },
    "forecaster": {
        "kind": ("forecaster", str), "hidden": ("hidden", int),
        "learning_rate": ("train.learning_rate", float), "batch_size": ("train.batch_size", int),
        "max_epochs": ("train.max_epochs", int), "patience": ("train.patience", int),
    },
    "bounds": {
        "center": ("bounds.center", str), "shift": ("bounds.shift", float),
        "fraction": ("bounds.fraction", float), "change_percent": ("bounds.change_percent", float),
        "poly_order": ("bounds.poly_order", int), "limits": ("bounds.limits", _float_pair),
    },
    "search": {f.name: (f"search.{f.name}", int if f.name == "max_iter" else float) for f in fields(SearchConfig)},
    "metrics": {"tol": ("tol", float), "m": ("m", int)},
    "run": {"methods": ("methods", _methods), "seed": ("seed", int), "workers": ("workers", int), "out": ("out", str)},
}
_SUBCONFIGS = {"synthetic": SyntheticSpec, "train": TrainConfig, "bounds": BoundSpec, "search": SearchConfig}


def _convert(section: str, key: str, raw: str):
    try:
        target, conv = _KEYS[section][key]
    except KeyError:
        raise ConfigError(f"unknown config key {section}.{key}") from None
    try:
        return target, conv(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from None


def build_config(values: dict[tuple[str, str], str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply raw ``{(section, key): text}`` values on top of ``base``."""
    base = base or ExperimentConfig()
    top: dict = {}
    sub: dict[str, dict] = {name: {} for name in _SUBCONFIGS}
    for (section, key), raw in values.items():
        target, value = _convert(section, key, raw)
        if "." in target:
            owner, name = target.split(".", 1)
            sub[owner][name] = value
        else:
            top[target] = value
    try:
        for owner, changes in sub.items():
            if changes:
                top[owner] = replace(getattr(base, owner), **changes)
        return replace(base, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, overrides: list[str] | None = None) -> ExperimentConfig:
    values: dict[tuple[str, str], str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"{path}: config file not found")
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            if section not in _KEYS:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                values[(section, key)] = raw
        if ("data", "csv") in values and not Path(values[("data", "csv")]).is_absolute():
            values[("data", "csv")] = str(path.parent / values[("data", "csv")])
    for item in overrides or []:
        lhs, sep, raw = item.partition("=")
        section, dot, key = lhs.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        values[(section, key)] = raw
    return build_config(values)
