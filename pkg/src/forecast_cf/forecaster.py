"""Differentiable forecasters, MAE training with early stopping, and gradient oracles.

Every model maps a back-horizon window of length ``d`` to ``T`` forecast
steps and exposes the vector-Jacobian product with respect to its input,
which is all the counterfactual search needs. Gradients are derived by
hand; :func:`fd_gradient` is the independent check.
"""

from __future__ import annotations

import json
import logging
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .optim import AdamConfig, AdamState, adam_step

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class ForecastModel(ABC):
    """Contract for models usable by the counterfactual search.

    External models only need ``d``, ``T``, :meth:`predict_batch` and
    :meth:`input_gradient_batch`; training additionally uses ``params`` and
    :meth:`param_gradient`.
    """

    kind = "abstract"

    def __init__(self, d: int, T: int):
        if d < 1 or T < 1:
            raise ValueError("d and T must be >= 1")
        self.d = int(d)
        self.T = int(T)

    @abstractmethod
    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """(N, d) -> (N, T)."""

    @abstractmethod
    def input_gradient_batch(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Row-wise vector-Jacobian products: (N, d), (N, T) -> (N, d)."""

    @property
    def params(self) -> np.ndarray:
        return np.zeros(0)

    @params.setter
    def params(self, value):
        if np.asarray(value).size:
            raise ValueError(f"{self.kind} model has no parameters")

    def param_gradient(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} model is not trainable")

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected input of length {self.d}, got shape {x.shape}")
        return x

    def predict(self, x) -> np.ndarray:
        x = self._check_input(x)
        return self.predict_batch(x[None, :])[0]

    def input_gradient(self, x, upstream) -> np.ndarray:
        """Gradient of ``upstream . predict(x)`` with respect to ``x``."""
        x = self._check_input(x)
        upstream = np.asarray(upstream, dtype=float)
        if upstream.shape != (self.T,):
            raise ValueError(f"expected upstream of length {self.T}, got shape {upstream.shape}")
        return self.input_gradient_batch(x[None, :], upstream[None, :])[0]

    def config(self) -> dict:
        return {}


def _init_uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class LinearAR(ForecastModel):
    """Direct multi-output linear autoregression ``y = W x + b``."""

    kind = "linear"

    def __init__(self, d: int, T: int, seed: int = 0):
        super().__init__(d, T)
        rng = np.random.default_rng(seed)
        self.W = _init_uniform(rng, d, (T, d))
        self.b = _init_uniform(rng, d, T)

    @classmethod
    def from_weights(cls, W, b=None) -> LinearAR:
        W = np.asarray(W, dtype=float)
        model = cls(W.shape[1], W.shape[0])
        model.W = W.copy()
        model.b = np.zeros(W.shape[0]) if b is None else np.asarray(b, dtype=float).copy()
        return model

    @classmethod
    def repeat_last(cls, d: int, T: int) -> LinearAR:
        W = np.zeros((T, d))
        W[:, -1] = 1.0
        return cls.from_weights(W)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.b])

    @params.setter
    def params(self, value):
        value = np.asarray(value, dtype=float)
        n = self.T * self.d
        if value.shape != (n + self.T,):
            raise ValueError(f"linear model expects {n + self.T} parameters, got {value.shape}")
        self.W = value[:n].reshape(self.T, self.d).copy()
        self.b = value[n:].copy()

    def predict_batch(self, X):
        return np.asarray(X, dtype=float) @ self.W.T + self.b

    def input_gradient_batch(self, X, U):
        return np.asarray(U, dtype=float) @ self.W

    def param_gradient(self, X, U):
        X = np.asarray(X, dtype=float)
        U = np.asarray(U, dtype=float)
        return np.concatenate([(U.T @ X).ravel(), U.sum(axis=0)])


class MLPForecaster(ForecastModel):
    """One hidden tanh layer: ``y = W2 tanh(W1 x + b1) + b2``."""

    kind = "mlp"

    def __init__(self, d: int, T: int, hidden: int = 32, seed: int = 0):
        super().__init__(d, T)
        if hidden < 1:
            raise ValueError("hidden must be >= 1")
        self.hidden = int(hidden)
        rng = np.random.default_rng(seed)
        self.W1 = _init_uniform(rng, d, (hidden, d))
        self.b1 = _init_uniform(rng, d, hidden)
        self.W2 = _init_uniform(rng, hidden, (T, hidden))
        self.b2 = _init_uniform(rng, hidden, T)

    def _shapes(self):
        H, d, T = self.hidden, self.d, self.T
        return [(H, d), (H,), (T, H), (T,)]

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])

    @params.setter
    def params(self, value):
        value = np.asarray(value, dtype=float)
        sizes = [int(np.prod(s)) for s in self._shapes()]
        if value.shape != (sum(sizes),):
            raise ValueError(f"mlp expects {sum(sizes)} parameters, got {value.shape}")
        parts, start = [], 0
        for shape, size in zip(self._shapes(), sizes):
            parts.append(value[start:start + size].reshape(shape).copy())
            start += size
        self.W1, self.b1, self.W2, self.b2 = parts

    def _hidden(self, X):
        return np.tanh(np.asarray(X, dtype=float) @ self.W1.T + self.b1)

    def predict_batch(self, X):
        return self._hidden(X) @ self.W2.T + self.b2

    def input_gradient_batch(self, X, U):
        h = self._hidden(X)
        dh = (np.asarray(U, dtype=float) @ self.W2) * (1.0 - h * h)
        return dh @ self.W1

    def param_gradient(self, X, U):
        X = np.asarray(X, dtype=float)
        U = np.asarray(U, dtype=float)
        h = self._hidden(X)
        dz = (U @ self.W2) * (1.0 - h * h)
        return np.concatenate([(dz.T @ X).ravel(), dz.sum(axis=0), (U.T @ h).ravel(), U.sum(axis=0)])

    def config(self) -> dict:
        return {"hidden": self.hidden}


class SeasonalNaive(ForecastModel):
    """Repeats the last observed season of length ``m`` across the horizon."""

    kind = "naive"

    def __init__(self, d: int, T: int, m: int = 1):
        super().__init__(d, T)
        if not 1 <= m <= d:
            raise ValueError(f"periodicity m={m} must lie in [1, d={d}]")
        self.m = int(m)
        self._src = np.array([d - m + (i % m) for i in range(T)])

    def predict_batch(self, X):
        return np.asarray(X, dtype=float)[:, self._src]

    def input_gradient_batch(self, X, U):
        U = np.asarray(U, dtype=float)
        G = np.zeros((U.shape[0], self.d))
        np.add.at(G, (slice(None), self._src), U)
        return G

    def config(self) -> dict:
        return {"m": self.m}


MODEL_KINDS = {"linear": LinearAR, "mlp": MLPForecaster, "naive": SeasonalNaive}


def build_model(kind: str, d: int, T: int, seed: int = 0, **options) -> ForecastModel:
    if kind == "linear":
        return LinearAR(d, T, seed=seed)
    if kind == "mlp":
        return MLPForecaster(d, T, hidden=int(options.get("hidden", 32)), seed=seed)
    if kind == "naive":
        return SeasonalNaive(d, T, m=int(options.get("m", 1)))
    raise ValueError(f"unknown forecaster kind {kind!r}; choose from {sorted(MODEL_KINDS)}")


def fd_gradient(model: ForecastModel, x, upstream, step: float = 1e-5) -> np.ndarray:
    """Central-difference estimate of ``model.input_gradient``."""
    if step <= 0:
        raise ValueError("step must be > 0")
    x = np.asarray(x, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    grad = np.empty(x.size)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (upstream @ model.predict(xp) - upstream @ model.predict(xm)) / (2.0 * step)
    return grad


def seasonal_naive_errors(window, m: int = 1) -> float:
    """Mean absolute ``m``-step seasonal difference over a full input+target window."""
    window = np.asarray(window, dtype=float)
    if m < 1:
        raise ValueError("m must be >= 1")
    if window.size < m + 1:
        raise ValueError(f"window of length {window.size} is too short for periodicity m={m}")
    return float(np.mean(np.abs(window[m:] - window[:-m])))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 128
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("training hyperparameters must be positive")
        if self.patience > self.max_epochs:
            raise ValueError("patience must not exceed max_epochs")


def _mae(model: ForecastModel, X, Y) -> float:
    return float(np.mean(np.abs(model.predict_batch(X) - Y)))


def train(model: ForecastModel, train_windows, val_windows, config: TrainConfig):
    """Fit ``model`` in place with mini-batch Adam on MAE.

    Window arguments are anything with ``inputs``/``targets`` arrays
    (e.g. :class:`~forecast_cf.series_data.WindowSet`). Training stops once
    the validation MAE has not improved for ``patience`` epochs; the
    parameters of the best validation epoch are restored. Returns the model
    and a list of ``(train_mae, val_mae)`` tuples, one per epoch.
    """
    Xtr, Ytr = np.asarray(train_windows.inputs, float), np.asarray(train_windows.targets, float)
    Xva, Yva = np.asarray(val_windows.inputs, float), np.asarray(val_windows.targets, float)
    if len(Xtr) == 0 or len(Xva) == 0:
        raise DataError("training needs at least one training and one validation window")

    rng = np.random.default_rng(config.seed)
    adam = AdamConfig(learning_rate=config.learning_rate)
    params = model.params
    state = AdamState.zeros(params.size)
    best_val, best_params, best_epoch = np.inf, params.copy(), 0
    history: list[tuple[float, float]] = []

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(Xtr))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            resid = model.predict_batch(Xtr[idx]) - Ytr[idx]
            total += float(np.abs(resid).sum())
            upstream = np.sign(resid) / resid.size
            params, state = adam_step(model.params, model.param_gradient(Xtr[idx], upstream), state, adam)
            model.params = params
        train_mae = total / Ytr.size
        val_mae = _mae(model, Xva, Yva)
        history.append((train_mae, val_mae))
        if val_mae < best_val:
            best_val, best_params, best_epoch = val_mae, model.params.copy(), epoch
        elif epoch - best_epoch >= config.patience:
            logger.info("early stopping at epoch %d (best epoch %d)", epoch, best_epoch)
            break

    model.params = best_params
    logger.info("best validation MAE %.6f at epoch %d", best_val, best_epoch)
    return model, history


def save_checkpoint(model: ForecastModel, path, seed: int = 0, train_config: TrainConfig | None = None) -> None:
    record = {
        "format_version": CHECKPOINT_VERSION,
        "kind": model.kind,
        "d": model.d,
        "T": model.T,
        "options": model.config(),
        "seed": seed,
        "train_config": asdict(train_config) if train_config else None,
        # repr() of a float round-trips exactly, so loading is bit-exact
        "params": [float(p) for p in model.params],
    }
    Path(path).write_text(json.dumps(record, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path) -> ForecastModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: checkpoint not found")
    record = json.loads(path.read_text(encoding="utf-8"))
    if record.get("format_version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {record.get('format_version')}")
    model = build_model(record["kind"], record["d"], record["T"], **record.get("options", {}))
    params = np.array(record["params"], dtype=float)
    if params.size:
        model.params = params
    return model
