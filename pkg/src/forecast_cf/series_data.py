"""Series ingestion, chronological splitting, rolling-origin windowing and min-max scaling."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

CSV_HEADER = ("series_id", "timestamp", "value")


@dataclass
class TimeSeries:
    id: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise DataError(f"series {self.id!r}: need a non-empty 1-d sequence of values")
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"series {self.id!r}: non-finite values are not accepted")

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class SplitSpec:
    back_horizon: int
    horizon: int
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    stride: int = 1

    def __post_init__(self):
        for name in ("train_frac", "val_frac", "test_frac"):
            frac = getattr(self, name)
            if not 0.0 < frac < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {frac}")
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")
        for name in ("back_horizon", "horizon", "stride"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class WindowPair:
    series_id: str
    input: np.ndarray
    target: np.ndarray
    origin_index: int


@dataclass(frozen=True)
class Scaler:
    series_id: str
    min: float
    max: float

    @property
    def degenerate(self) -> bool:
        return self.max == self.min

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.degenerate:
            return np.zeros_like(v)
        return (v - self.min) / (self.max - self.min)

    def invert(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.degenerate:
            return np.full_like(v, self.min)
        return v * (self.max - self.min) + self.min


def fit_scaler(train_chunk, series_id: str = "") -> Scaler:
    train_chunk = np.asarray(train_chunk, dtype=float)
    if train_chunk.size == 0:
        raise DataError(f"series {series_id!r}: cannot fit a scaler on an empty chunk")
    return Scaler(series_id, float(train_chunk.min()), float(train_chunk.max()))


def apply_scale(scaler: Scaler, v) -> np.ndarray:
    return scaler.apply(v)


def invert_scale(scaler: Scaler, v) -> np.ndarray:
    return scaler.invert(v)


def _parse_timestamp(raw: str):
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise ValueError(f"timestamp {raw!r} is neither an integer nor ISO-8601") from None


def load_csv(path) -> dict[str, TimeSeries]:
    """Read a long-format ``series_id,timestamp,value`` CSV.

    Rows of different series may be interleaved, but within one series the
    timestamps must be strictly increasing in file order. Errors carry the
    1-based file line number of the offending row.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")

    values: dict[str, list[float]] = {}
    last_ts: dict[str, object] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: no data rows")
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}, row {line}: expected 3 fields, got {len(row)}")
            sid, raw_ts, raw_value = (cell.strip() for cell in row)
            try:
                value = float(raw_value)
            except ValueError:
                raise DataError(f"{path}, row {line}: non-numeric value {raw_value!r}") from None
            if not math.isfinite(value):
                raise DataError(f"{path}, row {line}: non-finite value {raw_value!r}")
            try:
                ts = _parse_timestamp(raw_ts)
            except ValueError as exc:
                raise DataError(f"{path}, row {line}: {exc}") from None
            if sid in last_ts:
                prev = last_ts[sid]
                try:
                    if ts == prev:
                        raise DataError(f"{path}, row {line}: duplicate timestamp {raw_ts!r} for series {sid!r}")
                    if ts < prev:
                        raise DataError(f"{path}, row {line}: timestamps for series {sid!r} are not increasing")
                except TypeError:
                    raise DataError(f"{path}, row {line}: mixed timestamp types in series {sid!r}") from None
            last_ts[sid] = ts
            values.setdefault(sid, []).append(value)

    if not values:
        raise DataError(f"{path}: no data rows")
    return {sid: TimeSeries(sid, vals) for sid, vals in values.items()}


def write_csv(series, path) -> None:
    """Write series to long format with integer timestamps 0..n-1."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for ts in series:
            for i, v in enumerate(ts.values):
                writer.writerow((ts.id, i, repr(float(v))))


def split_lengths(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    # the 1e-9 guard keeps e.g. 100 * 0.29 = 28.999999999999996 from flooring to 28
    n_train = int(math.floor(n * spec.train_frac + 1e-9))
    n_val = int(math.floor(n * spec.val_frac + 1e-9))
    return n_train, n_val, n - n_train - n_val


def chronological_split(series: TimeSeries, spec: SplitSpec):
    """Cut a series into contiguous train/validation/test chunks (floor, floor, remainder)."""
    n = len(series)
    if n < 3:
        raise DataError(f"series {series.id!r}: {n} steps cannot be split into three chunks")
    n_train, n_val, _ = split_lengths(n, spec)
    v = series.values
    return v[:n_train].copy(), v[n_train:n_train + n_val].copy(), v[n_train + n_val:].copy()


def make_windows(chunk, d: int, T: int, stride: int = 1, series_id: str = "", offset: int = 0) -> list[WindowPair]:
    """Rolling-origin windows over ``chunk``.

    ``offset`` is the position of ``chunk[0]`` in the source series, so that
    ``origin_index`` refers to source-series coordinates. A chunk shorter
    than ``d + T`` yields no windows.
    """
    chunk = np.asarray(chunk, dtype=float)
    windows = []
    for origin in range(0, chunk.size - d - T + 1, stride):
        windows.append(WindowPair(
            series_id=series_id,
            input=chunk[origin:origin + d].copy(),
            target=chunk[origin + d:origin + d + T].copy(),
            origin_index=offset + origin,
        ))
    return windows


def window_count(length: int, d: int, T: int, stride: int) -> int:
    if length < d + T:
        return 0
    return (length - d - T) // stride + 1


@dataclass
class WindowSet:
    """Stacked windows of one split; rows align across all fields."""

    series_ids: list[str]
    origins: np.ndarray
    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return len(self.series_ids)

    @classmethod
    def empty(cls, d: int, T: int) -> WindowSet:
        return cls([], np.zeros(0, dtype=int), np.zeros((0, d)), np.zeros((0, T)))

    @classmethod
    def from_pairs(cls, pairs: list[WindowPair], d: int, T: int) -> WindowSet:
        if not pairs:
            return cls.empty(d, T)
        return cls(
            series_ids=[p.series_id for p in pairs],
            origins=np.array([p.origin_index for p in pairs], dtype=int),
            inputs=np.stack([p.input for p in pairs]),
            targets=np.stack([p.target for p in pairs]),
        )

    def pairs(self) -> list[WindowPair]:
        return [WindowPair(s, x, y, int(o)) for s, o, x, y in
                zip(self.series_ids, self.origins, self.inputs, self.targets)]


@dataclass
class PreparedData:
    d: int
    T: int
    train: WindowSet
    val: WindowSet
    test: WindowSet
    scalers: dict[str, Scaler]
    skipped: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        return {"train": len(self.train), "val": len(self.val), "test": len(self.test)}


def prepare_windows(series, spec: SplitSpec) -> PreparedData:
    """Split, scale and window every series, then pool the chunks per split.

    Series too short to split, or whose training chunk cannot hold one
    window, are skipped. Shorter validation or test chunks contribute no
    windows. Every case is recorded as a warning.
    """
    d, T, stride = spec.back_horizon, spec.horizon, spec.stride
    buckets: dict[str, list[WindowPair]] = {"train": [], "val": [], "test": []}
    scalers: dict[str, Scaler] = {}
    skipped, warnings = [], []

    for ts in series:
        try:
            chunks = chronological_split(ts, spec)
        except DataError as exc:
            skipped.append(ts.id)
            warnings.append(str(exc))
            continue
        if chunks[0].size < d + T:
            skipped.append(ts.id)
            warnings.append(f"series {ts.id!r}: training chunk of {chunks[0].size} steps is shorter than d+T={d + T}")
            continue
        scaler = fit_scaler(chunks[0], ts.id)
        scalers[ts.id] = scaler
        offset = 0
        for name, chunk in zip(("train", "val", "test"), chunks):
            pairs = make_windows(scaler.apply(chunk), d, T, stride, ts.id, offset)
            if not pairs:
                warnings.append(f"series {ts.id!r}: {name} chunk of {chunk.size} steps is shorter than d+T={d + T}")
            buckets[name].extend(pairs)
            offset += chunk.size

    for msg in warnings:
        logger.warning(msg)
    return PreparedData(
        d=d, T=T,
        train=WindowSet.from_pairs(buckets["train"], d, T),
        val=WindowSet.from_pairs(buckets["val"], d, T),
        test=WindowSet.from_pairs(buckets["test"], d, T),
        scalers=scalers, skipped=skipped, warnings=warnings,
    )
