"""Model-free comparison generators: nearest training window and multiplicative shift."""

from __future__ import annotations

import numpy as np

from .bounds import TrajectoryBounds


class TrainingBank:
    """Training windows searched by :func:`base_nn`, kept in the normalized space."""

    def __init__(self, inputs, targets):
        self.inputs = np.asarray(inputs, dtype=float)
        self.targets = np.asarray(targets, dtype=float)
        if self.inputs.ndim != 2 or self.targets.ndim != 2 or len(self.inputs) != len(self.targets):
            raise ValueError("bank inputs and targets must be 2-d arrays with the same number of rows")

    @classmethod
    def from_windows(cls, windows) -> TrainingBank:
        return cls(windows.inputs, windows.targets)

    def __len__(self):
        return len(self.inputs)


def nearest_index(bank: TrainingBank, bounds: TrajectoryBounds) -> int:
    if len(bank) == 0:
        raise ValueError("BaseNN needs a non-empty training bank")
    if bank.targets.shape[1] != len(bounds):
        raise ValueError(f"bank horizon {bank.targets.shape[1]} does not match bounds of length {len(bounds)}")
    dist = np.linalg.norm(bank.targets - bounds.midpoint, axis=1)
    # argmin returns the first occurrence, which is the tie-break rule
    return int(np.argmin(dist))


def base_nn(bank: TrainingBank, bounds: TrajectoryBounds) -> np.ndarray:
    """Input window of the training sample whose target is closest to the band midpoint."""
    return bank.inputs[nearest_index(bank, bounds)].copy()


def base_shift(x, cp: float) -> np.ndarray:
    return np.asarray(x, dtype=float) * (1.0 + cp)
