"""Shared prediction type and score/label conventions.

Every classifier emits a Prediction whose score is P(deceptive); the label
derives from the fixed inclusive threshold (score >= 0.5 => deceptive), so
score and label can never disagree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset_registry import Label
from ..errors import DataError

DECISION_THRESHOLD = 0.5


def score_to_label(score: float) -> Label:
    return Label.DECEPTIVE if score >= DECISION_THRESHOLD else Label.TRUTHFUL


@dataclass(frozen=True)
class Prediction:
    unit_id: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise DataError(f"score {self.score} outside [0,1] for unit {self.unit_id}")

    @property
    def label(self) -> Label:
        return score_to_label(self.score)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def check_training_set(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Common preconditions: finite features, two classes present."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"bad training shapes X={X.shape} y={y.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values in training set")
    if len(np.unique(y)) < 2:
        raise DataError("training set contains a single class")
    return X, y
