"""Evaluation metrics with deceptive as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

from .dataset_registry import Label
from .errors import ContractError, DataError


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    n_videos: int
    n_abstained: int

    @property
    def n_scored(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "n_videos": self.n_videos, "n_scored": self.n_scored,
            "n_abstained": self.n_abstained,
        }


def evaluate(predictions: dict[str, Label | None], truth: dict[str, Label]) -> Metrics:
    """Confusion-based metrics over aligned video ids.

    A None prediction is an abstention: counted in n_abstained and excluded
    from the scored denominator. At least one video must be scored.
    """
    if set(predictions) != set(truth):
        raise ContractError("predictions and truth must cover the same video ids")
    tp = fp = fn = tn = abstained = 0
    for vid, predicted in predictions.items():
        actual = truth[vid]
        if predicted is None:
            abstained += 1
        elif predicted is Label.DECEPTIVE and actual is Label.DECEPTIVE:
            tp += 1
        elif predicted is Label.DECEPTIVE and actual is Label.TRUTHFUL:
            fp += 1
        elif predicted is Label.TRUTHFUL and actual is Label.DECEPTIVE:
            fn += 1
        else:
            tn += 1
    n_scored = tp + fp + fn + tn
    if n_scored == 0:
        raise DataError("zero scored videos: every prediction abstained")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(accuracy=(tp + tn) / n_scored, precision=precision, recall=recall,
                   f1=f1, tp=tp, fp=fp, fn=fn, tn=tn,
                   n_videos=len(predictions), n_abstained=abstained)
