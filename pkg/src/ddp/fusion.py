"""Video-level aggregation of unit predictions and voting across modalities."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .classifiers.common import DECISION_THRESHOLD, Prediction, score_to_label
from .dataset_registry import Label
from .errors import ContractError, DataError


class Modality(Enum):
    VISUAL = "visual"
    ACOUSTIC = "acoustic"
    LEXICAL = "lexical"


class FusionMode(Enum):
    HARD_MAJORITY = "hard_majority"
    SOFT_MEAN = "soft_mean"


@dataclass(frozen=True)
class ModalityVerdict:
    modality: Modality
    video_id: str
    score: float | None  # absent iff abstaining
    n_units: int

    def __post_init__(self):
        if (self.n_units == 0) != (self.score is None):
            raise ContractError(
                f"abstention requires n_units == 0 and score absent together "
                f"(got n_units={self.n_units}, score={self.score})")

    @property
    def abstained(self) -> bool:
        return self.score is None

    @property
    def label(self) -> Label | None:
        return None if self.score is None else score_to_label(self.score)


@dataclass(frozen=True)
class FusedVerdict:
    video_id: str
    label: Label
    mode: FusionMode
    verdicts: tuple[ModalityVerdict, ...]


def aggregate_units(preds: list[Prediction], modality: Modality,
                    video_id: str) -> ModalityVerdict:
    """Mean of unit scores; label via the inclusive 0.5 threshold; empty
    input is an abstention, never a fabricated score."""
    for p in preds:
        if p.unit_id != video_id and not p.unit_id.startswith(video_id + "@"):
            raise ContractError(
                f"prediction for unit {p.unit_id!r} mixed into video {video_id!r}")
    if not preds:
        return ModalityVerdict(modality=modality, video_id=video_id, score=None, n_units=0)
    mean = sum(p.score for p in preds) / len(preds)
    return ModalityVerdict(modality=modality, video_id=video_id,
                           score=mean, n_units=len(preds))


def vote(verdicts: list[ModalityVerdict], mode: FusionMode) -> FusedVerdict:
    """Combine exactly one verdict per modality into a final label.

    hard_majority: majority over non-abstaining labels; with two voters in
    disagreement the one with the larger |score - 0.5| wins (an exact
    confidence tie goes to deceptive); a single voter decides alone.
    soft_mean: mean of non-abstaining scores against the 0.5 threshold.
    All three abstaining is a data error ("no evidence").
    """
    if len(verdicts) != 3 or {v.modality for v in verdicts} != set(Modality):
        raise ContractError("vote needs exactly one verdict per modality")
    vids = {v.video_id for v in verdicts}
    if len(vids) != 1:
        raise ContractError(f"vote across different videos: {sorted(vids)}")
    video_id = verdicts[0].video_id
    active = [v for v in verdicts if not v.abstained]
    if not active:
        raise DataError(f"no evidence for video {video_id}: all modalities abstained")

    if mode is FusionMode.SOFT_MEAN:
        mean = sum(v.score for v in active) / len(active)
        label = score_to_label(mean)
    else:
        deceptive = sum(1 for v in active if v.label is Label.DECEPTIVE)
        truthful = len(active) - deceptive
        if deceptive != truthful:
            label = Label.DECEPTIVE if deceptive > truthful else Label.TRUTHFUL
        else:
            # Exactly two voters disagreeing: higher confidence wins.
            a, b = active
            da, db = abs(a.score - DECISION_THRESHOLD), abs(b.score - DECISION_THRESHOLD)
            if da > db:
                label = a.label
            elif db > da:
                label = b.label
            else:
                label = Label.DECEPTIVE
    return FusedVerdict(video_id=video_id, label=label, mode=mode,
                        verdicts=tuple(sorted(verdicts, key=lambda v: v.modality.value)))
