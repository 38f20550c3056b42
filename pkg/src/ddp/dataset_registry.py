"""Dataset manifests, automatic labeling, and leakage-free splits.

A manifest is UTF-8 line-delimited JSON, one video per line, with keys
``id, dataset, media, transcript, label, truth_prop, speaker, duration_s``.
Unknown keys are ignored. Splits are always at the video level so that no
frame, chunk, or token of one video can appear on both sides.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DataError

# Project-wide label encoding: deceptive is the positive class.
class Label(Enum):
    TRUTHFUL = 0
    DECEPTIVE = 1


class DatasetTag(Enum):
    RLT = "rlt"
    MU3D = "mu3d"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class VideoRecord:
    id: str
    dataset_tag: DatasetTag
    media_path: Path
    transcript_path: Path
    label: Label | None = None
    truth_prop: float | None = None
    speaker_id: str | None = None
    duration_s: float | None = None


@dataclass(frozen=True)
class DatasetConfig:
    mu3d_truth_threshold: float = 0.70
    test_fraction: float = 0.2
    n_folds: int | None = None
    split_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.mu3d_truth_threshold < 1.0:
            raise DataError(
                f"mu3d_truth_threshold must be in (0,1), got {self.mu3d_truth_threshold}"
            )
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError(f"test_fraction must be in (0,1), got {self.test_fraction}")
        if self.n_folds is not None and self.n_folds < 2:
            raise DataError(f"n_folds must be >= 2, got {self.n_folds}")


@dataclass(frozen=True)
class SplitPlan:
    train_ids: frozenset[str]
    test_ids: frozenset[str]
    seed: int
    fold_index: int | None = None

    def __post_init__(self):
        overlap = self.train_ids & self.test_ids
        if overlap:
            raise DataError(f"split shares ids across sides: {sorted(overlap)[:5]}")

    def to_json(self) -> str:
        return json.dumps(
            {"seed": self.seed, "train": sorted(self.train_ids), "test": sorted(self.test_ids)},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        obj = json.loads(text)
        return cls(
            train_ids=frozenset(obj["train"]),
            test_ids=frozenset(obj["test"]),
            seed=int(obj["seed"]),
        )


_LABEL_NAMES = {"deceptive": Label.DECEPTIVE, "truthful": Label.TRUTHFUL}


def _parse_record(obj: dict, lineno: int) -> VideoRecord:
    try:
        vid = str(obj["id"])
        tag = DatasetTag(obj["dataset"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"manifest line {lineno}: {exc}") from exc

    label = None
    if obj.get("label") is not None:
        if obj["label"] not in _LABEL_NAMES:
            raise DataError(f"manifest line {lineno}: unknown label {obj['label']!r}")
        label = _LABEL_NAMES[obj["label"]]

    truth_prop = obj.get("truth_prop")
    if truth_prop is not None:
        truth_prop = float(truth_prop)
        if not 0.0 <= truth_prop <= 1.0:
            raise DataError(
                f"manifest line {lineno}: truth_prop {truth_prop} outside [0,1] for id {vid!r}"
            )

    if label is None and tag in (DatasetTag.RLT, DatasetTag.SYNTHETIC):
        raise DataError(f"manifest line {lineno}: {tag.value} record {vid!r} missing label")

    duration = obj.get("duration_s")
    return VideoRecord(
        id=vid,
        dataset_tag=tag,
        media_path=Path(obj.get("media", "")),
        transcript_path=Path(obj.get("transcript", "")),
        label=label,
        truth_prop=truth_prop,
        speaker_id=obj.get("speaker"),
        duration_s=float(duration) if duration is not None else None,
    )


def load_manifest(path: Path | str) -> list[VideoRecord]:
    """Parse a line-delimited manifest, preserving record order.

    Raises DataError on a missing file, a duplicate id, or an out-of-range
    truth_prop. Unlabeled mu3d records are permitted (labels derive from
    truth_prop later).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    records: list[VideoRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"manifest line {lineno}: invalid JSON: {exc}") from exc
        rec = _parse_record(obj, lineno)
        if rec.id in seen:
            raise DataError(f"manifest line {lineno}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    return records


def write_manifest(records: list[VideoRecord], path: Path | str) -> Path:
    """Inverse of load_manifest; load(write(records)) == records."""
    path = Path(path)
    lines = []
    for rec in records:
        obj = {"id": rec.id, "dataset": rec.dataset_tag.value, "media": str(rec.media_path),
               "transcript": str(rec.transcript_path)}
        if rec.label is not None:
            obj["label"] = rec.label.name.lower()
        if rec.truth_prop is not None:
            obj["truth_prop"] = rec.truth_prop
        if rec.speaker_id is not None:
            obj["speaker"] = rec.speaker_id
        if rec.duration_s is not None:
            obj["duration_s"] = rec.duration_s
        lines.append(json.dumps(obj, sort_keys=True))
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def label_mu3d(truth_prop: float, config: DatasetConfig) -> Label:
    """Derive a label from the fraction of raters judging the video truthful.

    The threshold itself is classified truthful (inclusive boundary).
    """
    if not 0.0 <= truth_prop <= 1.0:
        raise DataError(f"truth_prop {truth_prop} outside [0,1]")
    if truth_prop >= config.mu3d_truth_threshold:
        return Label.TRUTHFUL
    return Label.DECEPTIVE


def resolve_labels(records: list[VideoRecord], config: DatasetConfig) -> list[VideoRecord]:
    """Fill in missing labels on mu3d records from truth_prop."""
    out = []
    for rec in records:
        if rec.label is None:
            if rec.truth_prop is None:
                raise DataError(f"record {rec.id!r} has neither label nor truth_prop")
            rec = VideoRecord(
                id=rec.id, dataset_tag=rec.dataset_tag, media_path=rec.media_path,
                transcript_path=rec.transcript_path, label=label_mu3d(rec.truth_prop, config),
                truth_prop=rec.truth_prop, speaker_id=rec.speaker_id, duration_s=rec.duration_s,
            )
        out.append(rec)
    return out


def _ids_by_class(records: list[VideoRecord]) -> dict[Label, list[str]]:
    by_class: dict[Label, list[str]] = {}
    for rec in records:
        if rec.label is None:
            raise DataError(f"record {rec.id!r} unlabeled; resolve labels before splitting")
        by_class.setdefault(rec.label, []).append(rec.id)
    if len(by_class) < 2:
        raise DataError("cannot split a single-class manifest")
    for label, ids in by_class.items():
        if len(ids) < 2:
            raise DataError(f"need >= 2 records per class, class {label.name} has {len(ids)}")
    return by_class


def make_split(records: list[VideoRecord], config: DatasetConfig) -> SplitPlan:
    """Video-level stratified split.

    Shuffle rule: within each class, ids are sorted, shuffled by
    random.Random(split_seed), and the first round(test_fraction * n_class)
    (at least 1, at most n_class - 1) become test ids. Deterministic for a
    given seed and independent of input record order.
    """
    by_class = _ids_by_class(records)
    rng = random.Random(config.split_seed)
    test: set[str] = set()
    train: set[str] = set()
    for label in sorted(by_class, key=lambda l: l.value):
        ids = sorted(by_class[label])
        rng.shuffle(ids)
        n_test = round(config.test_fraction * len(ids))
        n_test = min(max(n_test, 1), len(ids) - 1)
        test.update(ids[:n_test])
        train.update(ids[n_test:])
    return SplitPlan(train_ids=frozenset(train), test_ids=frozenset(test), seed=config.split_seed)


def make_folds(records: list[VideoRecord], config: DatasetConfig) -> list[SplitPlan]:
    """Stratified k-fold plans (round-robin after the seeded shuffle)."""
    if config.n_folds is None:
        raise DataError("n_folds not set in DatasetConfig")
    by_class = _ids_by_class(records)
    rng = random.Random(config.split_seed)
    fold_of: dict[str, int] = {}
    for label in sorted(by_class, key=lambda l: l.value):
        ids = sorted(by_class[label])
        rng.shuffle(ids)
        for i, vid in enumerate(ids):
            fold_of[vid] = i % config.n_folds
    plans = []
    all_ids = set(fold_of)
    for k in range(config.n_folds):
        test = frozenset(v for v, f in fold_of.items() if f == k)
        plans.append(SplitPlan(train_ids=frozenset(all_ids - test), test_ids=test,
                               seed=config.split_seed, fold_index=k))
    return plans
