"""Multinomial naive Bayes over token count vectors with Laplace smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset_registry import Label
from ..errors import ContractError, DataError
from .common import Prediction


@dataclass(frozen=True)
class NBConfig:
    alpha: float = 1.0  # Laplace smoothing

    def __post_init__(self):
        if self.alpha <= 0:
            raise DataError(f"smoothing alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class MNBModel:
    log_prior: np.ndarray       # [truthful, deceptive]
    log_likelihood: np.ndarray  # 2 x V, rows sum to 1 in probability space
    config: NBConfig

    def __post_init__(self):
        sums = np.exp(self.log_likelihood).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ContractError(f"class likelihoods sum to {sums}, expected 1")


def mnb_train(counts: np.ndarray, labels: np.ndarray,
              config: NBConfig | None = None) -> MNBModel:
    """Standard smoothed multinomial likelihoods plus log priors.

    counts: n_docs x vocab nonnegative integers; labels: 0/1 with
    deceptive = 1. Both classes must be present.
    """
    config = config or NBConfig()
    counts = np.asarray(counts, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if counts.ndim != 2 or counts.shape[0] != labels.shape[0]:
        raise DataError(f"bad shapes counts={counts.shape} labels={labels.shape}")
    if np.any(counts < 0):
        raise DataError("negative token counts")
    if set(np.unique(labels)) != {0, 1}:
        raise DataError("mnb_train needs both classes present (labels 0 and 1)")

    n_classes, vocab = 2, counts.shape[1]
    log_prior = np.empty(n_classes)
    log_likelihood = np.empty((n_classes, vocab))
    for c in range(n_classes):
        class_counts = counts[labels == c].sum(axis=0)
        log_prior[c] = np.log((labels == c).sum() / len(labels))
        smoothed = class_counts + config.alpha
        log_likelihood[c] = np.log(smoothed / smoothed.sum())
    return MNBModel(log_prior=log_prior, log_likelihood=log_likelihood, config=config)


def mnb_posterior(model: MNBModel, counts: np.ndarray) -> np.ndarray:
    """[P(truthful|doc), P(deceptive|doc)], summing to 1."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (model.log_likelihood.shape[1],):
        raise ContractError(f"count vector of length {counts.shape} does not match "
                            f"vocabulary size {model.log_likelihood.shape[1]}")
    if np.any(counts < 0):
        raise DataError("negative token counts")
    joint = model.log_prior + model.log_likelihood @ counts
    joint -= joint.max()
    post = np.exp(joint)
    return post / post.sum()


def mnb_predict(model: MNBModel, counts: np.ndarray, unit_id: str = "") -> Prediction:
    """Posterior P(deceptive) as the score; an exact tie goes to deceptive
    (the positive class) via the inclusive threshold."""
    return Prediction(unit_id=unit_id, score=float(mnb_posterior(model, counts)[1]))
