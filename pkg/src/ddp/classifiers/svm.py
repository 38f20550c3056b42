"""Binary SVM trained by sequential minimal optimization on the dual.

Labels are +/-1 internally (+1 = deceptive). Scores come out
sigmoid-calibrated from the raw margin so fusion can average them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ContractError, DataError
from .common import Prediction, sigmoid, check_training_set


class KernelKind(Enum):
    RBF = "rbf"
    POLY = "poly"
    LINEAR = "linear"


@dataclass(frozen=True)
class SVMConfig:
    C: float = 1.0
    kernel: KernelKind = KernelKind.RBF
    gamma: float = 1.0
    coef0: float = 0.0
    degree: int = 3
    tol: float = 1e-3
    max_passes: int = 10

    def __post_init__(self):
        if self.C <= 0:
            raise DataError(f"C must be positive, got {self.C}")
        if self.gamma <= 0 and self.kernel is not KernelKind.LINEAR:
            raise DataError(f"gamma must be positive, got {self.gamma}")
        if self.degree < 1:
            raise DataError(f"degree must be >= 1, got {self.degree}")


def kernel_eval(kind: KernelKind, config: SVMConfig, x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ContractError(f"kernel on mismatched shapes {x.shape} vs {y.shape}")
    if kind is KernelKind.RBF:
        d = x - y
        return float(np.exp(-config.gamma * np.dot(d, d)))
    if kind is KernelKind.POLY:
        return float((config.gamma * np.dot(x, y) + config.coef0) ** config.degree)
    return float(np.dot(x, y))


def kernel_matrix(kind: KernelKind, config: SVMConfig,
                  X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise kernel values, shape (len(X), len(Y))."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise ContractError(f"kernel on mismatched dims {X.shape[1]} vs {Y.shape[1]}")
    if kind is KernelKind.RBF:
        sq = (X ** 2).sum(1)[:, None] + (Y ** 2).sum(1)[None, :] - 2.0 * X @ Y.T
        return np.exp(-config.gamma * np.maximum(sq, 0.0))
    if kind is KernelKind.POLY:
        return (config.gamma * X @ Y.T + config.coef0) ** config.degree
    return X @ Y.T


@dataclass(frozen=True)
class SVMModel:
    support_vectors: np.ndarray
    sv_labels: np.ndarray       # +/-1
    alphas: np.ndarray
    bias: float
    config: SVMConfig

    def __post_init__(self):
        if np.any(self.alphas < -1e-9) or np.any(self.alphas > self.config.C + 1e-9):
            raise ContractError("dual coefficients outside [0, C]")
        if abs(float(self.alphas @ self.sv_labels)) > 1e-6:
            raise ContractError("dual equality constraint violated")

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        K = kernel_matrix(self.config.kernel, self.config, X, self.support_vectors)
        return K @ (self.alphas * self.sv_labels) + self.bias


def svm_train(X: np.ndarray, y: np.ndarray, config: SVMConfig,
              seed: int = 0) -> SVMModel:
    """SMO-style dual ascent until the KKT conditions hold within tol.

    Working-pair choice: first a maximal |E_i - E_j| partner, then a seeded
    random sweep, so training is deterministic per seed.
    """
    X, y = check_training_set(X, np.asarray(y, dtype=np.float64))
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("svm_train labels must be +/-1")

    n = len(y)
    C, tol = config.C, config.tol
    K = kernel_matrix(config.kernel, config, X, X)
    alphas = np.zeros(n)
    b = 0.0
    # F[k] = sum_j alpha_j y_j K[j,k]; errors E = F + b - y
    F = np.zeros(n)
    rng = np.random.default_rng(seed)

    def take_step(i: int, j: int) -> bool:
        nonlocal b, F
        if i == j:
            return False
        Ei = F[i] + b - y[i]
        Ej = F[j] + b - y[j]
        ai_old, aj_old = alphas[i], alphas[j]
        if y[i] != y[j]:
            L, H = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
        else:
            L, H = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
        if H - L < 1e-12:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0:
            return False
        aj_new = np.clip(aj_old - y[j] * (Ei - Ej) / eta, L, H)
        if abs(aj_new - aj_old) < 1e-12:
            return False
        ai_new = ai_old + y[i] * y[j] * (aj_old - aj_new)
        b1 = b - Ei - y[i] * (ai_new - ai_old) * K[i, i] - y[j] * (aj_new - aj_old) * K[i, j]
        b2 = b - Ej - y[i] * (ai_new - ai_old) * K[i, j] - y[j] * (aj_new - aj_old) * K[j, j]
        if 0.0 < ai_new < C:
            b = b1
        elif 0.0 < aj_new < C:
            b = b2
        else:
            b = 0.5 * (b1 + b2)
        F += (ai_new - ai_old) * y[i] * K[i] + (aj_new - aj_old) * y[j] * K[j]
        alphas[i], alphas[j] = ai_new, aj_new
        return True

    passes = 0
    max_iter = max(2000, 200 * n)
    iterations = 0
    while passes < config.max_passes and iterations < max_iter:
        iterations += 1
        changed = 0
        for i in range(n):
            Ei = F[i] + b - y[i]
            r = y[i] * Ei
            if (r < -tol and alphas[i] < C) or (r > tol and alphas[i] > 0):
                E = F + b - y
                j = int(np.argmax(np.abs(E - Ei)))
                if take_step(i, j):
                    changed += 1
                    continue
                for j in rng.permutation(n):
                    if take_step(i, int(j)):
                        changed += 1
                        break
        passes = passes + 1 if changed == 0 else 0

    alphas = np.clip(alphas, 0.0, C)
    support = alphas > 1e-10
    if not np.any(support):
        support = np.ones(n, dtype=bool)
    # Recompute the bias from the KKT conditions for numerical stability.
    margin = (alphas > 1e-8) & (alphas < C - 1e-8)
    if np.any(margin):
        b = float(np.mean(y[margin] - F[margin]))
    return SVMModel(support_vectors=X[support], sv_labels=y[support],
                    alphas=alphas[support], bias=float(b), config=config)


def svm_predict(model: SVMModel, x: np.ndarray, unit_id: str = "") -> Prediction:
    """Raw margin mapped through a sigmoid; label via the 0.5 threshold."""
    f = float(model.decision_function(np.atleast_2d(x))[0])
    return Prediction(unit_id=unit_id, score=float(sigmoid(f)))


def svm_predict_scores(model: SVMModel, X: np.ndarray) -> np.ndarray:
    return sigmoid(model.decision_function(X))
