"""Tree ensembles: bootstrap-bagged Gini forests and logistic-loss gradient
boosting over regression trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, NumericError
from .common import Prediction, sigmoid, check_training_set


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 4
    seed: int = 0
    # feature subsample per split is ceil(sqrt(d)); bootstrap always on

    def __post_init__(self):
        if self.max_depth < 1:
            raise DataError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.n_trees < 1:
            raise DataError(f"n_trees must be >= 1, got {self.n_trees}")


@dataclass(frozen=True)
class BoostConfig:
    n_estimators: int = 50
    learning_rate: float = 0.5
    max_depth: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 0:
            raise DataError(f"n_estimators must be >= 0, got {self.n_estimators}")
        if self.learning_rate <= 0:
            raise DataError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_depth < 1:
            raise DataError(f"max_depth must be >= 1, got {self.max_depth}")


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "._Node | None" = None
    right: "._Node | None" = None
    value: float = 0.0  # class-1 fraction (forest) or leaf step (boosting)
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _tree_apply(node: _Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if nd.is_leaf:
            out[idx] = nd.value
            continue
        goes_left = X[idx, nd.feature] <= nd.threshold
        stack.append((nd.left, idx[goes_left]))
        stack.append((nd.right, idx[~goes_left]))
    return out


def tree_depth(node: _Node) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def _split_candidates(col: np.ndarray) -> np.ndarray:
    vals = np.unique(col)
    if len(vals) < 2:
        return np.empty(0)
    return (vals[:-1] + vals[1:]) / 2.0


def _gini(y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    p = y.mean()
    return 2.0 * p * (1.0 - p)


def _best_gini_split(X, y, features):
    best = (None, None, _gini(y))  # feature, threshold, weighted impurity
    n = len(y)
    for f in features:
        col = X[:, f]
        for t in _split_candidates(col):
            mask = col <= t
            n_l = int(mask.sum())
            if n_l == 0 or n_l == n:
                continue
            impurity = (n_l * _gini(y[mask]) + (n - n_l) * _gini(y[~mask])) / n
            if impurity < best[2] - 1e-15:
                best = (f, t, impurity)
    return best


def _grow_gini_tree(X, y, depth, config, rng) -> _Node:
    node = _Node(depth=depth, value=float(y.mean()))
    if depth >= config.max_depth or len(np.unique(y)) == 1 or len(y) < 2:
        return node
    d = X.shape[1]
    k = max(1, int(np.ceil(np.sqrt(d))))
    features = np.sort(rng.choice(d, size=min(k, d), replace=False))
    f, t, _ = _best_gini_split(X, y, features)
    if f is None:
        return node
    mask = X[:, f] <= t
    node.feature, node.threshold = int(f), float(t)
    node.left = _grow_gini_tree(X[mask], y[mask], depth + 1, config, rng)
    node.right = _grow_gini_tree(X[~mask], y[~mask], depth + 1, config, rng)
    return node


@dataclass(frozen=True)
class ForestModel:
    trees: list
    config: ForestConfig


def forest_train(X: np.ndarray, y: np.ndarray, config: ForestConfig) -> ForestModel:
    """Bootstrap-bagged Gini trees capped at max_depth; deterministic per seed."""
    X, y = check_training_set(X, np.asarray(y, dtype=np.float64))
    rng = np.random.default_rng(config.seed)
    trees = []
    for _ in range(config.n_trees):
        idx = rng.integers(0, len(y), size=len(y))
        trees.append(_grow_gini_tree(X[idx], y[idx], 0, config, rng))
    return ForestModel(trees=trees, config=config)


def forest_scores(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Fraction of trees voting deceptive (leaf majority, ties to deceptive)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    votes = np.zeros(len(X))
    for tree in model.trees:
        votes += (_tree_apply(tree, X) >= 0.5).astype(np.float64)
    return votes / len(model.trees)


def forest_predict(model: ForestModel, x: np.ndarray, unit_id: str = "") -> Prediction:
    return Prediction(unit_id=unit_id, score=float(forest_scores(model, np.atleast_2d(x))[0]))


# -- gradient boosting ---------------------------------------------------------

def _best_variance_split(X, y):
    n = len(y)
    base = float(((y - y.mean()) ** 2).sum())
    best = (None, None, base)
    for f in range(X.shape[1]):
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        col_s, y_s = col[order], y[order]
        csum = np.cumsum(y_s)
        csq = np.cumsum(y_s ** 2)
        for t in _split_candidates(col):
            n_l = int(np.searchsorted(col_s, t, side="right"))
            if n_l == 0 or n_l == n:
                continue
            sse_l = csq[n_l - 1] - csum[n_l - 1] ** 2 / n_l
            sum_r = csum[-1] - csum[n_l - 1]
            sse_r = (csq[-1] - csq[n_l - 1]) - sum_r ** 2 / (n - n_l)
            total = sse_l + sse_r
            if total < best[2] - 1e-12:
                best = (f, t, total)
    return best


def _grow_regression_tree(X, residuals, hessians, depth, max_depth) -> _Node:
    # Newton leaf: sum(residuals) / sum(hessians), the logistic-loss step.
    denom = max(hessians.sum(), 1e-12)
    node = _Node(depth=depth, value=float(np.clip(residuals.sum() / denom, -4.0, 4.0)))
    if depth >= max_depth or len(residuals) < 2:
        return node
    f, t, _ = _best_variance_split(X, residuals)
    if f is None:
        return node
    mask = X[:, f] <= t
    node.feature, node.threshold = int(f), float(t)
    node.left = _grow_regression_tree(X[mask], residuals[mask], hessians[mask],
                                      depth + 1, max_depth)
    node.right = _grow_regression_tree(X[~mask], residuals[~mask], hessians[~mask],
                                       depth + 1, max_depth)
    return node


@dataclass(frozen=True)
class BoostModel:
    base_margin: float
    trees: list
    config: BoostConfig
    train_losses: list  # logistic loss after each stage, stage 0 = prior only


def _log_loss(y: np.ndarray, margin: np.ndarray) -> float:
    # Stable binary cross-entropy on logits.
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def boost_train(X: np.ndarray, y: np.ndarray, config: BoostConfig) -> BoostModel:
    """Gradient boosting with logistic loss.

    Stage m fits a regression tree to the negative gradient (y - p) and adds
    it with the learning rate; with n_estimators = 0 the model is the
    empirical log-odds prior.
    """
    X, y = check_training_set(X, np.asarray(y, dtype=np.float64))
    if set(np.unique(y)) != {0.0, 1.0}:
        raise DataError("boost_train labels must be 0/1")
    prior = y.mean()
    margin0 = float(np.log(prior / (1.0 - prior)))
    margin = np.full(len(y), margin0)
    trees = []
    losses = [_log_loss(y, margin)]
    for _ in range(config.n_estimators):
        p = sigmoid(margin)
        residuals = y - p
        hessians = p * (1.0 - p)
        tree = _grow_regression_tree(X, residuals, hessians, 0, config.max_depth)
        margin = margin + config.learning_rate * _tree_apply(tree, X)
        if not np.all(np.isfinite(margin)):
            raise NumericError("non-finite boosting margin")
        trees.append(tree)
        losses.append(_log_loss(y, margin))
    return BoostModel(base_margin=margin0, trees=trees, config=config,
                      train_losses=losses)


def boost_scores(model: BoostModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    margin = np.full(len(X), model.base_margin)
    for tree in model.trees:
        margin += model.config.learning_rate * _tree_apply(tree, X)
    return sigmoid(margin)


def boost_predict(model: BoostModel, x: np.ndarray, unit_id: str = "") -> Prediction:
    return Prediction(unit_id=unit_id, score=float(boost_scores(model, np.atleast_2d(x))[0]))
