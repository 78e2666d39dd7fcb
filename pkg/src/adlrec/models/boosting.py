"""Gradient boosting on multinomial deviance, one regression tree per class
per stage, leaf values by the one-step Newton update."""

from dataclasses import dataclass

import numpy as np

from .logreg import softmax
from .tree import Tree, build_regression_tree

DEFAULTS = {
    "n_stages": 100,
    "learning_rate": 0.1,
    "max_depth": 3,
    "min_samples_split": 2,
}


@dataclass
class BoostingModel:
    init_raw: np.ndarray  # (K,) log prior scores
    stages: list[list[Tree]]  # [stage][class]
    learning_rate: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        raw = np.tile(self.init_raw, (X.shape[0], 1))
        for stage in self.stages:
            for c, tree in enumerate(stage):
                raw[:, c] += self.learning_rate * tree.predict_value(X)[:, 0]
        return raw

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision(X))


def fit_boosting(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    hp: dict,
) -> tuple[BoostingModel, dict]:
    n = X.shape[0]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    priors = onehot.mean(axis=0)
    init_raw = np.log(np.clip(priors, 1e-12, None))
    raw = np.tile(init_raw, (n, 1))
    lr = float(hp["learning_rate"])
    n_stages = int(hp["n_stages"])
    max_depth = int(hp["max_depth"])
    min_split = int(hp["min_samples_split"])
    factor = (n_classes - 1) / n_classes

    stages: list[list[Tree]] = []
    for _ in range(n_stages):
        proba = softmax(raw)
        residual = onehot - proba
        stage: list[Tree] = []
        for c in range(n_classes):
            tree, leaf_of = build_regression_tree(
                X, residual[:, c], max_depth=max_depth, min_samples_split=min_split
            )
            # Newton step per leaf replaces the squared-error means
            r = residual[:, c]
            denom_terms = np.abs(r) * (1.0 - np.abs(r))
            for leaf in np.unique(leaf_of):
                members = leaf_of == leaf
                denom = denom_terms[members].sum()
                if denom < 1e-150:
                    tree.value[leaf] = [0.0]
                else:
                    tree.value[leaf] = [factor * r[members].sum() / denom]
            raw[:, c] += lr * np.array([tree.value[leaf][0] for leaf in leaf_of])
            stage.append(tree)
        stages.append(stage)
    meta = {"iterations": n_stages, "stopping_reason": "max-iterations"}
    return BoostingModel(init_raw=init_raw, stages=stages, learning_rate=lr), meta
