"""Random forest: bagged weighted-Gini trees, sqrt-feature subsampling."""

import math
from dataclasses import dataclass

import numpy as np

from ..rng import make_generator
from .tree import Tree, build_classification_tree

DEFAULTS = {"n_trees": 100, "min_samples_split": 2, "bootstrap": True}


@dataclass
class ForestModel:
    trees: list[Tree]
    n_classes: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            total += tree.predict_value(X)
        return total / len(self.trees)


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    class_weight: np.ndarray,
    seed: int,
    hp: dict,
) -> tuple[ForestModel, dict]:
    n, d = X.shape
    n_classes = len(class_weight)
    sample_weight = class_weight[y]
    n_trees = int(hp["n_trees"])
    max_features = max(1, math.ceil(math.sqrt(d)))
    trees = []
    # per-tree substreams keep the ensemble independent of build order
    for t in range(n_trees):
        rng = make_generator(seed, "forest-tree", t)
        if hp["bootstrap"]:
            sample = rng.integers(0, n, size=n)
        else:
            sample = np.arange(n)
        trees.append(
            build_classification_tree(
                X[sample],
                y[sample],
                sample_weight[sample],
                n_classes,
                rng,
                max_features=max_features,
                min_samples_split=int(hp["min_samples_split"]),
            )
        )
    meta = {"iterations": n_trees, "stopping_reason": "max-iterations"}
    return ForestModel(trees=trees, n_classes=n_classes), meta
