"""Flat decision trees: weighted-Gini classification and squared-error regression.

Trees are stored as parallel arrays (feature == -1 marks a leaf) so they
serialize directly and predict without recursion. Split search is exact:
candidate thresholds are midpoints between consecutive distinct sorted
values, scored vectorized across features, ties broken by lowest feature
index then lowest threshold.
"""

from dataclasses import dataclass, field

import numpy as np

LEAF = -1


@dataclass
class Tree:
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[list[float]] = field(default_factory=list)

    def add_node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append([])
        return len(self.feature) - 1

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id for each row."""
        out = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] != LEAF:
                if row[self.feature[node]] <= self.threshold[node]:
                    node = self.left[node]
                else:
                    node = self.right[node]
            out[i] = node
        return out

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        leaves = self.apply(X)
        return np.array([self.value[n] for n in leaves], dtype=np.float64)

    def to_document(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": [float(t) for t in self.threshold],
            "left": list(self.left),
            "right": list(self.right),
            "value": [[float(v) for v in vals] for vals in self.value],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Tree":
        return cls(
            feature=[int(f) for f in doc["feature"]],
            threshold=[float(t) for t in doc["threshold"]],
            left=[int(v) for v in doc["left"]],
            right=[int(v) for v in doc["right"]],
            value=[[float(v) for v in vals] for vals in doc["value"]],
        )


def _pick_best(
    scores: np.ndarray,
    sorted_vals: np.ndarray,
    valid: np.ndarray,
    candidates: np.ndarray,
) -> tuple[int, float] | None:
    """Lexicographic (score, feature index, threshold) minimum over columns."""
    best = None
    for j, feat in enumerate(candidates):
        col_scores = np.where(valid[:, j], scores[:, j], np.inf)
        cut = int(np.argmin(col_scores))
        if not np.isfinite(col_scores[cut]):
            continue
        threshold = 0.5 * (sorted_vals[cut, j] + sorted_vals[cut + 1, j])
        # midpoint can collapse onto the upper value in float; fall back to
        # the lower value so the <= test still separates the two sides
        if threshold >= sorted_vals[cut + 1, j]:
            threshold = sorted_vals[cut, j]
        key = (float(col_scores[cut]), int(feat), float(threshold))
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return best[1], best[2]


def _split_classification(
    cols: np.ndarray,
    weighted_onehot: np.ndarray,
    sample_weight: np.ndarray,
    candidates: np.ndarray,
) -> tuple[int, float] | None:
    """Best (feature, threshold) by weighted sum of child Gini impurities.

    Reductions over the class axis go through sorted values so that scores
    (and hence tree structure) are exactly label-permutation-equivariant.
    """
    order = np.argsort(cols, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(cols, order, axis=0)
    cum = np.cumsum(weighted_onehot[order], axis=0)  # (n, k, K)
    totals = cum[-1]  # identical across features
    left = cum[:-1]
    right = totals[None] - left
    wl = np.cumsum(sample_weight[order], axis=0)[:-1]  # class-order-free
    wr = float(sample_weight.sum()) - wl
    with np.errstate(divide="ignore", invalid="ignore"):
        gini_l = wl - np.sort(left**2, axis=2).sum(axis=2) / wl  # wl * gini(left)
        gini_r = wr - np.sort(right**2, axis=2).sum(axis=2) / wr
    scores = gini_l + gini_r
    valid = sorted_vals[:-1] < sorted_vals[1:]
    return _pick_best(scores, sorted_vals, valid, candidates)


def build_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    n_classes: int,
    rng: np.random.Generator,
    max_features: int,
    min_samples_split: int = 2,
) -> Tree:
    """Grow an unpruned tree on weighted Gini impurity.

    Candidate features are the first `max_features` non-constant features in
    a random order; when fewer exist, every non-constant feature is tried,
    so a node only becomes a mixed leaf if all features are constant in it.
    """
    n, d = X.shape
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    weighted_onehot = onehot * sample_weight[:, None]

    tree = Tree()
    root = tree.add_node()
    stack = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        woh = weighted_onehot[idx]
        class_totals = woh.sum(axis=0)
        distribution = class_totals / class_totals.sum()
        pure = np.count_nonzero(class_totals) <= 1
        if pure or idx.size < min_samples_split:
            tree.value[node] = distribution.tolist()
            continue

        Xn = X[idx]
        perm = rng.permutation(d)
        non_constant = perm[Xn[:, perm].min(axis=0) < Xn[:, perm].max(axis=0)]
        candidates = non_constant[:max_features]
        best = (
            _split_classification(Xn[:, candidates], woh, sample_weight[idx], candidates)
            if candidates.size
            else None
        )
        if best is None:
            tree.value[node] = distribution.tolist()
            continue

        feat, threshold = best
        mask = Xn[:, feat] <= threshold
        tree.feature[node] = feat
        tree.threshold[node] = threshold
        left = tree.add_node()
        right = tree.add_node()
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, idx[~mask]))
        stack.append((left, idx[mask]))
    return tree


def _split_regression(cols: np.ndarray, target: np.ndarray) -> tuple[int, float] | None:
    """Best (feature, threshold) by total child sum of squared errors."""
    n, d = cols.shape
    order = np.argsort(cols, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(cols, order, axis=0)
    sorted_target = target[order]
    csum = np.cumsum(sorted_target, axis=0)
    csqr = np.cumsum(sorted_target**2, axis=0)
    counts_l = np.arange(1, n, dtype=np.float64)[:, None]
    counts_r = n - counts_l
    sum_l = csum[:-1]
    sum_r = csum[-1] - sum_l
    sse_l = csqr[:-1] - sum_l**2 / counts_l
    sse_r = (csqr[-1] - csqr[:-1]) - sum_r**2 / counts_r
    scores = sse_l + sse_r
    valid = sorted_vals[:-1] < sorted_vals[1:]
    return _pick_best(scores, sorted_vals, valid, np.arange(d))


def build_regression_tree(
    X: np.ndarray,
    target: np.ndarray,
    max_depth: int,
    min_samples_split: int = 2,
) -> tuple[Tree, np.ndarray]:
    """Depth-capped squared-error tree over all features.

    Returns the tree and each training row's leaf id (for leaf re-estimation).
    """
    n = X.shape[0]
    tree = Tree()
    root = tree.add_node()
    leaf_of = np.zeros(n, dtype=np.int64)
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        values = target[idx]
        mean = float(values.mean())
        if (
            depth >= max_depth
            or idx.size < min_samples_split
            or values.min() == values.max()
        ):
            tree.value[node] = [mean]
            leaf_of[idx] = node
            continue
        best = _split_regression(X[idx], values)
        if best is None:
            tree.value[node] = [mean]
            leaf_of[idx] = node
            continue
        feat, threshold = best
        mask = X[idx, feat] <= threshold
        tree.feature[node] = feat
        tree.threshold[node] = threshold
        left = tree.add_node()
        right = tree.add_node()
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, idx[~mask], depth + 1))
        stack.append((left, idx[mask], depth + 1))
    return tree, leaf_of
