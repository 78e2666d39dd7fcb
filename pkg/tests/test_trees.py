import numpy as np

from adlrec.features import FeatureConfig
from adlrec.models import TrainConfig, train_matrix
from adlrec.models.tree import Tree, build_classification_tree, build_regression_tree
from adlrec.rng import make_generator

FC = FeatureConfig("counts", False, "t" * 64)


def test_regression_tree_fits_step_function():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    target = np.array([0.0, 0.0, 5.0, 5.0])
    tree, leaf_of = build_regression_tree(X, target, max_depth=1)
    assert tree.feature[0] == 0
    assert 1.0 <= tree.threshold[0] < 2.0
    pred = tree.predict_value(X)[:, 0]
    assert np.array_equal(pred, target)
    assert len(set(leaf_of)) == 2


def test_regression_tree_respects_depth_cap():
    rng = make_generator(0, "reg")
    X = rng.normal(size=(50, 3))
    target = rng.normal(size=50)
    tree, _ = build_regression_tree(X, target, max_depth=2)
    # depth <= 2 means at most 3 internal nodes + 4 leaves
    assert len(tree.feature) <= 7


def test_classification_tree_handles_xor():
    # no single split helps (zero gain everywhere), yet the grower must
    # keep splitting until leaves are pure
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    rng = make_generator(3, "xor")
    tree = build_classification_tree(
        X, y, np.ones(4), n_classes=2, rng=rng, max_features=2
    )
    proba = tree.predict_value(X)
    assert np.array_equal(np.argmax(proba, axis=1), y)


def test_classification_tree_weighted_split_choice():
    # class 1 is rare; with balanced-style weights its purity dominates
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]])
    y = np.array([0, 0, 0, 0, 1, 1])
    weight = np.where(y == 1, 3.0, 1.0)
    rng = make_generator(1, "w")
    tree = build_classification_tree(
        X, y, weight, n_classes=2, rng=rng, max_features=1
    )
    assert 3.0 <= tree.threshold[0] < 4.0
    assert np.array_equal(np.argmax(tree.predict_value(X), axis=1), y)


def test_single_tree_no_bootstrap_perfect_fit():
    rng = make_generator(0, "uniq")
    X = np.unique(rng.normal(size=(80, 6)).round(2), axis=0)
    y = rng.integers(0, 3, size=X.shape[0])
    cfg = TrainConfig(
        kind="random_forest",
        seed=1,
        hyperparameters={"n_trees": 1, "bootstrap": False},
    )
    model = train_matrix(X, y, cfg, FC)
    assert (model.predict_labels(X) == y).mean() == 1.0


def test_forest_and_boosting_fit_blobs():
    rng = make_generator(5, "blobs")
    centers = rng.normal(size=(3, 8)) * 4
    X = np.vstack([c + 0.3 * rng.normal(size=(20, 8)) for c in centers])
    y = np.repeat(np.arange(3), 20)
    for kind, hp in (
        ("random_forest", {"n_trees": 30}),
        ("gradient_boosting", {"n_stages": 30}),
    ):
        model = train_matrix(X, y, TrainConfig(kind=kind, seed=2, hyperparameters=hp), FC)
        assert (model.predict_labels(X) == y).mean() == 1.0
        assert model.metadata["iterations"] == hp[list(hp)[0]]


def test_tree_document_roundtrip():
    rng = make_generator(7, "doc")
    X = rng.normal(size=(30, 4))
    y = rng.integers(0, 2, size=30)
    tree = build_classification_tree(
        X, y, np.ones(30), n_classes=2, rng=rng, max_features=2
    )
    restored = Tree.from_document(tree.to_document())
    assert np.array_equal(restored.apply(X), tree.apply(X))
    assert np.allclose(restored.predict_value(X), tree.predict_value(X))


def test_boosting_prior_initialization():
    # with zero stages the prediction is the class prior
    X = np.zeros((10, 2))
    X[:, 0] = np.arange(10)
    y = np.array([0] * 7 + [1] * 3)
    model = train_matrix(
        X, y, TrainConfig(kind="gradient_boosting", seed=0, hyperparameters={"n_stages": 0}), FC
    )
    proba = model.predict_proba_matrix(np.zeros((1, 2)))
    assert np.allclose(proba, [[0.7, 0.3]])
