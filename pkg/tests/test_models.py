import json
import math

import numpy as np
import pytest

from adlrec.features import FeatureConfig, FeatureVector
from adlrec.models import (
    KINDS,
    ModelFormatError,
    TrainConfig,
    TrainedModel,
    TrainingError,
    balanced_weights,
    default_hyperparameters,
    load_model,
    predict_label,
    predict_proba,
    resolve_kind,
    save_model,
    train,
    train_matrix,
)
from adlrec.models.logreg import LogisticModel, loss_and_grad
from adlrec.models.weights import WeightError
from adlrec.records import SegmentKey
from adlrec.rng import make_generator
from adlrec.taxonomy import ADL_LABELS, PAPER_CLASS_COUNTS

FC = FeatureConfig("binary", True, "f" * 64)

FAST_HP = {
    "logreg": {"max_iter": 200},
    "random_forest": {"n_trees": 20},
    "gradient_boosting": {"n_stages": 20},
    "mlp": {"max_epochs": 40},
}


def blobs(n_classes=4, per_class=25, d=10, seed=0, spread=0.3):
    rng = make_generator(seed, "blobs")
    centers = rng.normal(size=(n_classes, d)) * 4
    X = np.vstack([c + spread * rng.normal(size=(per_class, d)) for c in centers])
    y = np.repeat(np.arange(n_classes), per_class)
    return X, y, centers


def test_balanced_weights_uniform():
    assert np.allclose(balanced_weights((50, 50)).values, [1.0, 1.0])


def test_balanced_weights_by_hand():
    w = balanced_weights((75, 25)).values
    assert abs(w[0] - 2 / 3) < 1e-12
    assert w[1] == 2.0


def test_balanced_weights_paper_counts():
    cw = balanced_weights(PAPER_CLASS_COUNTS)
    assert abs(cw.values[0] - 1.2569) < 1e-4  # Self-Feeding: 2261 / (7 * 257)
    assert cw.exact_identity_holds()
    assert math.fsum(n * w for n, w in zip(cw.counts, cw.values)) == cw.total


def test_balanced_weights_zero_count_rejected():
    with pytest.raises(WeightError):
        balanced_weights((5, 0, 3))


def test_logreg_separates_two_clusters():
    X, y, _ = blobs(n_classes=2, per_class=20, seed=3)
    model = train_matrix(X, y, TrainConfig(kind="logreg", seed=0), FC)
    assert (model.predict_labels(X) == y).mean() == 1.0


def test_training_is_byte_reproducible():
    X, y, _ = blobs(seed=7)
    for kind in KINDS:
        cfg = TrainConfig(kind=kind, seed=7, hyperparameters=FAST_HP[kind])
        a = save_model(train_matrix(X, y, cfg, FC))
        b = save_model(train_matrix(X, y, cfg, FC))
        assert a == b, kind


def test_logreg_gradient_check():
    rng = make_generator(1, "gradcheck")
    n, d, k = 10, 5, 3
    X = rng.normal(size=(n, d))
    y = rng.integers(0, k, size=n)
    W = rng.normal(size=(d, k))
    b = rng.normal(size=k)
    sw = rng.uniform(0.5, 2.0, size=k)[y]
    _, gw, gb = loss_and_grad(W, b, X, y, sw, l2=1.0)
    h = 1e-5
    for i in range(d):
        for j in range(k):
            Wp, Wm = W.copy(), W.copy()
            Wp[i, j] += h
            Wm[i, j] -= h
            lp = loss_and_grad(Wp, b, X, y, sw, 1.0)[0]
            lm = loss_and_grad(Wm, b, X, y, sw, 1.0)[0]
            num = (lp - lm) / (2 * h)
            rel = abs(gw[i, j] - num) / max(abs(gw[i, j]), abs(num), 1e-4)
            assert rel < 1e-4


def test_predict_proba_is_simplex_for_all_kinds():
    X, y, _ = blobs(n_classes=3, per_class=15, seed=5)
    probe = make_generator(2, "probe").normal(size=(40, X.shape[1]))
    for kind in KINDS:
        cfg = TrainConfig(kind=kind, seed=1, hyperparameters=FAST_HP[kind])
        model = train_matrix(X, y, cfg, FC)
        proba = model.predict_proba_matrix(probe)
        assert proba.min() >= 0.0
        assert np.abs(proba.sum(axis=1) - 1.0).max() < 1e-9


def test_zero_weight_logreg_is_uniform():
    model = TrainedModel(
        kind="logreg",
        classes=(0, 1, 2, 3),
        class_names=("a", "b", "c", "d"),
        feature_dim=6,
        feature_config=FC,
        hyperparameters=default_hyperparameters("logreg"),
        params=LogisticModel(weights=np.zeros((6, 4)), bias=np.zeros(4)),
        metadata={},
    )
    proba = model.predict_proba_matrix(np.ones((3, 6)))
    assert np.allclose(proba, 0.25)


def test_cluster_center_argmax():
    X, y, centers = blobs(n_classes=4, per_class=20, seed=9)
    model = train_matrix(X, y, TrainConfig(kind="logreg", seed=0), FC)
    assert np.array_equal(model.predict_labels(centers), np.arange(4))


def test_save_load_roundtrip_predictions():
    X, y, _ = blobs(seed=11)
    probe = make_generator(3, "probe").normal(size=(100, X.shape[1]))
    for kind in KINDS:
        cfg = TrainConfig(kind=kind, seed=4, hyperparameters=FAST_HP[kind])
        model = train_matrix(X, y, cfg, FC)
        restored = load_model(save_model(model))
        assert np.allclose(
            model.predict_proba_matrix(probe), restored.predict_proba_matrix(probe)
        )
        assert np.array_equal(model.predict_labels(probe), restored.predict_labels(probe))
        assert restored.metadata == model.metadata


def test_tampered_digest_rejected():
    X, y, _ = blobs(n_classes=2, per_class=10, seed=1)
    text = save_model(train_matrix(X, y, TrainConfig(kind="logreg", seed=0), FC))
    doc = json.loads(text)
    doc["digest"] = "0" * 64
    with pytest.raises(ModelFormatError, match="digest"):
        load_model(json.dumps(doc))
    doc2 = json.loads(text)
    doc2["classes"] = [1, 0]  # content change without digest update
    with pytest.raises(ModelFormatError, match="digest"):
        load_model(json.dumps(doc2))


def test_unsupported_schema_version_rejected():
    X, y, _ = blobs(n_classes=2, per_class=10, seed=1)
    doc = json.loads(save_model(train_matrix(X, y, TrainConfig(kind="logreg", seed=0), FC)))
    doc["schema_version"] = 0
    with pytest.raises(ModelFormatError, match="version"):
        load_model(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="corrupted"):
        load_model("{broken")


def test_label_permutation_equivariance():
    X, y, _ = blobs(n_classes=3, per_class=20, seed=6)
    perm = np.array([2, 0, 1])  # new label of original class c is perm[c]
    probe = make_generator(4, "probe").normal(size=(25, X.shape[1]))
    for kind in KINDS:
        cfg = TrainConfig(kind=kind, seed=3, hyperparameters=FAST_HP[kind])
        base = train_matrix(X, y, cfg, FC)
        permuted = train_matrix(X, perm[y], cfg, FC)
        p_base = base.predict_proba_matrix(probe)
        p_perm = permuted.predict_proba_matrix(probe)
        # column perm[c] of the permuted model tracks column c of the base
        assert np.allclose(p_perm[:, perm], p_base, atol=1e-9), kind
        # argmax comparison only where it is unique: exact probability ties
        # break to the lowest class index, which permutation relabels
        top2 = np.sort(p_base, axis=1)[:, -2:]
        untied = (top2[:, 1] - top2[:, 0]) > 1e-9
        assert untied.any()
        assert np.array_equal(
            permuted.predict_labels(probe)[untied],
            perm[base.predict_labels(probe)[untied]],
        ), kind


def test_training_input_validation():
    X, y, _ = blobs(n_classes=2, per_class=5, seed=0)
    with pytest.raises(TrainingError, match="single class"):
        train_matrix(X, np.zeros(len(y), dtype=int), TrainConfig(kind="logreg"), FC)
    with pytest.raises(TrainingError, match="labels"):
        train_matrix(X, y[:-1], TrainConfig(kind="logreg"), FC)
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(TrainingError, match="non-finite"):
        train_matrix(bad, y, TrainConfig(kind="logreg"), FC)
    with pytest.raises(TrainingError, match="empty"):
        train_matrix(np.zeros((0, 3)), np.zeros(0, dtype=int), TrainConfig(kind="logreg"), FC)
    with pytest.raises(TrainingError, match="unknown model kind"):
        resolve_kind("svm")
    with pytest.raises(TrainingError, match="hyperparameters"):
        train_matrix(X, y, TrainConfig(kind="logreg", hyperparameters={"depth": 3}), FC)


def test_train_from_feature_vectors_and_config_check():
    X, y, _ = blobs(n_classes=2, per_class=10, d=58, seed=2)
    fvs = [
        FeatureVector(FC, SegmentKey("p", "v", i), row.astype(float))
        for i, row in enumerate(X)
    ]
    labels = [ADL_LABELS[int(c)] for c in y]
    model = train(fvs, labels, TrainConfig(kind="logreg", seed=0))
    assert model.classes == (0, 1)
    assert model.class_names == ("Self-Feeding", "Functional Mobility")
    proba = predict_proba(model, fvs[0])
    assert abs(proba.sum() - 1.0) < 1e-9
    assert predict_label(model, fvs[0]) in (0, 1)
    other = FeatureVector(
        FeatureConfig("counts", False, "f" * 64), fvs[0].key, np.zeros(58)
    )
    with pytest.raises(TrainingError, match="config"):
        predict_proba(model, other)
    with pytest.raises(TrainingError, match="dimension"):
        model.predict_proba_matrix(np.zeros((2, 3)))


def test_stopping_reason_recorded():
    X, y, _ = blobs(n_classes=2, per_class=15, seed=8)
    model = train_matrix(
        X, y, TrainConfig(kind="logreg", seed=0, hyperparameters={"max_iter": 3}), FC
    )
    assert model.metadata["stopping_reason"] == "max-iterations"
    assert model.metadata["iterations"] == 3
    assert model.metadata["seed"] == 0
    wide = train_matrix(
        X, y, TrainConfig(kind="logreg", seed=0, hyperparameters={"l2": 100.0}), FC
    )
    assert wide.metadata["stopping_reason"] in ("converged", "max-iterations")
