"""Leave-one-subject-out evaluation, metrics, and the ablation grid.

Metrics follow the weighted-F1 convention: per-class F1 averaged with
weights proportional to true-class support, zero-support classes excluded,
and zero-denominator precision/recall/F1 defined as 0. The participant
threshold rate counts folds with weighted F1 strictly above 0.5. Fold
mean +/- std uses the population (N-denominator) std; the convention is
recorded in report provenance.
"""

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .features import FeatureConfig, all_feature_configs, feature_matrix
from .models import TrainConfig, train_matrix
from .records import Segment
from .rng import derive_seed
from .taxonomy import ADL_NAMES, NUM_ADL_CLASSES, CategoryTable


class EvaluationError(ValueError):
    pass


def loso_split(segments: list[Segment]) -> list[tuple[list[Segment], list[Segment]]]:
    """One (train, test) fold per participant, ordered by participant id."""
    if any(s.label is None for s in segments):
        raise EvaluationError("all segments must be labeled for evaluation")
    participants = sorted({s.participant_id for s in segments})
    if len(participants) < 2:
        raise EvaluationError("leave-one-subject-out needs at least 2 participants")
    ordered = sorted(segments, key=lambda s: s.key)
    folds = []
    for participant in participants:
        test = [s for s in ordered if s.participant_id == participant]
        train = [s for s in ordered if s.participant_id != participant]
        folds.append((train, test))
    return folds


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Entry (i, j) counts samples with true class i predicted as j."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise EvaluationError("label vectors differ in length")
    for name, arr in (("true", y_true), ("pred", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise EvaluationError(f"{name} label outside [0, {n_classes})")
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(matrix, (y_true, y_pred), 1)
    return matrix


def normalize_rows(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Row proportions; zero-support rows come back all-zero and flagged."""
    matrix = np.asarray(matrix, dtype=np.float64)
    sums = matrix.sum(axis=1)
    zero_rows = [int(i) for i in np.flatnonzero(sums == 0)]
    safe = np.where(sums == 0, 1.0, sums)
    return matrix / safe[:, None], zero_rows


def per_class_f1(y_true, y_pred, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """(f1 per class, support per class)."""
    matrix = confusion_matrix(y_true, y_pred, n_classes)
    tp = np.diag(matrix).astype(np.float64)
    support = matrix.sum(axis=1)
    predicted = matrix.sum(axis=0)
    f1 = np.zeros(n_classes)
    for c in range(n_classes):
        precision = tp[c] / predicted[c] if predicted[c] > 0 else 0.0
        recall = tp[c] / support[c] if support[c] > 0 else 0.0
        if precision + recall > 0:
            f1[c] = 2 * precision * recall / (precision + recall)
    return f1, support


def weighted_f1(y_true, y_pred, n_classes: int) -> float:
    """Support-weighted mean of per-class F1."""
    y_true = np.asarray(y_true)
    if y_true.size == 0:
        raise EvaluationError("empty label vectors")
    f1, support = per_class_f1(y_true, y_pred, n_classes)
    return float((support * f1).sum() / support.sum())


@dataclass
class FoldResult:
    participant_id: str
    weighted_f1: float
    per_class_f1: np.ndarray
    confusion: np.ndarray
    support: np.ndarray
    train_seed: int

    @property
    def n_test(self) -> int:
        return int(self.confusion.sum())


@dataclass
class EvaluationReport:
    folds: list[FoldResult]
    mean_weighted_f1: float
    std_weighted_f1: float
    percent_above_half: float
    pooled_confusion: np.ndarray
    normalized_confusion: np.ndarray
    zero_support_rows: list[int]
    provenance: dict


def _aggregate(folds: list[FoldResult], provenance: dict) -> EvaluationReport:
    scores = np.array([f.weighted_f1 for f in folds])
    pooled = np.sum([f.confusion for f in folds], axis=0)
    normalized, zero_rows = normalize_rows(pooled)
    return EvaluationReport(
        folds=folds,
        mean_weighted_f1=float(scores.mean()),
        std_weighted_f1=float(scores.std()),  # population std over folds
        percent_above_half=float(100.0 * np.count_nonzero(scores > 0.5) / scores.size),
        pooled_confusion=pooled,
        normalized_confusion=normalized,
        zero_support_rows=zero_rows,
        provenance=provenance,
    )


def _labels(segments: list[Segment]) -> np.ndarray:
    return np.array([s.label.id for s in sorted(segments, key=lambda s: s.key)])


def run_loso(
    segments: list[Segment],
    table: CategoryTable,
    feature_config: FeatureConfig,
    train_config: TrainConfig,
) -> EvaluationReport:
    """Train per fold on the remaining participants, score the held-out one.

    Featurization is per-segment (row-wise scaling), so computing features
    inside or outside the fold loop is equivalent; there is no cross-fold
    leakage by construction. Per-fold training seeds derive from
    (train_config.seed, participant id), making fold order irrelevant.
    """
    folds = []
    for train_segments, test_segments in loso_split(segments):
        participant = test_segments[0].participant_id
        fold_seed = derive_seed(train_config.seed, "fold", participant)
        fold_cfg = replace(train_config, seed=fold_seed)
        X_train, _ = feature_matrix(train_segments, table, feature_config)
        X_test, _ = feature_matrix(test_segments, table, feature_config)
        try:
            model = train_matrix(
                X_train, _labels(train_segments), fold_cfg, feature_config
            )
        except Exception as exc:
            raise EvaluationError(f"fold {participant!r}: {exc}") from exc
        y_true = _labels(test_segments)
        y_pred = model.predict_labels(X_test)
        f1s, support = per_class_f1(y_true, y_pred, NUM_ADL_CLASSES)
        folds.append(
            FoldResult(
                participant_id=participant,
                weighted_f1=weighted_f1(y_true, y_pred, NUM_ADL_CLASSES),
                per_class_f1=f1s,
                confusion=confusion_matrix(y_true, y_pred, NUM_ADL_CLASSES),
                support=support,
                train_seed=fold_seed,
            )
        )
    kind, hp = train_config.resolved()
    provenance = {
        "feature_config": {
            "representation": feature_config.representation,
            "use_active": feature_config.use_active,
            "taxonomy_hash": feature_config.taxonomy_hash,
        },
        "train_config": {"kind": kind, "seed": int(train_config.seed), "hyperparameters": hp},
        "fold_seeds": {f.participant_id: f.train_seed for f in folds},
        "std_convention": "population",
        "threshold_rule": "weighted_f1 > 0.5 (strict)",
    }
    return _aggregate(folds, provenance)


@dataclass
class AblationCell:
    feature_config: FeatureConfig
    kind: str
    report: EvaluationReport


def run_ablation(
    segments: list[Segment],
    table: CategoryTable,
    kinds: list[str],
    seed: int,
    hyperparameters: dict | None = None,
) -> list[AblationCell]:
    """All six feature configurations crossed with the requested models.

    Without-active cells featurize from the detection stream alone (the
    active marking step is skipped entirely for them).
    """
    cells = []
    for feature_config in all_feature_configs(table):
        for kind in kinds:
            cfg = TrainConfig(
                kind=kind, seed=seed, hyperparameters=dict(hyperparameters or {})
            )
            report = run_loso(segments, table, feature_config, cfg)
            cells.append(
                AblationCell(feature_config=feature_config, kind=cfg.resolved()[0], report=report)
            )
    return cells


GRID_HEADER = (
    "representation",
    "active_objects",
    "model",
    "mean_weighted_f1",
    "std_weighted_f1",
    "percent_participants_above_0.5",
    "n_folds",
)


def grid_to_csv(cells: list[AblationCell]) -> str:
    """Flat ablation table, one row per config x classifier, full precision."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GRID_HEADER)
    for cell in cells:
        writer.writerow(
            [
                cell.feature_config.representation,
                "yes" if cell.feature_config.use_active else "no",
                cell.kind,
                repr(cell.report.mean_weighted_f1),
                repr(cell.report.std_weighted_f1),
                repr(cell.report.percent_above_half),
                len(cell.report.folds),
            ]
        )
    return out.getvalue()


def report_to_document(report: EvaluationReport) -> dict:
    """Full-precision JSON-ready form of an evaluation report."""
    return {
        "mean_weighted_f1": report.mean_weighted_f1,
        "std_weighted_f1": report.std_weighted_f1,
        "percent_above_half": report.percent_above_half,
        "class_names": list(ADL_NAMES),
        "pooled_confusion": report.pooled_confusion.tolist(),
        "normalized_confusion": report.normalized_confusion.tolist(),
        "zero_support_rows": report.zero_support_rows,
        "folds": [
            {
                "participant_id": f.participant_id,
                "weighted_f1": f.weighted_f1,
                "per_class_f1": f.per_class_f1.tolist(),
                "support": f.support.tolist(),
                "confusion": f.confusion.tolist(),
                "train_seed": f.train_seed,
            }
            for f in report.folds
        ],
        "provenance": report.provenance,
    }
