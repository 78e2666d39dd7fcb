"""Bag-of-Objects segment features and row-wise min-max scaling.

Two raw representations over a segment's frames:

* counts — per-category total detection frequency summed across frames;
* binary — per-category number of frames where the category appears at all.

With the active distinction on, a parallel block of channels restricted to
active-marked detections is appended; the base block still counts every
detection. Each segment row is min-max scaled by its own min and max, so
values land in [0, 1] regardless of frame count.
"""

from dataclasses import dataclass

import numpy as np

from .interaction import mark_active
from .records import Segment, SegmentKey
from .taxonomy import CategoryTable

REPRESENTATIONS = ("counts", "binary", "both")


class FeatureError(ValueError):
    """Raised for invalid feature configs or mismatched taxonomy versions."""


@dataclass(frozen=True)
class FeatureConfig:
    """One cell of the representation grid, pinned to a taxonomy version."""

    representation: str
    use_active: bool
    taxonomy_hash: str

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise FeatureError(
                f"representation must be one of {REPRESENTATIONS}, "
                f"got {self.representation!r}"
            )

    def dimension(self, n_categories: int) -> int:
        d = n_categories * (2 if self.use_active else 1)
        if self.representation == "both":
            d *= 2
        return d

    def describe(self) -> str:
        active = "active" if self.use_active else "no-active"
        return f"{self.representation}+{active}"


def all_feature_configs(table: CategoryTable) -> list[FeatureConfig]:
    """The six ablation configurations in grid order."""
    return [
        FeatureConfig(rep, use_active, table.content_hash)
        for rep in REPRESENTATIONS
        for use_active in (False, True)
    ]


@dataclass(frozen=True)
class FeatureVector:
    config: FeatureConfig
    key: SegmentKey
    values: np.ndarray


def _category_blocks(
    segment: Segment, table: CategoryTable, use_active: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-frame category histograms: (counts, active counts) pairs."""
    n_frames = len(segment.frames)
    k = len(table)
    counts = np.zeros((n_frames, k), dtype=np.int64)
    active_counts = np.zeros((n_frames, k), dtype=np.int64)
    for row, frame in enumerate(segment.frames):
        marks = mark_active(frame) if use_active else None
        for idx, detection in enumerate(frame.objects):
            cat = table.map_label(detection.raw_label)
            counts[row, cat] += 1
            if marks is not None and marks[idx].active:
                active_counts[row, cat] += 1
    presence = (counts > 0).astype(np.int64)
    active_presence = (active_counts > 0).astype(np.int64)
    return counts, active_counts, presence, active_presence


def raw_counts(segment: Segment, table: CategoryTable, use_active: bool) -> np.ndarray:
    """Total detections per category; active block counts the active subset."""
    counts, active_counts, _, _ = _category_blocks(segment, table, use_active)
    base = counts.sum(axis=0)
    if not use_active:
        return base
    return np.concatenate([base, active_counts.sum(axis=0)])


def raw_binary(segment: Segment, table: CategoryTable, use_active: bool) -> np.ndarray:
    """Frames-with-presence per category; active block over active detections."""
    _, _, presence, active_presence = _category_blocks(segment, table, use_active)
    base = presence.sum(axis=0)
    if not use_active:
        return base
    return np.concatenate([base, active_presence.sum(axis=0)])


def minmax_scale_row(raw: np.ndarray) -> np.ndarray:
    """(x - min) / (max - min) over one row; constant rows map to all zeros."""
    row = np.asarray(raw, dtype=np.float64)
    if row.size == 0:
        raise FeatureError("cannot scale an empty row")
    if not np.all(np.isfinite(row)):
        raise FeatureError("non-finite value in feature row")
    lo = row.min()
    hi = row.max()
    if hi == lo:
        return np.zeros_like(row)
    return (row - lo) / (hi - lo)


def featurize(segment: Segment, table: CategoryTable, config: FeatureConfig) -> FeatureVector:
    """Build one scaled feature row for a segment under `config`.

    Single representations scale the whole row jointly (base and active
    blocks together). For "both", the counts and binary blocks are scaled
    independently and concatenated, counts first.
    """
    if config.taxonomy_hash != table.content_hash:
        raise FeatureError(
            "feature config taxonomy hash does not match the loaded table "
            f"({config.taxonomy_hash[:12]}... vs {table.content_hash[:12]}...)"
        )
    if config.representation == "counts":
        values = minmax_scale_row(raw_counts(segment, table, config.use_active))
    elif config.representation == "binary":
        values = minmax_scale_row(raw_binary(segment, table, config.use_active))
    else:
        values = np.concatenate(
            [
                minmax_scale_row(raw_counts(segment, table, config.use_active)),
                minmax_scale_row(raw_binary(segment, table, config.use_active)),
            ]
        )
    return FeatureVector(config=config, key=segment.key, values=values)


def feature_names(table: CategoryTable, config: FeatureConfig) -> list[str]:
    """Column names matching featurize() output order."""

    def block(prefix: str) -> list[str]:
        names = [prefix + c for c in table.categories]
        if config.use_active:
            names += [prefix + "active_" + c for c in table.categories]
        return names

    if config.representation == "both":
        return block("counts_") + block("binary_")
    return block("")


def feature_matrix(
    segments: list[Segment], table: CategoryTable, config: FeatureConfig
) -> tuple[np.ndarray, list[SegmentKey]]:
    """Stack per-segment rows in segment-key order."""
    ordered = sorted(segments, key=lambda s: s.key)
    rows = [featurize(s, table, config).values for s in ordered]
    keys = [s.key for s in ordered]
    return np.asarray(rows, dtype=np.float64), keys
