"""Detection/interaction record parsing, the segment manifest, and assembly.

One frame record per line (UTF-8 JSON object)::

    {"participant_id": str, "video_id": str, "segment_index": int,
     "frame_index": int,
     "objects": [{"label": str, "score": float, "box": [x1, y1, x2, y2]}, ...],
     "hoi_objects": [{"box": [x1, y1, x2, y2],
                      "hand_side": "left"|"right"|"unknown",
                      "contact_state": str, "score": float}, ...]}

The segment manifest is CSV with header
``participant_id,video_id,segment_index,adl_label``. Malformed record lines
are rejected individually and collected as diagnostics; they never affect
neighbouring records.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .taxonomy import AdlLabel, adl_by_name

MAX_FRAMES_PER_SEGMENT = 60

HAND_SIDES = ("left", "right", "unknown")


class RecordError(ValueError):
    """Raised for structurally invalid records, manifests, or segments."""


@dataclass(frozen=True, order=True)
class SegmentKey:
    participant_id: str
    video_id: str
    segment_index: int


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned pixel rectangle; x1 < x2, y1 < y2, all finite."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not math.isfinite(v):
                raise RecordError("box coordinates must be finite")
        if not self.x1 < self.x2:
            raise RecordError("box violates x1 < x2")
        if not self.y1 < self.y2:
            raise RecordError("box violates y1 < y2")

    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @classmethod
    def from_list(cls, values) -> "Box2D":
        if not isinstance(values, (list, tuple)) or len(values) != 4:
            raise RecordError("box must be a list [x1, y1, x2, y2]")
        try:
            coords = [float(v) for v in values]
        except (TypeError, ValueError):
            raise RecordError("box coordinates must be numbers") from None
        return cls(*coords)


def _check_score(value) -> float:
    try:
        score = float(value)
    except (TypeError, ValueError):
        raise RecordError("score must be a number") from None
    if not 0.0 <= score <= 1.0:
        raise RecordError(f"score {score} outside [0, 1]")
    return score


@dataclass(frozen=True)
class ObjectDetection:
    raw_label: str
    score: float
    box: Box2D


@dataclass(frozen=True)
class HoiObject:
    """An object-in-contact box from the hand-interaction stream."""

    box: Box2D
    hand_side: str
    contact_state: str
    score: float


@dataclass(frozen=True)
class FrameObservation:
    """One frame's detections at the 1 frame/second sampling grid."""

    frame_index: int
    objects: tuple[ObjectDetection, ...]
    hoi_objects: tuple[HoiObject, ...]

    def __post_init__(self):
        if not 0 <= self.frame_index < MAX_FRAMES_PER_SEGMENT:
            raise RecordError(
                f"frame_index {self.frame_index} outside [0, {MAX_FRAMES_PER_SEGMENT})"
            )


@dataclass(frozen=True)
class Segment:
    """One labeled one-minute snippet; label is None for inference data."""

    participant_id: str
    video_id: str
    segment_index: int
    frames: tuple[FrameObservation, ...]
    label: AdlLabel | None = None

    def __post_init__(self):
        if not self.frames:
            raise RecordError("segment has no frames")
        if len(self.frames) > MAX_FRAMES_PER_SEGMENT:
            raise RecordError("segment exceeds 60 frames")
        indices = [f.frame_index for f in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise RecordError("frame_index strictly increasing violated")

    @property
    def key(self) -> SegmentKey:
        return SegmentKey(self.participant_id, self.video_id, self.segment_index)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str


def _parse_object(obj) -> ObjectDetection:
    if not isinstance(obj, dict):
        raise RecordError("object entry must be an object")
    label = obj.get("label")
    if not isinstance(label, str):
        raise RecordError("object label must be a string")
    return ObjectDetection(
        raw_label=label,
        score=_check_score(obj.get("score")),
        box=Box2D.from_list(obj.get("box")),
    )


def _parse_hoi(obj) -> HoiObject:
    if not isinstance(obj, dict):
        raise RecordError("hoi entry must be an object")
    hand_side = obj.get("hand_side", "unknown")
    if hand_side not in HAND_SIDES:
        raise RecordError(f"hand_side must be one of {HAND_SIDES}")
    contact_state = obj.get("contact_state", "")
    if not isinstance(contact_state, str):
        raise RecordError("contact_state must be a string")
    return HoiObject(
        box=Box2D.from_list(obj.get("box")),
        hand_side=hand_side,
        contact_state=contact_state,
        score=_check_score(obj.get("score")),
    )


def parse_record_line(line: str) -> tuple[SegmentKey, FrameObservation]:
    """Parse one frame record; raises RecordError on any invariant violation."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise RecordError("record must be a JSON object")
    participant = doc.get("participant_id")
    video = doc.get("video_id")
    if not isinstance(participant, str) or not participant:
        raise RecordError("participant_id must be a nonempty string")
    if not isinstance(video, str) or not video:
        raise RecordError("video_id must be a nonempty string")
    seg_idx = doc.get("segment_index")
    frame_idx = doc.get("frame_index")
    if not isinstance(seg_idx, int) or isinstance(seg_idx, bool) or seg_idx < 0:
        raise RecordError("segment_index must be a nonnegative integer")
    if not isinstance(frame_idx, int) or isinstance(frame_idx, bool):
        raise RecordError("frame_index must be an integer")
    objects = doc.get("objects", [])
    hoi_objects = doc.get("hoi_objects", [])
    if not isinstance(objects, list) or not isinstance(hoi_objects, list):
        raise RecordError("objects and hoi_objects must be lists")
    observation = FrameObservation(
        frame_index=frame_idx,
        objects=tuple(_parse_object(o) for o in objects),
        hoi_objects=tuple(_parse_hoi(h) for h in hoi_objects),
    )
    return SegmentKey(participant, video, seg_idx), observation


def parse_records(
    stream: Iterable[str] | TextIO,
) -> tuple[dict[SegmentKey, list[FrameObservation]], list[Diagnostic]]:
    """Group frame records by (participant, video, segment).

    Groups are ordered by key and frames by frame_index. Malformed lines are
    collected as diagnostics with 1-based line numbers; valid lines are kept.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    groups: dict[SegmentKey, list[FrameObservation]] = {}
    diagnostics: list[Diagnostic] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            key, observation = parse_record_line(line)
        except RecordError as exc:
            diagnostics.append(Diagnostic(lineno, str(exc)))
            continue
        groups.setdefault(key, []).append(observation)
    ordered = {
        key: sorted(groups[key], key=lambda f: f.frame_index)
        for key in sorted(groups)
    }
    return ordered, diagnostics


def serialize_frame(key: SegmentKey, frame: FrameObservation) -> str:
    """Canonical one-line JSON form; parse(serialize(x)) == x."""
    doc = {
        "participant_id": key.participant_id,
        "video_id": key.video_id,
        "segment_index": key.segment_index,
        "frame_index": frame.frame_index,
        "objects": [
            {"label": o.raw_label, "score": o.score, "box": o.box.as_list()}
            for o in frame.objects
        ],
        "hoi_objects": [
            {
                "box": h.box.as_list(),
                "hand_side": h.hand_side,
                "contact_state": h.contact_state,
                "score": h.score,
            }
            for h in frame.hoi_objects
        ],
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def serialize_segments(segments: Iterable[Segment]) -> list[str]:
    lines = []
    for segment in segments:
        for frame in segment.frames:
            lines.append(serialize_frame(segment.key, frame))
    return lines


MANIFEST_HEADER = ("participant_id", "video_id", "segment_index", "adl_label")


def load_manifest(stream: Iterable[str] | TextIO) -> dict[SegmentKey, AdlLabel]:
    """Read the per-segment label manifest; duplicate keys are an error."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise RecordError("manifest is empty (header row required)") from None
    if tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise RecordError(
            f"manifest header must be {','.join(MANIFEST_HEADER)}, got {','.join(header)}"
        )
    labels: dict[SegmentKey, AdlLabel] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise RecordError(f"manifest line {lineno}: expected 4 fields, got {len(row)}")
        participant, video, seg_idx_text, adl_name = (f.strip() for f in row)
        try:
            seg_idx = int(seg_idx_text)
        except ValueError:
            raise RecordError(
                f"manifest line {lineno}: segment_index {seg_idx_text!r} is not an integer"
            ) from None
        try:
            label = adl_by_name(adl_name)
        except Exception:
            raise RecordError(f"manifest line {lineno}: unknown ADL {adl_name!r}") from None
        key = SegmentKey(participant, video, seg_idx)
        if key in labels:
            raise RecordError(f"manifest line {lineno}: duplicate segment key {key}")
        labels[key] = label
    return labels


def write_manifest(segments: Iterable[Segment]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for segment in segments:
        if segment.label is None:
            raise RecordError(f"segment {segment.key} has no label to write")
        writer.writerow(
            [
                segment.participant_id,
                segment.video_id,
                segment.segment_index,
                segment.label.name,
            ]
        )
    return out.getvalue()


@dataclass
class AssemblyResult:
    segments: list[Segment]
    labels_without_frames: list[SegmentKey] = field(default_factory=list)


def assemble_segments(
    groups: dict[SegmentKey, list[FrameObservation]],
    labels: dict[SegmentKey, AdlLabel] | None,
    require_labels: bool = True,
) -> AssemblyResult:
    """Join frame groups with manifest labels into Segments.

    In training mode (require_labels) every group must have a manifest entry.
    Manifest entries with no frames are reported, not fatal. Duplicate frame
    indices inside a group violate the strictly-increasing invariant.
    """
    labels = labels or {}
    segments: list[Segment] = []
    missing: list[SegmentKey] = []
    for key, frames in groups.items():
        if not frames:
            raise RecordError(f"segment {key} has zero valid frames")
        label = labels.get(key)
        if label is None and require_labels:
            missing.append(key)
            continue
        try:
            segment = Segment(
                participant_id=key.participant_id,
                video_id=key.video_id,
                segment_index=key.segment_index,
                frames=tuple(frames),
                label=label,
            )
        except RecordError as exc:
            raise RecordError(f"segment {key}: {exc}") from None
        segments.append(segment)
    if missing:
        raise RecordError(
            f"training mode: {len(missing)} segment(s) missing manifest labels, "
            f"first {missing[0]}"
        )
    unmatched = sorted(k for k in labels if k not in groups)
    return AssemblyResult(segments=segments, labels_without_frames=unmatched)


def load_corpus(
    record_stream: Iterable[str] | TextIO,
    manifest_stream: Iterable[str] | TextIO | None,
    require_labels: bool = True,
) -> tuple[AssemblyResult, list[Diagnostic]]:
    """Convenience: parse records + manifest and assemble in one step."""
    groups, diagnostics = parse_records(record_stream)
    labels = load_manifest(manifest_stream) if manifest_stream is not None else None
    return assemble_segments(groups, labels, require_labels=require_labels), diagnostics
