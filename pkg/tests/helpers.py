"""Hand-built fixture constructors shared across test modules."""

import json

from adlrec.records import (
    Box2D,
    FrameObservation,
    HoiObject,
    ObjectDetection,
    Segment,
)
from adlrec.taxonomy import ADL_LABELS


def box(x1=0, y1=0, x2=10, y2=10):
    return Box2D(float(x1), float(y1), float(x2), float(y2))


def det(label="cup", b=None, score=0.9):
    return ObjectDetection(raw_label=label, score=score, box=b if b is not None else box())


def hoi(b=None, side="right", contact="portable_object", score=0.8):
    return HoiObject(
        box=b if b is not None else box(), hand_side=side, contact_state=contact, score=score
    )


def frame(index=0, objects=(), hois=()):
    return FrameObservation(frame_index=index, objects=tuple(objects), hoi_objects=tuple(hois))


def segment(frames, participant="p1", video="v1", index=0, label=ADL_LABELS[0]):
    return Segment(
        participant_id=participant,
        video_id=video,
        segment_index=index,
        frames=tuple(frames),
        label=label,
    )


def record_line(
    participant="p1", video="v1", seg=0, frame_idx=0, objects=(), hois=(), **overrides
):
    doc = {
        "participant_id": participant,
        "video_id": video,
        "segment_index": seg,
        "frame_index": frame_idx,
        "objects": [
            {"label": o[0], "score": o[1], "box": list(o[2])} for o in objects
        ],
        "hoi_objects": [
            {"box": list(h[0]), "hand_side": h[1], "contact_state": h[2], "score": h[3]}
            for h in hois
        ],
    }
    doc.update(overrides)
    return json.dumps(doc)
