"""Seeded synthetic corpus generator: the desk-scale stand-in for real data.

Each activity class gets a profile of core object categories (appearing
often and usually hand-active) plus passive context categories. Participants
get per-category frequency biases, modelling individual compensatory habits
without ever touching the class-to-core assignment. A detector noise model
(drops, spurious boxes, label confusion, box jitter) turns the oracle
ground-truth stream into a detector-like stream; both streams are emitted
so noise-robustness comparisons have a clean reference.
"""

import json
from dataclasses import dataclass, asdict

from .records import (
    Box2D,
    FrameObservation,
    HoiObject,
    ObjectDetection,
    Segment,
    serialize_segments,
    write_manifest,
)
from .rng import derive_seed, make_generator
from .taxonomy import ADL_LABELS, ADL_NAMES, PAPER_CLASS_COUNTS, CategoryTable

CANVAS_W = 1280.0
CANVAS_H = 720.0

# Probability of an unmatched hand-interaction box per frame (hand in view
# without a confirmed object match); keeps the hoi channel non-degenerate.
STRAY_HOI_PROB = 0.08


class GenError(ValueError):
    pass


@dataclass(frozen=True)
class AdlProfile:
    """Object behaviour of one activity class."""

    core: tuple[str, ...]
    core_prob: float
    context: tuple[tuple[str, float], ...]
    active_prob: float


@dataclass(frozen=True)
class NoiseSpec:
    drop_rate: float = 0.0
    spurious_rate: float = 0.0
    label_confusion_rate: float = 0.0
    box_jitter_px: float = 0.0


@dataclass(frozen=True)
class GenSpec:
    seed: int
    participants: int
    segments_per_participant: tuple[int, ...]  # per-ADL counts, canonical order
    frames_per_segment: int
    adl_profiles: tuple[AdlProfile, ...]
    participant_effect: float = 0.0
    noise: NoiseSpec = NoiseSpec()

    def validate(self) -> None:
        if self.participants < 1:
            raise GenError("participants must be >= 1")
        if len(self.segments_per_participant) != len(ADL_LABELS):
            raise GenError(
                f"segments_per_participant needs {len(ADL_LABELS)} per-ADL counts"
            )
        if any(c < 0 for c in self.segments_per_participant):
            raise GenError("negative segment count")
        if sum(self.segments_per_participant) == 0:
            raise GenError("spec generates zero segments")
        if not 1 <= self.frames_per_segment <= 60:
            raise GenError("frames_per_segment must be in [1, 60]")
        if len(self.adl_profiles) != len(ADL_LABELS):
            raise GenError(f"need {len(ADL_LABELS)} adl_profiles")
        if not 0.0 <= self.participant_effect <= 1.0:
            raise GenError("participant_effect must be in [0, 1]")
        for profile in self.adl_profiles:
            if not profile.core:
                raise GenError("profile with empty core category set")
            probs = [profile.core_prob, profile.active_prob] + [
                p for _, p in profile.context
            ]
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise GenError("profile probability outside [0, 1]")
        for rate in (
            self.noise.drop_rate,
            self.noise.spurious_rate,
            self.noise.label_confusion_rate,
        ):
            if not 0.0 <= rate <= 1.0:
                raise GenError("noise rate outside [0, 1]")
        if self.noise.box_jitter_px < 0:
            raise GenError("box_jitter_px must be >= 0")


# Core object categories per activity class; pairwise disjoint so the clean
# corpus is separable by construction.
CORE_CATEGORIES: tuple[tuple[str, ...], ...] = (
    ("drinkware", "tableware"),  # Self-Feeding
    ("wheelchair_walker", "footwear"),  # Functional Mobility
    ("toiletries", "medication", "grooming_tool"),  # Grooming & Health Management
    ("phone_tablet", "electronics"),  # Communication Management
    ("cleaning_product", "home_appliance_tool"),  # Home Management
    ("kitchen_utensils", "kitchen_appliance", "food", "sink"),  # Meal Preparation
    ("tv_computer", "toy_game", "sports_equipment"),  # Leisure & Other
)

SHARED_CONTEXT: tuple[tuple[str, float], ...] = (
    ("furniture", 0.35),
    ("furnishing", 0.30),
    ("house_fixtures", 0.40),
    ("other", 0.25),
    ("clothing", 0.15),
    ("bag", 0.10),
    ("office_stationary", 0.15),
)


def proportional_allocation(total: int, weights=PAPER_CLASS_COUNTS) -> tuple[int, ...]:
    """Largest-remainder apportionment of `total` across the class weights."""
    if total < 0:
        raise GenError("total must be >= 0")
    weight_sum = sum(weights)
    quotas = [total * w / weight_sum for w in weights]
    floors = [int(q) for q in quotas]
    shortfall = total - sum(floors)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in order[:shortfall]:
        floors[i] += 1
    return tuple(floors)


def clean_genspec(
    participants: int = 16,
    segments_per_participant: int = 50,
    frames_per_segment: int = 13,
    seed: int = 0,
    participant_effect: float = 0.3,
    noise: NoiseSpec = NoiseSpec(),
) -> GenSpec:
    """Separable default: disjoint cores, shared passive context."""
    profiles = tuple(
        AdlProfile(core=core, core_prob=0.6, context=SHARED_CONTEXT, active_prob=0.9)
        for core in CORE_CATEGORIES
    )
    return GenSpec(
        seed=seed,
        participants=participants,
        segments_per_participant=proportional_allocation(segments_per_participant),
        frames_per_segment=frames_per_segment,
        adl_profiles=profiles,
        participant_effect=participant_effect,
        noise=noise,
    )


def distractor_genspec(
    participants: int = 16,
    segments_per_participant: int = 21,
    frames_per_segment: int = 13,
    seed: int = 0,
    participant_effect: float = 0.3,
    distractor_prob: float = 0.45,
    noise: NoiseSpec = NoiseSpec(),
) -> GenSpec:
    """Ablation-trend corpus: other classes' core objects appear passively.

    Presence alone is then ambiguous across classes while the hand-active
    channel stays clean, giving the active-object distinction something
    real to contribute.
    """
    profiles = []
    for adl_id, core in enumerate(CORE_CATEGORIES):
        distractors = tuple(
            (cat, distractor_prob)
            for other_id, other_core in enumerate(CORE_CATEGORIES)
            if other_id != adl_id
            for cat in other_core
        )
        profiles.append(
            AdlProfile(
                core=core,
                core_prob=0.7,
                context=SHARED_CONTEXT + distractors,
                active_prob=0.9,
            )
        )
    return GenSpec(
        seed=seed,
        participants=participants,
        segments_per_participant=proportional_allocation(segments_per_participant),
        frames_per_segment=frames_per_segment,
        adl_profiles=tuple(profiles),
        participant_effect=participant_effect,
        noise=noise,
    )


def _random_box(rng) -> Box2D:
    w = rng.uniform(40.0, 240.0)
    h = rng.uniform(40.0, 240.0)
    x1 = rng.uniform(0.0, CANVAS_W - w)
    y1 = rng.uniform(0.0, CANVAS_H - h)
    return Box2D(x1, y1, x1 + w, y1 + h)


def _raw_labels_by_category(table: CategoryTable) -> dict[str, list[str]]:
    by_cat: dict[str, list[str]] = {cat: [] for cat in table.categories}
    for raw, cat in sorted(table.raw_map.items()):
        by_cat[cat].append(raw)
    return {cat: raws or [cat] for cat, raws in by_cat.items()}


def _participant_bias(spec: GenSpec, participant_id: str, table: CategoryTable) -> dict[str, float]:
    rng = make_generator(spec.seed, "bias", participant_id)
    draws = rng.uniform(-1.0, 1.0, size=len(table))
    return {
        cat: 1.0 + spec.participant_effect * draws[i]
        for i, cat in enumerate(table.categories)
    }


def _emit_detection(rng, raw_labels: list[str]) -> ObjectDetection:
    box = _random_box(rng)
    label = raw_labels[int(rng.integers(0, len(raw_labels)))]
    score = float(rng.uniform(0.5, 1.0))
    return ObjectDetection(raw_label=label, score=score, box=box)


def _generate_segment(
    spec: GenSpec,
    table: CategoryTable,
    participant_id: str,
    video_id: str,
    segment_index: int,
    adl_id: int,
    bias: dict[str, float],
    raws_by_cat: dict[str, list[str]],
) -> Segment:
    rng = make_generator(spec.seed, "segment", participant_id, video_id, segment_index)
    profile = spec.adl_profiles[adl_id]
    frames = []
    for frame_index in range(spec.frames_per_segment):
        objects: list[ObjectDetection] = []
        hoi: list[HoiObject] = []
        for cat in profile.core:
            p = min(1.0, max(0.0, profile.core_prob * bias[cat]))
            if rng.random() < p:
                det = _emit_detection(rng, raws_by_cat[cat])
                objects.append(det)
                if rng.random() < profile.active_prob:
                    # in-contact box coincides with the detection: IoU 1
                    side = "left" if rng.integers(0, 2) == 0 else "right"
                    hoi.append(
                        HoiObject(
                            box=det.box,
                            hand_side=side,
                            contact_state="portable_object",
                            score=float(rng.uniform(0.5, 1.0)),
                        )
                    )
        for cat, base_p in profile.context:
            p = min(1.0, max(0.0, base_p * bias[cat]))
            if rng.random() < p:
                objects.append(_emit_detection(rng, raws_by_cat[cat]))
        if rng.random() < STRAY_HOI_PROB:
            hoi.append(
                HoiObject(
                    box=_random_box(rng),
                    hand_side="left" if rng.integers(0, 2) == 0 else "right",
                    contact_state="stationary_object",
                    score=float(rng.uniform(0.3, 0.9)),
                )
            )
        frames.append(
            FrameObservation(
                frame_index=frame_index, objects=tuple(objects), hoi_objects=tuple(hoi)
            )
        )
    return Segment(
        participant_id=participant_id,
        video_id=video_id,
        segment_index=segment_index,
        frames=tuple(frames),
        label=ADL_LABELS[adl_id],
    )


def _jitter_box(rng, box: Box2D, jitter: float) -> Box2D:
    deltas = rng.uniform(-jitter, jitter, size=4)
    x_lo, x_hi = sorted((box.x1 + deltas[0], box.x2 + deltas[1]))
    y_lo, y_hi = sorted((box.y1 + deltas[2], box.y2 + deltas[3]))
    if x_hi - x_lo < 1.0:
        x_hi = x_lo + 1.0
    if y_hi - y_lo < 1.0:
        y_hi = y_lo + 1.0
    return Box2D(x_lo, y_lo, x_hi, y_hi)


def perturb(
    segments: list[Segment], noise: NoiseSpec, seed: int, table: CategoryTable
) -> list[Segment]:
    """Apply the detector noise model; hoi boxes pass through untouched."""
    out = []
    for segment in segments:
        rng = make_generator(
            seed, "perturb", segment.participant_id, segment.video_id, segment.segment_index
        )
        frames = []
        for frame in segment.frames:
            objects: list[ObjectDetection] = []
            for det in frame.objects:
                if rng.random() < noise.drop_rate:
                    continue
                raw_label = det.raw_label
                if rng.random() < noise.label_confusion_rate:
                    current = table.categories[table.map_label(raw_label)]
                    others = [c for c in table.categories if c != current]
                    raw_label = others[int(rng.integers(0, len(others)))]
                box = det.box
                if noise.box_jitter_px > 0:
                    box = _jitter_box(rng, box, noise.box_jitter_px)
                objects.append(ObjectDetection(raw_label=raw_label, score=det.score, box=box))
            if noise.spurious_rate > 0:
                for _ in range(int(rng.poisson(noise.spurious_rate))):
                    objects.append(
                        ObjectDetection(
                            raw_label=table.categories[int(rng.integers(0, len(table)))],
                            score=float(rng.uniform(0.05, 0.95)),
                            box=_random_box(rng),
                        )
                    )
            frames.append(
                FrameObservation(
                    frame_index=frame.frame_index,
                    objects=tuple(objects),
                    hoi_objects=frame.hoi_objects,
                )
            )
        out.append(
            Segment(
                participant_id=segment.participant_id,
                video_id=segment.video_id,
                segment_index=segment.segment_index,
                frames=tuple(frames),
                label=segment.label,
            )
        )
    return out


@dataclass
class GeneratedCorpus:
    truth_segments: list[Segment]
    segments: list[Segment]  # after the noise model

    def record_lines(self) -> list[str]:
        return serialize_segments(self.segments)

    def truth_record_lines(self) -> list[str]:
        return serialize_segments(self.truth_segments)

    def manifest_text(self) -> str:
        return write_manifest(self.truth_segments)


def generate(spec: GenSpec, table: CategoryTable) -> GeneratedCorpus:
    """Emit the detector-like stream, its manifest, and the oracle stream."""
    spec.validate()
    for profile in spec.adl_profiles:
        for cat in list(profile.core) + [c for c, _ in profile.context]:
            if cat not in table.categories:
                raise GenError(f"profile references unknown category {cat!r}")
    raws_by_cat = _raw_labels_by_category(table)
    pad = max(2, len(str(spec.participants)))
    truth: list[Segment] = []
    for p in range(spec.participants):
        participant_id = f"p{p + 1:0{pad}d}"
        bias = _participant_bias(spec, participant_id, table)
        for adl_id, n_segments in enumerate(spec.segments_per_participant):
            video_id = f"v{adl_id + 1:02d}"
            for segment_index in range(n_segments):
                truth.append(
                    _generate_segment(
                        spec,
                        table,
                        participant_id,
                        video_id,
                        segment_index,
                        adl_id,
                        bias,
                        raws_by_cat,
                    )
                )
    noisy = perturb(truth, spec.noise, derive_seed(spec.seed, "noise"), table)
    return GeneratedCorpus(truth_segments=truth, segments=noisy)


def genspec_to_json(spec: GenSpec) -> str:
    doc = {
        "seed": spec.seed,
        "participants": spec.participants,
        "segments_per_participant": list(spec.segments_per_participant),
        "frames_per_segment": spec.frames_per_segment,
        "participant_effect": spec.participant_effect,
        "noise": asdict(spec.noise),
        "adl_profiles": [
            {
                "adl": ADL_NAMES[i],
                "core": list(p.core),
                "core_prob": p.core_prob,
                "context": [[c, prob] for c, prob in p.context],
                "active_prob": p.active_prob,
            }
            for i, p in enumerate(spec.adl_profiles)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=False)


def genspec_from_json(text: str) -> GenSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GenError(f"generator spec parse failure at line {exc.lineno}: {exc.msg}") from None
    try:
        profiles_doc = doc["adl_profiles"]
        if [p.get("adl") for p in profiles_doc] != list(ADL_NAMES):
            raise GenError(
                "adl_profiles must list all 7 ADL classes in canonical order"
            )
        profiles = tuple(
            AdlProfile(
                core=tuple(p["core"]),
                core_prob=float(p["core_prob"]),
                context=tuple((str(c), float(prob)) for c, prob in p["context"]),
                active_prob=float(p["active_prob"]),
            )
            for p in profiles_doc
        )
        spec = GenSpec(
            seed=int(doc["seed"]),
            participants=int(doc["participants"]),
            segments_per_participant=tuple(int(c) for c in doc["segments_per_participant"]),
            frames_per_segment=int(doc["frames_per_segment"]),
            adl_profiles=profiles,
            participant_effect=float(doc.get("participant_effect", 0.0)),
            noise=NoiseSpec(**doc.get("noise", {})),
        )
    except GenError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise GenError(f"invalid generator spec: {exc}") from None
    spec.validate()
    return spec
