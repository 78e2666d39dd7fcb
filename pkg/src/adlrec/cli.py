"""Command-line pipeline: synth -> ingest-validate -> featurize -> train /
evaluate / ablate -> report.

Every output directory receives exactly one run_manifest.json recording the
command, resolved configuration, input digests, seed, and tool version, so
any result file can be traced back to its inputs. All randomness flows from
--seed (default DEFAULT_SEED). Numbers printed to the terminal are rounded
to 2 decimals; files keep full precision.
"""

import argparse
import csv
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .evaluation import (
    EvaluationError,
    confusion_matrix,
    grid_to_csv,
    normalize_rows,
    per_class_f1,
    report_to_document,
    run_ablation,
    run_loso,
    weighted_f1,
)
from .features import FeatureConfig, FeatureError, feature_matrix, feature_names
from .models import (
    ModelFormatError,
    TrainConfig,
    TrainingError,
    load_model,
    resolve_kind,
    save_model,
    train_matrix,
)
from .records import RecordError, load_corpus
from .synthgen import (
    GenError,
    NoiseSpec,
    clean_genspec,
    distractor_genspec,
    generate,
    genspec_from_json,
    genspec_to_json,
)
from .taxonomy import (
    ADL_NAMES,
    NUM_ADL_CLASSES,
    TaxonomyError,
    default_category_table,
    load_category_table,
)

DEFAULT_SEED = 1729

_ERRORS = (
    TaxonomyError,
    RecordError,
    FeatureError,
    TrainingError,
    EvaluationError,
    GenError,
    ModelFormatError,
    OSError,
)


def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_run(
    out_dir: Path,
    command: str,
    config: dict,
    inputs: list[Path],
    seed: int,
    files: dict[str, str],
) -> None:
    """Write output files plus the directory's RunManifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {}
    for name, content in files.items():
        data = content.encode("utf-8")
        (out_dir / name).write_bytes(data)
        outputs[name] = _sha256_bytes(data)
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256_bytes(Path(p).read_bytes()) for p in inputs},
        "outputs": outputs,
        "seed": seed,
        "tool_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )


def _load_table(args):
    if getattr(args, "taxonomy", None):
        return load_category_table(Path(args.taxonomy).read_text("utf-8")), [
            Path(args.taxonomy)
        ]
    return default_category_table(), []


def _load_segments(args, require_labels=True):
    inputs = [Path(args.records)]
    with open(args.records, encoding="utf-8") as record_stream:
        manifest_stream = None
        if getattr(args, "manifest", None):
            inputs.append(Path(args.manifest))
            manifest_stream = open(args.manifest, encoding="utf-8")
        elif require_labels:
            raise RecordError("training mode requires --manifest")
        try:
            result, diagnostics = load_corpus(
                record_stream, manifest_stream, require_labels=require_labels
            )
        finally:
            if manifest_stream is not None:
                manifest_stream.close()
    for diag in diagnostics:
        print(f"{args.records}:{diag.line}: rejected record: {diag.message}", file=sys.stderr)
    return result, diagnostics, inputs


def _feature_config(args, table) -> FeatureConfig:
    return FeatureConfig(
        representation=args.representation,
        use_active=args.active,
        taxonomy_hash=table.content_hash,
    )


def cmd_synth(args) -> int:
    if args.spec:
        spec = genspec_from_json(Path(args.spec).read_text("utf-8"))
        inputs = [Path(args.spec)]
    else:
        noise = NoiseSpec(
            drop_rate=args.drop_rate,
            spurious_rate=args.spurious_rate,
            label_confusion_rate=args.label_confusion_rate,
            box_jitter_px=args.box_jitter,
        )
        builder = clean_genspec if args.preset == "clean" else distractor_genspec
        spec = builder(
            participants=args.participants,
            segments_per_participant=args.segments,
            frames_per_segment=args.frames,
            seed=args.seed,
            noise=noise,
        )
        inputs = []
    table, table_inputs = _load_table(args)
    corpus = generate(spec, table)
    files = {
        "records.jsonl": "\n".join(corpus.record_lines()) + "\n",
        "truth_records.jsonl": "\n".join(corpus.truth_record_lines()) + "\n",
        "manifest.csv": corpus.manifest_text(),
        "genspec.json": genspec_to_json(spec) + "\n",
    }
    _write_run(
        Path(args.out),
        "synth",
        {"spec": args.spec, "preset": args.preset, "taxonomy_hash": table.content_hash},
        inputs + table_inputs,
        spec.seed,
        files,
    )
    print(
        f"wrote {len(corpus.segments)} segments "
        f"({spec.participants} participants) to {args.out}"
    )
    return 0


def cmd_ingest_validate(args) -> int:
    require = args.manifest is not None
    result, diagnostics, _ = _load_segments(args, require_labels=require)
    n_valid = sum(len(s.frames) for s in result.segments)
    print(
        f"segments: {len(result.segments)}  valid records: {n_valid}  "
        f"rejected records: {len(diagnostics)}"
    )
    for key in result.labels_without_frames:
        print(f"manifest label without frames: {key}", file=sys.stderr)
    return 1 if diagnostics else 0


def _features_csv(segments, table, config) -> str:
    X, keys = feature_matrix(segments, table, config)
    labels = {s.key: s.label for s in segments}
    out = io.StringIO()
    out.write(
        f"# adlrec-features representation={config.representation} "
        f"active={str(config.use_active).lower()} taxonomy={config.taxonomy_hash}\n"
    )
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["participant_id", "video_id", "segment_index", "adl_label"]
        + feature_names(table, config)
    )
    for row, key in zip(X, keys):
        label = labels[key]
        writer.writerow(
            [key.participant_id, key.video_id, key.segment_index]
            + [label.name if label else ""]
            + [repr(v) for v in row]
        )
    return out.getvalue()


def cmd_featurize(args) -> int:
    table, table_inputs = _load_table(args)
    result, diagnostics, inputs = _load_segments(args, require_labels=not args.inference)
    config = _feature_config(args, table)
    files = {"features.csv": _features_csv(result.segments, table, config)}
    _write_run(
        Path(args.out),
        "featurize",
        {
            "representation": config.representation,
            "use_active": config.use_active,
            "taxonomy_hash": config.taxonomy_hash,
            "rejected_records": len(diagnostics),
        },
        inputs + table_inputs,
        args.seed,
        files,
    )
    print(
        f"featurized {len(result.segments)} segments -> "
        f"{config.dimension(len(table))} columns"
    )
    if diagnostics:
        print(f"rejected records: {len(diagnostics)}", file=sys.stderr)
        return 1
    return 0


def cmd_train(args) -> int:
    table, table_inputs = _load_table(args)
    result, diagnostics, inputs = _load_segments(args)
    config = _feature_config(args, table)
    X, keys = feature_matrix(result.segments, table, config)
    labels = {s.key: s.label.id for s in result.segments}
    y = [labels[k] for k in keys]
    cfg = TrainConfig(kind=resolve_kind(args.model), seed=args.seed)
    model = train_matrix(X, y, cfg, feature_config=config)
    files = {"model.json": save_model(model) + "\n"}
    _write_run(
        Path(args.out),
        "train",
        {
            "model": model.kind,
            "representation": config.representation,
            "use_active": config.use_active,
            "taxonomy_hash": config.taxonomy_hash,
            "hyperparameters": model.hyperparameters,
        },
        inputs + table_inputs,
        args.seed,
        files,
    )
    print(
        f"trained {model.kind} on {X.shape[0]} segments "
        f"({model.metadata['stopping_reason']} after {model.metadata['iterations']} iterations)"
    )
    return 1 if diagnostics else 0


def _score_fixed_model(args, table, inputs) -> int:
    model = load_model(Path(args.model).read_text("utf-8"))
    if model.feature_config.taxonomy_hash != table.content_hash:
        raise FeatureError("model was trained under a different taxonomy version")
    result, diagnostics, more_inputs = _load_segments(args)
    X, keys = feature_matrix(result.segments, table, model.feature_config)
    labels = {s.key: s.label.id for s in result.segments}
    y_true = [labels[k] for k in keys]
    y_pred = model.predict_labels(X)
    score = weighted_f1(y_true, y_pred, NUM_ADL_CLASSES)
    matrix = confusion_matrix(y_true, y_pred, NUM_ADL_CLASSES)
    normalized, zero_rows = normalize_rows(matrix)
    f1s, support = per_class_f1(y_true, y_pred, NUM_ADL_CLASSES)

    predictions = io.StringIO()
    writer = csv.writer(predictions, lineterminator="\n")
    writer.writerow(["participant_id", "video_id", "segment_index", "true_adl", "predicted_adl"])
    for key, yt, yp in zip(keys, y_true, y_pred):
        writer.writerow(
            [key.participant_id, key.video_id, key.segment_index, ADL_NAMES[yt], ADL_NAMES[int(yp)]]
        )
    report = {
        "mode": "fixed-model",
        "weighted_f1": score,
        "per_class_f1": f1s.tolist(),
        "support": support.tolist(),
        "confusion": matrix.tolist(),
        "normalized_confusion": normalized.tolist(),
        "zero_support_rows": zero_rows,
        "model_kind": model.kind,
        "model_metadata": model.metadata,
    }
    files = {
        "report.json": json.dumps(report, indent=2) + "\n",
        "predictions.csv": predictions.getvalue(),
    }
    _write_run(
        Path(args.out),
        "evaluate",
        {"model_file": args.model, "taxonomy_hash": table.content_hash},
        inputs + more_inputs + [Path(args.model)],
        args.seed,
        files,
    )
    print(f"weighted F1 on {len(y_true)} segments: {score:.2f}")
    return 1 if diagnostics else 0


def cmd_evaluate(args) -> int:
    table, table_inputs = _load_table(args)
    if Path(args.model).is_file():
        return _score_fixed_model(args, table, table_inputs)
    result, diagnostics, inputs = _load_segments(args)
    config = _feature_config(args, table)
    cfg = TrainConfig(kind=resolve_kind(args.model), seed=args.seed)
    report = run_loso(result.segments, table, config, cfg)
    files = {"report.json": json.dumps(report_to_document(report), indent=2) + "\n"}
    _write_run(
        Path(args.out),
        "evaluate",
        {
            "model": cfg.resolved()[0],
            "representation": config.representation,
            "use_active": config.use_active,
            "taxonomy_hash": table.content_hash,
        },
        inputs + table_inputs,
        args.seed,
        files,
    )
    print(
        f"LOSO weighted F1: {report.mean_weighted_f1:.2f} +/- {report.std_weighted_f1:.2f}  "
        f"participants > 0.5: {report.percent_above_half:.0f}%"
    )
    for fold in report.folds:
        print(f"  {fold.participant_id}: F1 {fold.weighted_f1:.2f} (n={fold.n_test})")
    return 1 if diagnostics else 0


def cmd_ablate(args) -> int:
    table, table_inputs = _load_table(args)
    result, diagnostics, inputs = _load_segments(args)
    kinds = [resolve_kind(k.strip()) for k in args.models.split(",") if k.strip()]
    if not kinds:
        raise TrainingError("no models requested")
    cells = run_ablation(result.segments, table, kinds, args.seed)
    grid_csv = grid_to_csv(cells)
    ablation_doc = [
        {
            "representation": cell.feature_config.representation,
            "use_active": cell.feature_config.use_active,
            "model": cell.kind,
            "report": report_to_document(cell.report),
        }
        for cell in cells
    ]
    files = {
        "grid.csv": grid_csv,
        "ablation.json": json.dumps(ablation_doc, indent=2) + "\n",
    }
    _write_run(
        Path(args.out),
        "ablate",
        {"models": kinds, "taxonomy_hash": table.content_hash},
        inputs + table_inputs,
        args.seed,
        files,
    )
    print(_render_grid(grid_csv), end="")
    return 1 if diagnostics else 0


def _render_grid(grid_csv: str) -> str:
    """Terminal view of a grid file, 2-decimal rounding."""
    rows = list(csv.reader(io.StringIO(grid_csv)))
    out = [
        f"{'representation':<16}{'active':<8}{'model':<20}"
        f"{'mean wF1':<12}{'std':<8}{'% > 0.5':<8}"
    ]
    for row in rows[1:]:
        rep, active, model, mean, std, pct = row[:6]
        out.append(
            f"{rep:<16}{active:<8}{model:<20}"
            f"{float(mean):<12.2f}{float(std):<8.2f}{float(pct):<8.0f}"
        )
    return "\n".join(out) + "\n"


def _render_report(doc: dict) -> str:
    out = []
    if "mean_weighted_f1" in doc:
        out.append(
            f"mean weighted F1: {doc['mean_weighted_f1']:.2f} +/- {doc['std_weighted_f1']:.2f}"
        )
        out.append(f"participants > 0.5: {doc['percent_above_half']:.0f}%")
    else:
        out.append(f"weighted F1: {doc['weighted_f1']:.2f}")
    out.append("row-normalized confusion matrix:")
    names = doc.get("class_names", ADL_NAMES)
    for name, row in zip(names, doc["normalized_confusion"]):
        cells = " ".join(f"{v:.2f}" for v in row)
        out.append(f"  {name:<32} {cells}")
    for fold in doc.get("folds", []):
        out.append(f"  {fold['participant_id']}: F1 {fold['weighted_f1']:.2f}")
    return "\n".join(out) + "\n"


def cmd_report(args) -> int:
    text = Path(args.input).read_text("utf-8")
    if args.input.endswith(".csv") or text.startswith("representation,"):
        print(_render_grid(text), end="")
        return 0
    doc = json.loads(text)
    print(_render_report(doc), end="")
    return 0


def _add_common_io(sub, records=True, taxonomy=True, out=True):
    if records:
        sub.add_argument("--records", required=True, help="frame record JSONL file")
        sub.add_argument("--manifest", help="segment label manifest CSV")
    if taxonomy:
        sub.add_argument("--taxonomy", help="category table JSON (default: packaged table)")
    if out:
        sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED, help="root random seed")
    sub.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="worker count hint; results are identical for any value",
    )


def _add_feature_flags(sub):
    sub.add_argument(
        "--representation",
        choices=("counts", "binary", "both"),
        default="binary",
        help="Bag-of-Objects representation",
    )
    sub.add_argument(
        "--active",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="append the active-object channel block",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adlrec",
        description="Object-centric ADL recognition pipeline over detection records.",
    )
    parser.add_argument("--version", action="version", version=f"adlrec {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic labeled corpus")
    synth.add_argument("--spec", help="generator spec JSON (overrides preset flags)")
    synth.add_argument("--preset", choices=("clean", "distractor"), default="clean")
    synth.add_argument("--participants", type=int, default=16)
    synth.add_argument(
        "--segments", type=int, default=50, help="segments per participant (per-ADL split is proportional)"
    )
    synth.add_argument("--frames", type=int, default=13, help="frames per segment (1 FPS)")
    synth.add_argument("--drop-rate", type=float, default=0.0)
    synth.add_argument("--spurious-rate", type=float, default=0.0)
    synth.add_argument("--label-confusion-rate", type=float, default=0.0)
    synth.add_argument("--box-jitter", type=float, default=0.0)
    _add_common_io(synth, records=False)
    synth.set_defaults(func=cmd_synth)

    validate = commands.add_parser("ingest-validate", help="validate record/manifest files")
    _add_common_io(validate, out=False, taxonomy=False)
    validate.set_defaults(func=cmd_ingest_validate)

    featurize = commands.add_parser("featurize", help="write the feature matrix CSV")
    _add_common_io(featurize)
    _add_feature_flags(featurize)
    featurize.add_argument(
        "--inference", action="store_true", help="allow unlabeled segments (no manifest)"
    )
    featurize.set_defaults(func=cmd_featurize)

    train = commands.add_parser("train", help="train one classifier on all segments")
    _add_common_io(train)
    _add_feature_flags(train)
    train.add_argument("--model", default="logreg", help="logreg|rf|gb|mlp")
    train.set_defaults(func=cmd_train)

    evaluate = commands.add_parser(
        "evaluate", help="LOSO-evaluate a model kind, or score a saved model file"
    )
    _add_common_io(evaluate)
    _add_feature_flags(evaluate)
    evaluate.add_argument(
        "--model",
        default="logreg",
        help="model kind (logreg|rf|gb|mlp) for LOSO, or a saved model.json path",
    )
    evaluate.set_defaults(func=cmd_evaluate)

    ablate = commands.add_parser("ablate", help="run the feature x model ablation grid")
    _add_common_io(ablate)
    ablate.add_argument(
        "--models", default="logreg,rf,gb,mlp", help="comma-separated model kinds"
    )
    ablate.set_defaults(func=cmd_ablate)

    report = commands.add_parser("report", help="render a report.json or grid.csv")
    report.add_argument("--in", dest="input", required=True, help="report or grid file")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
