"""Command-line front end: reproducible, manifest-logged runs.

Subcommands: ``convert`` (soft scores to hard labels), ``train``
(baseline / finetune / soft_lstm families from a JSON config),
``evaluate`` (trained model against a test set with gold labels),
``augment`` (translation-based augmentation), ``preprocess`` (apply a
normalization preset to a dataset), and ``report`` (evaluation artifacts
from stored predictions).

Exit codes: 0 success, 2 input/parse error, 3 training error, 4
external-service error.  Every command writes a run manifest next to its
outputs; re-running with the same inputs, config, and seed reproduces
the outputs and the manifest's deterministic core.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

from . import baselines as bl
from . import corpus, evaluate
from .augment import (
    HttpTranslationClient,
    StubTranslationClient,
    merge_augmented,
    select_offensive,
    translate_dataset,
    write_provenance_log,
    write_skip_report,
)
from .errors import (
    IoFailure,
    OfflangError,
    ParseError,
    TranslationFailure,
    UnknownLabel,
    UnmatchedId,
)
from .labels import class_distribution, convert_dataset
from .manifest import RunManifest
from .preprocess import preset_by_name, preprocess
from .corpus import Dataset, Language, Task, TweetRecord

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_TRAINING_ERROR = 3
EXIT_SERVICE_ERROR = 4

INPUT_ERRORS = (ParseError, UnmatchedId, UnknownLabel, IoFailure)


def _print_stats(stats) -> None:
    total = stats.total
    print(f"records: {total}")
    for label, count in stats.counts.items():
        if stats.fractions is None:
            print(f"  {label}: {count}")
        else:
            print(f"  {label}: {count} ({100.0 * stats.fractions[label]:.1f}%)")


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}", path=path)


def _apply_preset(ds: Dataset, preset_name: str, note: str | None = None) -> Dataset:
    """Preprocess every record's text; texts emptied by filtering fall back
    to the raw text so record counts and id alignment never change."""
    cfg = preset_by_name(preset_name, ds.language)
    records = tuple(
        TweetRecord(r.id, preprocess(r.text, cfg) or r.text, r.language, r.payload)
        for r in ds.records
    )
    provenance = f"{ds.provenance} [{note}]" if note else ds.provenance
    return Dataset(records, ds.task, ds.language, provenance)


# ---------------------------------------------------------------------------
# convert
# ---------------------------------------------------------------------------


def cmd_convert(args) -> int:
    task = Task(args.task)
    language = Language(args.language)
    manifest = RunManifest(
        "convert",
        {"task": task.value, "language": language.value, "input": args.input, "out": args.out},
        seed=None,
    )
    try:
        manifest.add_input(args.input)
        soft = corpus.load_soft_tsv(args.input, task, language)
        hard = convert_dataset(soft)
        corpus.save_canonical(hard, args.out)
        manifest.add_output(args.out)
        stats = class_distribution(hard)
        _print_stats(stats)
        manifest.set_metrics(
            counts=stats.counts, fractions=stats.fractions, records=stats.total
        )
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    manifest.finish()
    manifest.write(str(args.out) + ".manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _train_baseline(ds, config, seed, out_dir, manifest) -> None:
    spec = bl.BaselineSpec(
        kind=config.get("kind", "linear_svm"),
        class_weighting=config.get("class_weighting", "balanced"),
        hyperparams=config.get("hyperparams", {}),
        seed=seed,
    )
    preset_name = config.get("preprocess_preset", "none")
    result = bl.run_baseline_experiment(
        ds,
        spec,
        split=config.get("split", 0.8),
        seed=seed,
        preprocess_cfg=preset_by_name(preset_name, ds.language),
    )
    model_path = os.path.join(out_dir, "model.pkl")
    bl.save_baseline(result.model, result.tfidf, model_path, preprocess_preset=preset_name)
    report_path = os.path.join(out_dir, "validation_report.json")
    result.report.to_json(report_path)
    manifest.add_output(model_path)
    manifest.add_output(report_path)
    manifest.set_metrics(
        val_macro_f1=result.report.macro_f1,
        val_accuracy=result.report.accuracy,
        train_size=len(result.train_indices),
        val_size=len(result.val_indices),
    )
    manifest.data["config"]["resolved_spec"] = {
        "kind": spec.kind,
        "class_weighting": spec.class_weighting,
        "hyperparams": spec.hyperparams,
        "split": result.split,
        "preprocess_preset": preset_name,
    }


def _train_finetune(ds, config, seed, out_dir, manifest) -> None:
    from .neural import (
        EncoderSpec,
        FinetuneConfig,
        HeadSpec,
        build_classifier,
        finetune,
        save_checkpoint,
    )
    import torch

    encoder_cfg = dict(config.get("encoder", {}))
    head_cfg = dict(config.get("head", {}))
    ft_cfg = dict(config.get("finetune", {}))
    ft_cfg["seed"] = seed
    preset_name = config.get("preprocess_preset", "none")

    enc_spec = EncoderSpec(**encoder_cfg)
    head_spec = HeadSpec(**head_cfg)
    cfg = FinetuneConfig(**ft_cfg)

    preset_cfg = preset_by_name(preset_name, ds.language)
    records = tuple(
        TweetRecord(r.id, preprocess(r.text, preset_cfg) or r.text, r.language, r.payload)
        for r in ds.records
    )
    ds = Dataset(records, ds.task, ds.language, ds.provenance)

    torch.manual_seed(seed)
    model = build_classifier(enc_spec, head_spec, n_classes=len(ds.task.labels))
    model, history = finetune(model, ds, cfg)
    save_checkpoint(model, history, out_dir, preprocess_preset=preset_name)
    for name in ("config.json", "weights.pt", "history.csv"):
        manifest.add_output(os.path.join(out_dir, name))
    if history.epochs:
        last = history.epochs[-1]
        manifest.set_metrics(
            epochs=len(history.epochs),
            final_train_loss=last.train_loss,
            final_val_loss=last.val_loss,
            final_val_f1_batchavg=last.val_f1_batchavg,
        )
    manifest.data["config"]["resolved"] = {
        "encoder": dataclasses.asdict(enc_spec),
        "head": dataclasses.asdict(head_spec),
        "finetune": dataclasses.asdict(cfg),
        "preprocess_preset": preset_name,
    }


def _train_soft_lstm(ds, config, seed, out_dir, manifest) -> None:
    from .neural import SoftLstmConfig, save_checkpoint, train_soft_lstm

    lstm_cfg = dict(config.get("config", {}))
    lstm_cfg["seed"] = seed
    preset_name = config.get("preprocess_preset", "soft-label")
    cfg = SoftLstmConfig(**lstm_cfg)

    preset_cfg = preset_by_name(preset_name, ds.language)
    records = tuple(
        TweetRecord(r.id, preprocess(r.text, preset_cfg) or r.text, r.language, r.payload)
        for r in ds.records
    )
    ds = Dataset(records, ds.task, ds.language, ds.provenance)

    model, history = train_soft_lstm(ds, cfg)
    save_checkpoint(model, history, out_dir, preprocess_preset=preset_name)
    for name in ("config.json", "weights.pt", "vocab.txt", "history.csv"):
        manifest.add_output(os.path.join(out_dir, name))
    if history.epochs:
        best = min(history.epochs, key=lambda e: e.val_loss)
        manifest.set_metrics(
            epochs=len(history.epochs),
            best_val_loss=best.val_loss,
            best_epoch=best.epoch,
        )
    manifest.data["config"]["resolved"] = {
        "config": dataclasses.asdict(cfg),
        "preprocess_preset": preset_name,
    }


def cmd_train(args) -> int:
    try:
        config = _load_config(args.config)
        ds = corpus.load_canonical(args.dataset)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    family = config.get("family")
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest(
        "train",
        {"family": family, "config_file": args.config, "dataset": args.dataset,
         "out": args.out, **{k: v for k, v in config.items() if k != "family"}},
        seed=seed,
    )
    try:
        manifest.add_input(args.config)
        manifest.add_input(args.dataset)
        if family == "baseline":
            _train_baseline(ds, config, seed, args.out, manifest)
        elif family == "finetune":
            _train_finetune(ds, config, seed, args.out, manifest)
        elif family == "soft_lstm":
            _train_soft_lstm(ds, config, seed, args.out, manifest)
        else:
            print(f"error: unknown training family {family!r}", file=sys.stderr)
            return EXIT_INPUT_ERROR
    except OfflangError as exc:
        manifest.finish(status=f"failed: {exc}")
        manifest.write(os.path.join(args.out, "manifest.json"))
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING_ERROR
    manifest.finish()
    manifest.write(os.path.join(args.out, "manifest.json"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate / report
# ---------------------------------------------------------------------------


def _predict_with_model(model_path, ds):
    """Returns (predictions, description) for a baseline file or checkpoint dir."""
    if os.path.isdir(model_path):
        from .neural import load_checkpoint, predict_neural

        model, _, config = load_checkpoint(model_path)
        preset_cfg = preset_by_name(config.get("preprocess_preset", "none"), ds.language)
        texts = [preprocess(t, preset_cfg) or t for t in ds.texts()]
        pairs = predict_neural(model, texts)
        return [label for _, label in pairs], f"checkpoint:{config['family']}"
    model, tfidf, preset_name = bl.load_baseline(model_path)
    preset_cfg = preset_by_name(preset_name, ds.language)
    texts = [preprocess(t, preset_cfg) for t in ds.texts()]
    from .features import transform_corpus

    X = transform_corpus(tfidf, texts)
    return bl.predict_baseline(model, X), f"baseline:{model.spec.kind}"


def _write_eval_artifacts(report, ds, y_pred, out_dir, manifest) -> None:
    report_path = os.path.join(out_dir, "report.json")
    report.to_json(report_path)
    manifest.add_output(report_path)

    figure_path = os.path.join(out_dir, "confusion.png")
    evaluate.emit_confusion_figure(report.confusion, figure_path)
    manifest.add_output(figure_path)
    manifest.add_output(figure_path + ".csv")

    errors_path = os.path.join(out_dir, "errors.json")
    groups = evaluate.error_report(ds, y_pred)
    serializable = {
        f"{true}->{pred}": [{"id": rid, "text": text} for rid, text in entries]
        for (true, pred), entries in sorted(groups.items())
    }
    with open(errors_path, "w", encoding="utf-8") as fh:
        json.dump(serializable, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    manifest.add_output(errors_path)
    manifest.set_metrics(macro_f1=report.macro_f1, accuracy=report.accuracy)


def cmd_evaluate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest(
        "evaluate",
        {"model": args.model, "test": args.test, "gold": args.gold, "out": args.out},
        seed=None,
    )
    try:
        manifest.add_input(args.test)
        if args.gold:
            manifest.add_input(args.gold)
        ds = corpus.load_canonical(args.test)
        if args.gold:
            ds = corpus.join_gold(ds, args.gold)
        y_true_available = ds.payload_kind == "hard"
        if not y_true_available:
            print("error: test set has no labels; pass --gold", file=sys.stderr)
            return EXIT_INPUT_ERROR
        y_pred, model_desc = _predict_with_model(args.model, ds)
        report = evaluate.evaluate_predictions(ds, y_pred)
        _write_eval_artifacts(report, ds, y_pred, args.out, manifest)
        manifest.data["config"]["model_kind"] = model_desc
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except OfflangError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING_ERROR
    manifest.finish()
    manifest.write(os.path.join(args.out, "manifest.json"))
    print(f"macro F1: {report.macro_f1:.6f}  accuracy: {report.accuracy:.6f}")
    return EXIT_OK


def cmd_report(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest(
        "report",
        {"test": args.test, "pred": args.pred, "out": args.out},
        seed=None,
    )
    try:
        manifest.add_input(args.test)
        manifest.add_input(args.pred)
        ds = corpus.load_canonical(args.test)
        if args.gold:
            manifest.add_input(args.gold)
            ds = corpus.join_gold(ds, args.gold)
        with open(args.pred, encoding="utf-8", newline="") as fh:
            pred_map = {row[0]: row[1] for row in csv.reader(fh) if row}
        missing = [rid for rid in ds.ids() if rid not in pred_map]
        if missing:
            raise UnmatchedId(f"predictions missing for ids {missing[:5]}")
        y_pred = [pred_map[rid] for rid in ds.ids()]
        report = evaluate.evaluate_predictions(ds, y_pred)
        _write_eval_artifacts(report, ds, y_pred, args.out, manifest)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    manifest.finish()
    manifest.write(os.path.join(args.out, "manifest.json"))
    print(f"macro F1: {report.macro_f1:.6f}  accuracy: {report.accuracy:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------


def cmd_augment(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest(
        "augment",
        {
            "base": args.base, "source": args.source, "target_language": args.target_lang,
            "client": args.client, "max_retries": args.max_retries,
            "max_skip_fraction": args.max_skip_fraction, "out": args.out,
        },
        seed=None,
    )
    try:
        manifest.add_input(args.base)
        manifest.add_input(args.source)
        base = corpus.load_canonical(args.base)
        source = corpus.load_canonical(args.source)
        target_lang = Language(args.target_lang)
        if args.client == "stub":
            client = StubTranslationClient()
        else:
            client = HttpTranslationClient()
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except TranslationFailure as exc:
        print(f"translation client error: {exc}", file=sys.stderr)
        return EXIT_SERVICE_ERROR

    try:
        offensive = select_offensive(source)
        result = translate_dataset(offensive, client, target_lang, max_retries=args.max_retries)
        merged = merge_augmented(base, result.dataset)

        merged_path = os.path.join(args.out, "merged.tsv")
        corpus.save_canonical(merged, merged_path)
        provenance_path = os.path.join(args.out, "provenance.jsonl")
        write_provenance_log(result.provenance, provenance_path)
        skip_path = os.path.join(args.out, "skipped.jsonl")
        write_skip_report(result.skipped, skip_path)
        for path in (merged_path, provenance_path, skip_path):
            manifest.add_output(path)
        manifest.set_metrics(
            base_records=len(base),
            translated=len(result.provenance),
            skipped=len(result.skipped),
            merged_records=len(merged),
        )
        total = len(offensive)
        if total and len(result.skipped) / total > args.max_skip_fraction:
            manifest.finish(status="failed: too many skipped translations")
            manifest.write(os.path.join(args.out, "manifest.json"))
            print(
                f"error: {len(result.skipped)}/{total} translations failed "
                f"(> {args.max_skip_fraction:.0%}); see {skip_path}",
                file=sys.stderr,
            )
            return EXIT_SERVICE_ERROR
    except OfflangError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    manifest.finish()
    manifest.write(os.path.join(args.out, "manifest.json"))
    print(f"merged {len(base)} base + {len(result.provenance)} translated records")
    return EXIT_OK


# ---------------------------------------------------------------------------
# preprocess
# ---------------------------------------------------------------------------


def cmd_preprocess(args) -> int:
    try:
        ds = corpus.load_canonical(args.input)
        cfg = preset_by_name(args.preset, ds.language)
        records = tuple(
            TweetRecord(r.id, preprocess(r.text, cfg) or r.text, r.language, r.payload)
            for r in ds.records
        )
        out_ds = Dataset(records, ds.task, ds.language, f"{ds.provenance} [preprocessed:{args.preset}]")
        corpus.save_canonical(out_ds, args.out)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    manifest = RunManifest(
        "preprocess", {"input": args.input, "preset": args.preset, "out": args.out}, seed=None
    )
    manifest.add_input(args.input)
    manifest.add_output(args.out)
    manifest.finish()
    manifest.write(str(args.out) + ".manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="offlang",
        description="Multilingual offensive-language classification toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a soft-score TSV to hard labels")
    p.add_argument("--task", required=True, choices=[t.value for t in Task])
    p.add_argument("--language", required=True, choices=[l.value for l in Language])
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="train a baseline / finetune / soft_lstm model")
    p.add_argument("--config", required=True, help="JSON config with a 'family' field")
    p.add_argument("--dataset", required=True, help="canonical TSV training set")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained model on a test set")
    p.add_argument("--model", required=True, help="model.pkl file or checkpoint directory")
    p.add_argument("--test", required=True, help="canonical TSV test set")
    p.add_argument("--gold", default=None, help="gold id,label CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("augment", help="translate OFF records and merge into a base set")
    p.add_argument("--base", required=True, help="canonical TSV target-language training set")
    p.add_argument("--source", required=True, help="canonical TSV hard-labeled source set")
    p.add_argument("--target-lang", required=True, choices=[l.value for l in Language])
    p.add_argument("--client", choices=("stub", "live"), default="stub")
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--max-skip-fraction", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("preprocess", help="apply a preprocessing preset to a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--preset", default="language-default",
                   choices=("none", "language-default", "soft-label"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("report", help="evaluation artifacts from stored predictions")
    p.add_argument("--test", required=True, help="canonical TSV with hard labels")
    p.add_argument("--pred", required=True, help="predictions id,label CSV")
    p.add_argument("--gold", default=None, help="optional gold id,label CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
