"""
Command line - one binary, one subcommand per pipeline stage.

    python -m app gen-data --num 3600 --seed 1 --out synth.tsv
    python -m app train --train train.tsv --val val.tsv --config toy.conf --out model.ckpt
    python -m app run --train train.tsv --val val.tsv --models 5 --out runs/a --jobs 4

Exit codes: 0 ok, 2 usage/config, 3 data format, 4 numerical failure.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from logzero import logger

from app import __version__
from app.analysis import reports as R
from app.analysis.curves import data_amount_curve
from app.analysis.effects import emoji_effects, group_effect
from app.analysis.metrics import compute_metrics
from app.analysis.patterns import trigger_pattern_report
from app.analysis.pca import explained_summary, pca_project
from app.config import ExperimentConfig, load_config
from app.ensemble import ProbabilityMatrix, best_by_size, load_proba_dir, save_proba, search_best_subset
from app.errors import DataFormatError, IESTError, UsageError
from app.model.checkpoint import load_experiment_config, load_model, save_model
from app.model.classifier import IESTClassifier
from app.pipeline import IESTPipeline, build_tokenizer
from app.schemas import EMOTIONS
from app.settings import Settings, get_settings, setup_logging
from app.sweep import load_sweep_spec, run_sweep
from app.tokenizer import TweetTokenizer, load_emoji_db
from app.tokenizer.tokenize import render_line
from app.training.trainer import fit, history_csv
from app.utils.dataset import (
    Example,
    gold_labels,
    labeled_set,
    load_examples,
    read_dataset,
    token_batches,
    write_dataset,
)
from app.utils.synthetic import SyntheticSpec, generate_synthetic


# =============================================
# Helpers
# =============================================

def _experiment_config(args) -> ExperimentConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = config.with_overrides({"seed": args.seed})
    return config


def _model_tokenizer(args, checkpoint: str) -> TweetTokenizer:
    """Tokenize the way the checkpoint was trained."""
    return build_tokenizer(load_experiment_config(checkpoint), args.emoji_db)


def _model_examples(args, checkpoint: str, path: str, labeled: bool = True) -> List[Example]:
    stored = load_experiment_config(checkpoint)
    return load_examples(path, _model_tokenizer(args, checkpoint), strip=stored.preprocess.strip_emoji, labeled=labeled)


def _predict(model: IESTClassifier, examples: List[Example]) -> List[str]:
    return [EMOTIONS[i] for i in np.argmax(model.predict_proba(token_batches(examples)), axis=1)]


def _read_predictions(path: str) -> List[str]:
    """One label per line."""
    try:
        labels = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    except OSError as e:
        raise DataFormatError(f"Cannot read predictions {path}: {e}")
    unknown = sorted(set(labels) - set(EMOTIONS))
    if unknown:
        raise DataFormatError(f"{path}: unknown labels {', '.join(unknown)}")
    return labels


def _predicted_for(args, examples: List[Example]) -> List[str]:
    if getattr(args, "pred", None):
        predicted = _read_predictions(args.pred)
        if len(predicted) != len(examples):
            raise DataFormatError(f"{args.pred}: {len(predicted)} predictions for {len(examples)} examples")
        return predicted
    if not getattr(args, "model", None):
        raise UsageError("need --model or --pred")
    return _predict(load_model(args.model), examples)


def _emit(args, text: str) -> None:
    R.write_text(text, getattr(args, "out", None))


def _report(args, payload, header, rows) -> None:
    if getattr(args, "report", "tsv") == "json":
        _emit(args, R.to_json(payload))
    else:
        _emit(args, R.tsv(header, rows))


# =============================================
# Subcommands
# =============================================

def cmd_preprocess(args, settings: Settings) -> int:
    tokenizer = TweetTokenizer(load_emoji_db(args.emoji_db), lowercase=args.lowercase)
    try:
        lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataFormatError(f"Cannot read {args.input}: {e}")
    rendered = [render_line(line, tokenizer, strip=args.strip_emoji, labeled=not args.unlabeled) for line in lines if line.strip()]
    _emit(args, "".join(f"{line}\n" for line in rendered))
    return 0


def cmd_gen_data(args, settings: Settings) -> int:
    spec = SyntheticSpec(
        num=args.num,
        seed=args.seed,
        signal=args.signal,
        emoji_rate=args.emoji_rate,
        hashtag_rate=args.hashtag_rate,
        trigger_share=args.trigger_share,
        joy_purity=args.joy_purity,
    )
    write_dataset(args.out, generate_synthetic(spec))
    logger.info(f"Wrote {spec.num} synthetic tweets to {args.out}")
    return 0


def cmd_train(args, settings: Settings) -> int:
    config = _experiment_config(args)
    tokenizer = build_tokenizer(config, args.emoji_db)
    strip = config.preprocess.strip_emoji
    train = labeled_set(load_examples(args.train, tokenizer, strip=strip))
    val = labeled_set(load_examples(args.val, tokenizer, strip=strip))
    result = fit(train, val, config, progress=settings.progress)
    save_model(result.model, args.out, config)
    csv = history_csv(result.history)
    if args.history:
        Path(args.history).write_text(csv, encoding="utf-8")
    else:
        print(csv, end="")
    logger.info(f"Saved epoch {result.best_epoch} (val_acc={result.best_val_accuracy:.4f}) to {args.out}")
    return 0


def cmd_predict(args, settings: Settings) -> int:
    model = load_model(args.model)
    examples = _model_examples(args, args.model, args.input, labeled=False)
    probs = model.predict_proba(token_batches(examples))
    if args.proba:
        save_proba(args.proba, ProbabilityMatrix(model_id=Path(args.model).stem, probs=probs), [e.digest for e in examples])
    _emit(args, "".join(f"{EMOTIONS[i]}\n" for i in np.argmax(probs, axis=1)))
    return 0


def cmd_ensemble(args, settings: Settings) -> int:
    members, order = load_proba_dir(args.probs)
    gold = [t.label for t in read_dataset(args.gold)]
    if len(gold) != len(order):
        raise DataFormatError(f"{args.gold}: {len(gold)} labels for {len(order)} cached examples")
    results = search_best_subset(members, gold, jobs=args.jobs)
    logger.info("\n" + R.console_table(R.BY_SIZE_HEADER, R.by_size_rows(best_by_size(results))))
    if args.by_size:
        Path(args.by_size).write_text(R.tsv(R.BY_SIZE_HEADER, R.by_size_rows(best_by_size(results))), encoding="utf-8")
    chosen = results[: args.top]
    _report(args, chosen, R.SUBSET_HEADER, R.subset_rows(chosen))
    return 0


def cmd_evaluate(args, settings: Settings) -> int:
    gold = [t.label for t in read_dataset(args.gold)]
    predicted = _read_predictions(args.pred)
    if len(gold) != len(predicted):
        raise DataFormatError(f"{len(predicted)} predictions for {len(gold)} gold labels")
    report = compute_metrics(gold, predicted)
    logger.info("\n" + R.metrics_console(report))
    _emit(args, R.to_json(report) if args.report == "json" else R.metrics_tsv(report))
    return 0


def cmd_analyze(args, settings: Settings) -> int:
    if args.what == "emoji":
        return _analyze_emoji(args, settings)
    if args.what == "hashtag":
        examples = _analysis_examples(args)
        effect = group_effect(examples, _predicted_for(args, examples), "has_hashtag")
        _report(args, effect, R.GROUP_HEADER, R.group_rows([effect]))
        return 0
    if args.what == "pattern":
        examples = _analysis_examples(args)
        vectors = load_model(args.model).sentence_vectors(token_batches(examples)) if args.model else None
        report = trigger_pattern_report(examples, _predicted_for(args, examples), vectors, seed=args.seed)
        _report(args, report, R.TRIGGER_HEADER, R.trigger_rows(report))
        return 0
    # pca
    if not args.model:
        raise UsageError("analyze pca needs --model")
    examples = _analysis_examples(args)
    projection = pca_project(load_model(args.model).sentence_vectors(token_batches(examples)), k=3, seed=args.seed)
    logger.info(f"{projection.num_components} components: {explained_summary(projection)}")
    rows = R.projection_rows(projection, [e.label for e in examples], [e.features.has_un_trigger for e in examples])
    _emit(args, R.tsv(R.PROJECTION_HEADER, rows))
    return 0


def _analysis_examples(args) -> List[Example]:
    if args.model:
        return _model_examples(args, args.model, args.data)
    return load_examples(args.data, TweetTokenizer(load_emoji_db(args.emoji_db)))


def _analyze_emoji(args, settings: Settings) -> int:
    if not args.model:
        raise UsageError("analyze emoji needs --model (tweets are re-predicted without each emoji)")
    model = load_model(args.model)
    # the removal effect needs emoji in the input, whatever the model was trained on
    examples = load_examples(args.data, _model_tokenizer(args, args.model))
    presence = group_effect(examples, _predicted_for(args, examples), "has_emoji")
    effects = emoji_effects(model, examples, load_emoji_db(args.emoji_db), min_count=args.min_count, jobs=args.jobs)
    if args.report == "json":
        _emit(args, R.to_json([presence, *effects]))
    else:
        _emit(args, R.tsv(R.GROUP_HEADER, R.group_rows([presence])) + "\n" + R.tsv(R.EMOJI_HEADER, R.emoji_rows(effects)))
    return 0


def cmd_sweep(args, settings: Settings) -> int:
    config = _experiment_config(args)
    if args.fractions:
        try:
            fractions = [float(f) for f in args.fractions.split(",") if f.strip()]
        except ValueError:
            raise UsageError(f"--fractions must be comma-separated numbers, got {args.fractions!r}")
        tokenizer = build_tokenizer(config, args.emoji_db)
        strip = config.preprocess.strip_emoji
        train = labeled_set(load_examples(args.train, tokenizer, strip=strip))
        val = labeled_set(load_examples(args.val, tokenizer, strip=strip))
        points = data_amount_curve(train, fractions, val, config, jobs=args.jobs)
        _report(args, points, R.CURVE_HEADER, R.curve_rows(points))
        return 0
    if not args.spec:
        raise UsageError("sweep needs --spec (preset or JSON file) or --fractions")
    spec = load_sweep_spec(args.spec, config)
    rows = run_sweep(spec, config, read_dataset(args.train), read_dataset(args.val), load_emoji_db(args.emoji_db), jobs=args.jobs)
    logger.info("\n" + R.console_table(R.SWEEP_HEADER, R.sweep_rows(rows)))
    _report(args, rows, R.SWEEP_HEADER, R.sweep_rows(rows))
    return 0


def cmd_run(args, settings: Settings) -> int:
    config = _experiment_config(args)
    pipeline = IESTPipeline(config, build_tokenizer(config, args.emoji_db), jobs=args.jobs, progress=settings.progress)
    manifest = pipeline.run(args.train, args.val, args.out, num_models=args.models, test_path=args.test, top=args.top)
    logger.info(f"Run complete: {len(manifest.artifacts)} artifacts in {args.out}")
    return 0


def cmd_serve(args, settings: Settings) -> int:
    import os

    import uvicorn

    if args.model:
        os.environ["IEST_CHECKPOINT"] = args.model
    uvicorn.run("app.main:app", host=args.host, port=args.port)
    return 0


# =============================================
# Parser
# =============================================

def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iest", description="IEST emotion classifier toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.log_level, help="DEBUG, INFO, WARNING, ERROR")
    parser.add_argument("--emoji-db", default=settings.emoji_db, help="emoji table (default: bundled snapshot)")
    sub = parser.add_subparsers(dest="command", required=True)

    def jobs(p):
        p.add_argument("--jobs", type=int, default=settings.jobs, help="worker pool size")

    p = sub.add_parser("preprocess", help="substitute markers and tokenize a dataset")
    p.add_argument("--in", "--input", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--strip-emoji", action="store_true")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--unlabeled", action="store_true", help="input has no label column")
    p.set_defaults(handler=cmd_preprocess)

    p = sub.add_parser("gen-data", help="write a synthetic labeled dataset")
    p.add_argument("--num", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--signal", type=float, default=0.8)
    p.add_argument("--emoji-rate", type=float, default=0.4)
    p.add_argument("--hashtag-rate", type=float, default=0.2)
    p.add_argument("--trigger-share", type=float, default=0.05)
    p.add_argument("--joy-purity", type=float, default=0.99)
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="fit one model")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="CSV path (default: stdout)")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="label tweets with a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--in", "--input", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--proba", help="also write a probability cache here")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("ensemble", help="search member subsets over cached probabilities")
    p.add_argument("--probs", required=True, help="directory of .proba caches")
    p.add_argument("--gold", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--report", choices=("tsv", "json"), default="tsv")
    p.add_argument("--by-size", help="also write the best-per-size table here")
    p.add_argument("--out")
    jobs(p)
    p.set_defaults(handler=cmd_ensemble)

    p = sub.add_parser("evaluate", help="metrics for a predictions file")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--report", choices=("tsv", "json"), default="tsv")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("analyze", help="emoji, hashtag, pattern and PCA analyses")
    p.add_argument("what", choices=("emoji", "hashtag", "pattern", "pca"))
    p.add_argument("--data", required=True, help="labeled dataset")
    p.add_argument("--model")
    p.add_argument("--pred", help="predictions file instead of running the model")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", choices=("tsv", "json"), default="tsv")
    p.add_argument("--out")
    jobs(p)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("sweep", help="ablation grid or data-amount curve")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--spec", help="preset (ablation, dropout, hidden, optimizer) or SweepSpec JSON")
    p.add_argument("--fractions", help="e.g. 0.25,0.5,1.0 for a data-amount curve")
    p.add_argument("--report", choices=("tsv", "json"), default="tsv")
    p.add_argument("--out")
    jobs(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("run", help="the whole pipeline, end to end")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--test")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--models", type=int, default=1, help="ensemble members")
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--out", required=True, help="output directory")
    jobs(p)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("serve", help="start the prediction API")
    p.add_argument("--model", help="checkpoint to serve (default: IEST_CHECKPOINT)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    args = build_parser(settings).parse_args(argv)
    setup_logging(args.log_level)
    if getattr(args, "jobs", 1) < 1:
        logger.error("--jobs must be >= 1")
        return UsageError.exit_code
    try:
        return args.handler(args, settings)
    except IESTError as e:
        logger.error(str(e))
        return e.exit_code
    except ValueError as e:
        # precondition failures (alias not present, bad fractions, ...)
        logger.error(str(e))
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
