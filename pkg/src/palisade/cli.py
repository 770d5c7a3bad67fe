"""Operator CLI: build artifacts, scan prompts, evaluate, serve the gateway.

Thin wrapper over the library; machine output goes to stdout, diagnostics to
stderr. Exit codes: 0 success, 1 operational error, 2 usage error, and 3 for
`scan` when the verdict is INJECTED (scriptable).

Artifact path precedence: command-line flags, then PALISADE_* environment
variables, then the config file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import classifier, corpus, evaluator, lexicon, rule_layer
from .gateway import load_config, serve
from .pipeline import ConfigurationError, Pipeline, PipelineConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INJECTED = 3

SPLIT_FORMAT = "palisade-split/v1"


class CliError(Exception):
    """Operational failure; message printed to stderr, exit code 1."""


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _load_split_manifest(dataset_path: str, manifest_path: str) -> corpus.SplitDataset:
    records = corpus.load_dataset(dataset_path)
    by_index = {r.source_index: r for r in records}
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read split manifest {manifest_path}: {exc}") from exc
    if doc.get("format") != SPLIT_FORMAT:
        raise CliError(f"{manifest_path} is not a {SPLIT_FORMAT} manifest")
    try:
        train = [by_index[i] for i in doc["train_indices"]]
        test = [by_index[i] for i in doc["test_indices"]]
    except KeyError as exc:
        raise CliError(f"split manifest references unknown record {exc}") from exc
    return corpus.SplitDataset(train=train, test=test, seed=doc["seed"], ratio=doc["ratio"])


def _resolve(flag_value: str | None, env_var: str, config_value: str | None, what: str) -> str:
    value = flag_value or os.environ.get(env_var) or config_value
    if not value:
        raise CliError(f"no {what} configured (flag, ${env_var}, or config file)")
    return value


def _require_file(path: str, what: str) -> str:
    if not Path(path).is_file():
        raise CliError(f"{what} not found: {path}")
    return path


def cmd_ingest(args) -> int:
    records = corpus.load_dataset(args.dataset)
    kept, dropped = corpus.filter_english(records)
    if len(kept) < 2:
        raise CliError("fewer than 2 English records after the language gate")
    split = corpus.split(kept, args.ratio, args.seed)
    manifest = {
        "format": SPLIT_FORMAT,
        "dataset": str(args.dataset),
        "seed": args.seed,
        "ratio": args.ratio,
        "language_gate": {"dropped_source_indices": dropped},
        "train_indices": [r.source_index for r in split.train],
        "test_indices": [r.source_index for r in split.test],
        "counts": {
            "total": len(records),
            "english": len(kept),
            "train": len(split.train),
            "test": len(split.test),
            "train_injected": sum(r.label for r in split.train),
            "test_injected": sum(r.label for r in split.test),
        },
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(manifest["counts"]))
    print(f"split manifest written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_expand_lexicon(args) -> int:
    split = _load_split_manifest(args.dataset, args.split)
    store = lexicon.load_vectors(_require_file(args.vectors, "vector file"))
    seeds = lexicon.load_seed_lexicon(args.seeds)
    injected = [r for r in split.train if r.label == 1]
    lex = lexicon.expand_lexicon(
        seeds,
        injected,
        args.threshold,
        store,
        train_fingerprint=corpus.dataset_fingerprint(split.train),
    )
    lex.save(args.out)
    print(
        json.dumps(
            {
                "nouns": len(lex.nouns),
                "verbs": len(lex.verbs),
                "adjectives": len(lex.adjectives),
                "warnings": len(lex.warnings),
            }
        )
    )
    print(f"lexicon written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    split = _load_split_manifest(args.dataset, args.split)
    model = classifier.train(
        split,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        l2_lambda=args.l2_lambda,
        seed=args.seed,
    )
    classifier.save_model(model, args.out)
    print(json.dumps({k: model.training_meta[k] for k in ("epochs", "final_loss")}))
    print(f"model written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    split = _load_split_manifest(args.dataset, args.split)
    lex = lexicon.InjectionLexicon.load(_require_file(args.lexicon, "lexicon"))
    tau = rule_layer.calibrate_threshold(split.train, lex)
    lex.rule_threshold = tau
    lex.train_fingerprint = corpus.dataset_fingerprint(split.train)
    lex.save(args.lexicon)
    print(json.dumps({"rule_threshold": tau}))
    print(f"threshold stored in {args.lexicon}", file=sys.stderr)
    return EXIT_OK


def _pipeline_config_from_args(args) -> PipelineConfig:
    if args.config:
        config = PipelineConfig.from_file(_require_file(args.config, "config file"))
    else:
        config = PipelineConfig.from_dict({})
    lexicon_path = args.lexicon or os.environ.get("PALISADE_LEXICON") or config.lexicon_path
    model_path = args.model or os.environ.get("PALISADE_MODEL") or config.model_path
    config.lexicon_path = lexicon_path
    config.model_path = model_path
    if getattr(args, "judge_mode", None):
        if args.judge_mode == "off":
            config.judge_enabled = False
        else:
            config.judge.mode = args.judge_mode
            config.judge_enabled = True
    if config.rule_enabled and not config.lexicon_path:
        raise CliError("no lexicon configured (flag, $PALISADE_LEXICON, or config file)")
    if config.classifier_enabled and config.classifier_backend == "native" and not config.model_path:
        raise CliError("no model configured (flag, $PALISADE_MODEL, or config file)")
    if config.rule_enabled:
        _require_file(config.lexicon_path, "lexicon")
    if config.classifier_enabled and config.classifier_backend == "native":
        _require_file(config.model_path, "model")
    return config


def cmd_scan(args) -> int:
    if args.server:
        import httpx

        try:
            response = httpx.post(
                args.server.rstrip("/") + "/v1/scan", json={"prompt": args.prompt}, timeout=60.0
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise CliError(f"gateway request failed: {exc}") from exc
        doc = response.json()
    else:
        config = _pipeline_config_from_args(args)
        try:
            pipeline = Pipeline(config)
        except ConfigurationError as exc:
            raise CliError(str(exc)) from exc
        doc = pipeline.evaluate_prompt(args.prompt).to_dict()
    print(json.dumps(doc, sort_keys=True))
    return EXIT_INJECTED if doc.get("injected") else EXIT_OK


def cmd_evaluate(args) -> int:
    split = _load_split_manifest(args.dataset, args.split)
    config = _pipeline_config_from_args(args)
    if args.judge_cache:
        config.judge.cache_dir = args.judge_cache
        if config.judge.mode == "live":
            config.judge.mode = "cache"
    try:
        report = evaluator.run_eval(split, config)
    except ConfigurationError as exc:
        raise CliError(str(exc)) from exc
    evaluator.write_report(report, args.out)
    print(evaluator.report_to_json(report), end="")
    print(evaluator.render_report(report), file=sys.stderr, end="")
    print(f"report written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    config_path = _resolve(args.config, "PALISADE_CONFIG", None, "config file")
    _require_file(config_path, "config file")
    listen = args.listen or os.environ.get("PALISADE_LISTEN")
    try:
        serve(config_path, listen_override=listen)
    except ConfigurationError as exc:
        raise CliError(str(exc)) from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="palisade", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a CSV, apply the English gate, write a split manifest")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("expand-lexicon", help="build the injection lexicon from the train split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True, help="split manifest from `ingest`")
    p.add_argument("--vectors", required=True)
    p.add_argument("--seeds", default=None, help="seed lexicon file (default: bundled)")
    p.add_argument("--threshold", type=float, default=lexicon.DEFAULT_SIMILARITY_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_expand_lexicon)

    p = sub.add_parser("train", help="train the native classifier on the train split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--epochs", type=int, default=classifier.DEFAULT_EPOCHS)
    p.add_argument("--learning-rate", type=float, default=classifier.DEFAULT_LEARNING_RATE)
    p.add_argument("--l2-lambda", type=float, default=classifier.DEFAULT_L2_LAMBDA)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="calibrate the rule threshold; stores it in the lexicon")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--lexicon", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("scan", help="scan one prompt; exit 3 if INJECTED")
    p.add_argument("--prompt", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--judge-mode", choices=["off", "stub", "cache", "live"], default=None)
    p.add_argument("--server", default=None, help="POST to a running gateway instead of scanning locally")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("evaluate", help="confusion matrices per layer and combined on the test split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--judge-mode", choices=["off", "stub", "cache", "live"], default="stub")
    p.add_argument("--judge-cache", default=None, help="cache directory for live judge responses")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="start the HTTP gateway")
    p.add_argument("--config", default=None)
    p.add_argument("--listen", default=None, help="host:port (overrides $PALISADE_LISTEN and config)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _err(str(exc))
        return EXIT_ERROR
    except corpus.DatasetError as exc:
        _err(str(exc))
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
