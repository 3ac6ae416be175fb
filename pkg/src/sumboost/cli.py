"""Command-line entry point.

Exit codes: 0 success, 1 learning failure, 2 usage, 3 data error, 4 provider error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .boosting import EnsembleModel
from .cost import estimate_cost, estimate_passes
from .dataset import load_dataset
from .errors import DataError, LearningError, ProviderError
from .prompts import PromptConfig
from .runner import METHODS, RunConfig, evaluate, load_inputs, make_backend, prepare, train_model, trace_to_csv
from .sampling import ClusterSampler
from .synth import write_synthetic
from .textualize import PromptTemplate, describe_dataset, load_descriptions, save_descriptions

log = logging.getLogger("sumboost")

EXIT_OK, EXIT_LEARNING, EXIT_USAGE, EXIT_DATA, EXIT_PROVIDER = 0, 1, 2, 3, 4


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    g = p.add_argument_group("run options")
    g.add_argument("--config", help="JSON file of RunConfig keys; flags override it")
    g.add_argument("--seed", type=int, help="base random seed (default 0)")
    g.add_argument("--backend", help="http, mock or mock:<oracle.json> (default mock)")
    g.add_argument("--cache", help="JSONL response cache; reused across runs")
    g.add_argument("--offline", action="store_true", default=None, help="fail on cache misses")
    g.add_argument("--model-id", dest="model", help="provider model name")
    g.add_argument("--base-url", help="provider base URL for --backend http")
    g.add_argument("--parallelism", type=int)
    if data:
        g.add_argument("--data", help="CSV file")
        g.add_argument("--meta", help="JSON metadata for the CSV")
        g.add_argument("--encoding", help="bins5 (default), plain10, percentile, std_dev, quartiles")
        g.add_argument("--prompts", help="JSON prompt config (metadata, directives)")
        g.add_argument("--template", help="JSON description template instead of LLM conversion")


def _boost_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rounds", type=int, help="boosting rounds T (default 30)")
    p.add_argument("--mu", type=float, help="acceptance margin (default 0.08 (K-1))")
    p.add_argument("--support-size", type=int, help="examples per summary (default: fill the context)")
    p.add_argument("--resample-cap", type=int, help="draws per round before giving up (default 25)")
    p.add_argument("--cluster-threshold", type=float)
    p.add_argument("--order", choices=("shuffled", "grouped"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumboost", description="Boosted LLM summaries for tabular data.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="describe every row as text (JSONL)")
    _common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="boost summaries and write a model file")
    _common(p)
    _boost_flags(p)
    p.add_argument("--descriptions", help="JSONL from convert; described on the fly when omitted")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-clusters", help="write the per-class cluster assignment as JSON")

    p = sub.add_parser("predict", help="label rows with a saved model")
    _common(p)
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", help="write labels here instead of stdout")

    p = sub.add_parser("evaluate", help="all methods over several seeds")
    _common(p)
    _boost_flags(p)
    p.add_argument("--seeds", type=int, help="number of seeds (default 3)")
    p.add_argument("--candidates", type=int, help="candidate prompts per few-shot/summary fit")
    p.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--out", help="directory for report.csv, report.txt and trace.csv")

    p = sub.add_parser("trace", help="per-round epsilon/alpha CSV from a model file")
    p.add_argument("--model-file", required=True)
    p.add_argument("--out")

    p = sub.add_parser("estimate-cost", help="token and dollar cost of a boosting run")
    p.add_argument("--n", type=int, required=True, help="dataset size")
    p.add_argument("--t", type=int, required=True, help="boosting rounds")
    p.add_argument("--r", type=int, required=True, help="resamples per round")
    p.add_argument("--summary-tokens", type=int, default=2048)
    p.add_argument("--prediction-tokens", type=int, default=210)
    p.add_argument("--price", type=float, default=0.002, help="dollars per 1K tokens")

    p = sub.add_parser("estimate-passes", help="LLM passes for finetuning or boosting")
    p.add_argument("mode", choices=("finetune", "boost"))
    p.add_argument("a", type=int, help="epochs (finetune) or rounds (boost)")
    p.add_argument("b", type=int, help="examples (finetune) or resamples (boost)")

    p = sub.add_parser("synth", help="write a synthetic dataset and its mock oracle")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--flip", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    return parser


_RUN_KEYS = ("data", "meta", "encoding", "prompts", "template", "backend", "model", "base_url",
             "rounds", "mu", "support_size", "resample_cap", "candidates", "cluster_threshold",
             "order", "seed", "seeds", "parallelism", "cache", "offline")


def run_config(args) -> RunConfig:
    flags = {k: getattr(args, k, None) for k in _RUN_KEYS}
    if getattr(args, "methods", None):
        flags["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    return RunConfig.merged(args.config, **flags)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_convert(args) -> int:
    cfg = run_config(args)
    ds = load_inputs(cfg)
    backend = make_backend(cfg, ds.classes)
    p = prepare(ds, cfg, backend, cfg.seed)
    save_descriptions(p.descriptions.values(), args.out)
    log.info("wrote %d descriptions to %s", len(p.descriptions), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = run_config(args)
    ds = load_inputs(cfg)
    backend = make_backend(cfg, ds.classes)
    descs = load_descriptions(args.descriptions) if args.descriptions else None
    p = prepare(ds, cfg, backend, cfg.seed, descs)
    labels = ds.labels()
    sampler = ClusterSampler.from_descriptions(
        [p.descriptions[i] for i in p.split.train_idx],
        {i: int(labels[i]) for i in p.split.train_idx}, backend, cfg.cluster_threshold)
    if args.dump_clusters:
        Path(args.dump_clusters).write_text(sampler.model.to_json() + "\n", encoding="utf-8")
    model, result = train_model(ds, cfg, backend, cfg.seed, p, sampler)
    model.save(args.out)
    print(f"{len(result.rounds)} rounds, chosen T = {model.chosen_T}; "
          f"network calls {backend.network_calls}, cache hits {backend.cache_hits}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = run_config(args)
    if not cfg.data or not cfg.meta:
        raise DataError("--data and --meta are required")
    model = EnsembleModel.load(args.model_file)
    ds = load_dataset(cfg.data, cfg.meta, require_target=False)
    if tuple(ds.classes) != tuple(model.classes):
        raise DataError(f"model classes {list(model.classes)} differ from metadata {list(ds.classes)}")
    backend = make_backend(cfg, ds.classes)
    config = PromptConfig.for_dataset(ds, cfg.prompts)
    template = PromptTemplate.load(cfg.template) if cfg.template else None
    descs = describe_dataset(ds, model.encoder, backend, config, template=template,
                             parallelism=cfg.parallelism)
    labels = model.predict_many(descs, backend)
    _emit("".join(f"{lab if lab is not None else ''}\n" for lab in labels), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = run_config(args)
    ds = load_inputs(cfg)
    backend = make_backend(cfg, ds.classes)
    report = evaluate(ds, cfg, backend)
    if args.out:
        report.write(args.out)
    sys.stdout.write(report.to_table())
    return EXIT_OK


def cmd_trace(args) -> int:
    model = EnsembleModel.load(args.model_file)
    seed = "" if model.seed is None else model.seed
    rows = [{"seed": seed, "round": r + 1, "epsilon": rnd.epsilon, "alpha": rnd.alpha, "resamples": rnd.resamples,
             "val_error": model.validation_errors[r] if r < len(model.validation_errors) else "",
             "chosen": int(r + 1 <= model.chosen_T)}
            for r, rnd in enumerate(model.rounds)]
    _emit(trace_to_csv(rows), args.out)
    return EXIT_OK


def cmd_estimate_cost(args) -> int:
    try:
        est = estimate_cost(args.n, args.t, args.r, args.summary_tokens, args.prediction_tokens, args.price)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    print(f"total tokens: {est.total_tokens}")
    print(f"dollar cost:  ${est.dollar_cost:.4f}")
    return EXIT_OK


def cmd_estimate_passes(args) -> int:
    try:
        print(estimate_passes(args.mode, args.a, args.b))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    return EXIT_OK


def cmd_synth(args) -> int:
    paths = write_synthetic(args.out_dir, n=args.n, k=args.k, flip=args.flip, seed=args.seed)
    print(json.dumps({k: str(v) for k, v in paths.items()}, indent=2))
    return EXIT_OK


COMMANDS = {
    "convert": cmd_convert,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "trace": cmd_trace,
    "estimate-cost": cmd_estimate_cost,
    "estimate-passes": cmd_estimate_passes,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (DataError, OSError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LearningError as exc:
        print(f"learning failed: {exc}", file=sys.stderr)
        return EXIT_LEARNING


if __name__ == "__main__":
    sys.exit(main())
