"""Run configuration, backend construction and the multi-seed evaluation loop."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import fit_few_shot, select_k, knn_classify, zero_shot_many
from .boosting import TrainConfig, train
from .dataset import TabularDataset, load_dataset, split
from .discretize import DatasetEncoder, parse_encoding
from .errors import DataError, LearningError
from .llm import HttpProvider, LLMClient, MockProvider, OracleSpec, ResponseCache
from .llm.mock import NOISY_RULE
from .prompts import PromptConfig
from .sampling import ClusterSampler
from .summary import LearnerConfig, error_rate, fit_summary, predict_indices
from .textualize import PromptTemplate, describe_dataset

log = logging.getLogger(__name__)

METHODS = ("zero-shot", "few-shot", "summary", "summary-boosting", "knn")


@dataclass
class RunConfig:
    """Everything a command needs; JSON config keys use these field names."""

    data: str | None = None
    meta: str | None = None
    encoding: str = "bins5"
    prompts: str | None = None
    template: str | None = None
    backend: str = "mock"
    model: str = "text-curie-001"
    base_url: str | None = None
    rounds: int = 30
    mu: float | None = None
    support_size: int | None = None
    resample_cap: int = 25
    candidates: int = 25
    cluster_threshold: float = 0.05
    order: str = "shuffled"
    seed: int = 0
    seeds: int = 3
    parallelism: int = 4
    cache: str | None = None
    offline: bool = False
    methods: list[str] = field(default_factory=lambda: list(METHODS))

    def __post_init__(self):
        for name in ("rounds", "resample_cap", "candidates", "seeds", "parallelism"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")
        if self.support_size is not None and self.support_size < 1:
            raise DataError("support_size must be positive")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise DataError(f"methods must be a nonempty subset of {list(METHODS)}")
        parse_encoding(self.encoding)

    @classmethod
    def merged(cls, file_path: str | None = None, **flags) -> "RunConfig":
        """Built-in defaults, then the JSON file, then flags that were actually given."""
        values = {}
        if file_path:
            values = json.loads(Path(file_path).read_text(encoding="utf-8"))
            names = {f.name for f in fields(cls)}
            unknown = set(values) - names
            if unknown:
                raise DataError(f"unknown config keys: {sorted(unknown)}")
        values.update({k: v for k, v in flags.items() if v is not None})
        return cls(**values)

    @property
    def seed_list(self) -> list[int]:
        return [self.seed + i for i in range(self.seeds)]

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(rounds=self.rounds, mu=self.mu, resample_cap=self.resample_cap,
                           support_size=self.support_size, order=self.order,
                           cluster_threshold=self.cluster_threshold, seed=seed)

    def learner_config(self, seed: int) -> LearnerConfig:
        return LearnerConfig(candidates=self.candidates, order=self.order, support_size=self.support_size,
                             cluster_threshold=self.cluster_threshold, seed=seed)


def make_backend(cfg: RunConfig, classes: Sequence[str] = ()) -> LLMClient:
    """``mock`` (rule-free noisy oracle), ``mock:<oracle.json>`` or ``http``."""
    cache = ResponseCache(cfg.cache)
    if cfg.backend == "http":
        provider = HttpProvider(cfg.model, **({"base_url": cfg.base_url} if cfg.base_url else {}))
    elif cfg.backend == "mock" or cfg.backend.startswith("mock:"):
        path = cfg.backend[5:]
        oracle = OracleSpec.load(path) if path else OracleSpec(NOISY_RULE, classes=tuple(classes),
                                                               flip=0.2, seed=cfg.seed)
        provider = MockProvider(oracle)
    else:
        raise DataError(f"unknown backend {cfg.backend!r}; use http, mock or mock:<path>")
    return LLMClient(provider, cache, parallelism=cfg.parallelism, offline=cfg.offline)


def load_inputs(cfg: RunConfig) -> TabularDataset:
    if not cfg.data or not cfg.meta:
        raise DataError("--data and --meta are required")
    return load_dataset(cfg.data, cfg.meta)


@dataclass
class Prepared:
    """One seed's split, fitted encoder and descriptions."""

    split: object
    encoder: DatasetEncoder
    descriptions: dict
    config: PromptConfig


def prepare(ds: TabularDataset, cfg: RunConfig, backend, seed: int, descriptions=None) -> Prepared:
    sp = split(ds, seed)
    encoder = DatasetEncoder(parse_encoding(cfg.encoding)).fit(ds, sp.train_idx)
    config = PromptConfig.for_dataset(ds, cfg.prompts)
    if descriptions is None:
        template = PromptTemplate.load(cfg.template) if cfg.template else None
        descriptions = describe_dataset(ds, encoder, backend, config, template=template,
                                        parallelism=cfg.parallelism)
    by_row = {d.row_index: d for d in descriptions}
    missing = set(range(len(ds))) - set(by_row)
    if missing:
        raise DataError(f"descriptions missing for {len(missing)} rows, e.g. row {min(missing)}")
    return Prepared(sp, encoder, by_row, config)


def train_model(ds, cfg: RunConfig, backend, seed: int, prepared: Prepared | None = None,
                sampler: ClusterSampler | None = None):
    p = prepared or prepare(ds, cfg, backend, seed)
    return train(ds, p.descriptions, p.config, backend, cfg.train_config(seed),
                 train_idx=p.split.train_idx, val_idx=p.split.val_idx, encoder=p.encoder, sampler=sampler)


def _seed_errors(ds, cfg: RunConfig, backend, seed: int) -> tuple[dict[str, float], list[dict]]:
    p = prepare(ds, cfg, backend, seed)
    labels = ds.labels()
    train_d = [p.descriptions[i] for i in p.split.train_idx]
    val_d = [p.descriptions[i] for i in p.split.val_idx]
    test_d = [p.descriptions[i] for i in p.split.test_idx]
    y_train, y_val, y_test = (labels[list(ix)] for ix in (p.split.train_idx, p.split.val_idx, p.split.test_idx))
    sampler = ClusterSampler.from_descriptions(
        train_d, {i: int(labels[i]) for i in p.split.train_idx}, backend, cfg.cluster_threshold)

    errors: dict[str, float] = {}
    trace: list[dict] = []
    for method in cfg.methods:
        try:
            if method == "zero-shot":
                pred = zero_shot_many(test_d, p.config, backend)
            elif method == "few-shot":
                fs, _ = fit_few_shot(train_d, val_d, p.config, backend, sampler,
                                     candidates=cfg.candidates, seed=seed)
                pred = fs.classify_many(test_d, backend)
            elif method == "summary":
                h, _ = fit_summary(train_d, val_d, p.config, backend, sampler, cfg.learner_config(seed))
                pred = predict_indices(h, test_d, backend)
            elif method == "summary-boosting":
                model, result = train_model(ds, cfg, backend, seed, p, sampler)
                pred = model.predict_indices(test_d, backend)
                for r, rr in enumerate(result.rounds):
                    trace.append({
                        "seed": seed, "round": r + 1, "epsilon": rr.epsilon, "alpha": rr.alpha,
                        "resamples": rr.resamples,
                        "val_error": model.validation_errors[r] if r < len(model.validation_errors) else "",
                        "chosen": int(r + 1 <= model.chosen_T),
                    })
            else:  # knn
                emb = backend.embed([d.feature_text for d in train_d + val_d + test_d])
                e_tr, e_va, e_te = np.split(emb, [len(train_d), len(train_d) + len(val_d)])
                k = select_k(e_tr, y_train, e_va, y_val)
                pred = np.array([knn_classify(q, e_tr, y_train, k) for q in e_te])
            errors[method] = error_rate(pred, y_test)
        except LearningError as exc:
            log.warning("seed %d, %s failed: %s", seed, method, exc)
            errors[method] = float("nan")
    return errors, trace


@dataclass
class Report:
    seeds: list[int]
    errors: dict[str, list[float]]  # method -> per-seed test error
    trace: list[dict]

    def summary_rows(self) -> list[dict]:
        rows = []
        for method, errs in self.errors.items():
            ok = np.array([e for e in errs if not np.isnan(e)])
            rows.append({
                "method": method,
                "mean": float(ok.mean()) if ok.size else float("nan"),
                "std": float(ok.std()) if ok.size else float("nan"),
                "failed": len(errs) - ok.size,
                "per_seed": errs,
            })
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "mean_error", "std_error", "failed"] + [f"seed_{s}" for s in self.seeds])
        for r in self.summary_rows():
            w.writerow([r["method"], f"{r['mean']:.4f}", f"{r['std']:.4f}", r["failed"]]
                       + [f"{e:.4f}" for e in r["per_seed"]])
        return buf.getvalue()

    def to_table(self) -> str:
        rows = self.summary_rows()
        width = max(len("method"), *(len(r["method"]) for r in rows))
        lines = [f"{'method':<{width}}  test error (mean ± std over {len(self.seeds)} seeds)",
                 "-" * (width + 40)]
        for r in rows:
            note = f"  ({r['failed']} failed)" if r["failed"] else ""
            lines.append(f"{r['method']:<{width}}  {r['mean']:.4f} ± {r['std']:.4f}{note}")
        return "\n".join(lines) + "\n"

    def trace_csv(self) -> str:
        return trace_to_csv(self.trace)

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"csv": out / "report.csv", "table": out / "report.txt", "trace": out / "trace.csv"}
        paths["csv"].write_text(self.to_csv(), encoding="utf-8")
        paths["table"].write_text(self.to_table(), encoding="utf-8")
        paths["trace"].write_text(self.trace_csv(), encoding="utf-8")
        return paths


TRACE_FIELDS = ("seed", "round", "epsilon", "alpha", "resamples", "val_error", "chosen")


def trace_to_csv(trace: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TRACE_FIELDS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in trace:
        w.writerow({k: (f"{v:.10f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def evaluate(ds: TabularDataset, cfg: RunConfig, backend) -> Report:
    """Every requested method on every seed's test split."""
    errors = {m: [] for m in cfg.methods}
    trace = []
    for seed in cfg.seed_list:
        errs, tr = _seed_errors(ds, cfg, backend, seed)
        for m in cfg.methods:
            errors[m].append(errs[m])
        trace.extend(tr)
    return Report(cfg.seed_list, errors, trace)
