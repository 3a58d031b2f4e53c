"""Batch command-line harness.

Subcommands: ``attack`` (run the optimizer over a dataset), ``train-victim``
(fit and serialize a local victim), ``verify`` (compare against exhaustive
enumeration on small spaces), ``report`` (tabulate result files), and
``estimate`` (Monte-Carlo threshold-clearing probabilities).

Runs are driven by one JSON config file with sections ``attack``,
``objective``, ``constraints``, ``oracle``, ``metrics``, and ``io``. Flags
override file values; ``CEA_VICTIM_URL`` overrides the configured oracle URL
and the ``--victim-url`` flag overrides both.

Exit codes: 0 success, 2 configuration error, 3 I/O or data error,
4 remote-protocol error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import data as bundled_data
from .errors import (
    CeaError,
    ConfigError,
    InvalidConfig,
    MalformedResults,
    RemoteProtocolError,
)
from .lexicon import LexiconSource
from .metrics import (
    EmbeddingTable,
    MetricReport,
    SummaryReport,
    aggregate,
    modification_rate,
    sentence_bleu,
)
from .objectives import CompositeObjective, ObjectiveContext, embedding_similarity
from .optimizer import enumerate_optimum, estimate_rare_event_probability, run_attack
from .oracle import (
    VICTIM_URL_ENV,
    ClassifierOnlyBackend,
    Oracle,
    QueryBudget,
    RemoteVictim,
)
from .tokenization import detokenize, tokens_for_bleu
from .types import (
    AttackConfig,
    AttackConstraints,
    SamplingDistribution,
    TokenizedDocument,
    config_from_dict,
)
from .victims import (
    VictimTrainConfig,
    load_victim,
    save_victim,
    train_local_victim,
    training_accuracy,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4


# -- config and dataset plumbing ---------------------------------------------

def load_config(path) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


def load_dataset(path) -> list[dict[str, Any]]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedResults(f"{path}:{lineno}: {exc}") from exc
            records.append(rec)
    return records


def _resolve_path(spec: str) -> Path:
    if spec.startswith("bundled:"):
        return bundled_data.path(spec.split(":", 1)[1])
    return Path(spec)


def document_from_record(rec: dict[str, Any]) -> TokenizedDocument:
    if "text" in rec:
        return TokenizedDocument.from_text(rec["text"], label=int(rec["label"]))
    if "source" in rec:
        return TokenizedDocument.from_text(rec["source"], reference=rec["reference"])
    raise ConfigError(f"dataset record has neither 'text' nor 'source': {rec!r}")


class RunSetup:
    """Shared construction of attack components from a config dict."""

    def __init__(
        self,
        cfg: dict[str, Any],
        victim_url: Optional[str] = None,
        seed: Optional[int] = None,
    ):
        self.cfg = cfg
        attack_section = dict(cfg.get("attack", {}))
        if "constraints" not in attack_section and "constraints" in cfg:
            attack_section["constraints"] = cfg["constraints"]
        if seed is not None:
            attack_section["seed"] = seed
        obj_section = cfg.get("objective", {})
        self.kind = obj_section.get("kind", "soft-label")
        attack_section.setdefault("objective_kind", self.kind)
        if obj_section.get("target_label") is not None:
            attack_section.setdefault("target_label", obj_section["target_label"])
        try:
            self.attack_config = config_from_dict(attack_section)
        except (TypeError, InvalidConfig) as exc:
            raise ConfigError(f"bad attack section: {exc}") from exc

        metrics_section = cfg.get("metrics", {})
        emb_spec = metrics_section.get("embeddings")
        if not emb_spec:
            raise ConfigError("metrics.embeddings is required")
        self.embeddings = EmbeddingTable.load(_resolve_path(emb_spec))
        self.similarity = embedding_similarity(self.embeddings)
        self.successes_only = bool(metrics_section.get("successes_only", True))

        oracle_section = cfg.get("oracle", {})
        self.oracle_type = oracle_section.get("type", "local")
        self.victim = None
        self.remote = None
        self.num_classes = oracle_section.get("num_classes")
        self.classes: Optional[list[int]] = None
        url = victim_url or os.environ.get(VICTIM_URL_ENV) or oracle_section.get("url")
        if self.oracle_type == "local":
            model_path = oracle_section.get("model")
            if not model_path:
                raise ConfigError("oracle.model is required for a local oracle")
            self.victim = load_victim(_resolve_path(model_path))
            self.num_classes = self.victim.num_classes
            self.classes = self.victim.classes
        elif self.oracle_type == "remote":
            if not url:
                raise ConfigError(
                    f"remote oracle needs a URL (config, {VICTIM_URL_ENV}, or flag)"
                )
            self.remote = RemoteVictim(url)
            if self.num_classes is None and self.kind != "seq2seq":
                try:
                    info = self.remote.info()
                except RemoteProtocolError:
                    raise
                self.num_classes = info.get("num_classes")
        else:
            raise ConfigError(f"unknown oracle type {self.oracle_type!r}")

        io_section = cfg.get("io", {})
        self.workers = int(io_section.get("workers", 1))
        self.trace_path = io_section.get("trace_path")

    def make_oracle(self) -> Oracle:
        budget = QueryBudget(max_queries=self.attack_config.max_queries)
        if self.oracle_type == "local":
            return Oracle(ClassifierOnlyBackend(self.victim), budget)
        return Oracle(self.remote, budget)

    def make_objective(self, doc: TokenizedDocument, oracle: Oracle) -> CompositeObjective:
        constraints: AttackConstraints = self.attack_config.constraints
        ctx = ObjectiveContext(
            document=doc,
            oracle=oracle,
            similarity_fn=self.similarity,
            kind=self.kind,
            num_classes=int(self.num_classes or 2),
            min_similarity=constraints.min_similarity,
            max_mod_rate=constraints.max_mod_rate,
            target_label=self.attack_config.target_label,
            classes=self.classes,
        )
        return CompositeObjective(ctx)

    def record_seed(self, index: int) -> int:
        return self.attack_config.seed + index

    def record_config(self, index: int) -> AttackConfig:
        cfg = self.attack_config
        return AttackConfig(
            n_candidates=cfg.n_candidates,
            iterations=cfg.iterations,
            rho=cfg.rho,
            gamma0=cfg.gamma0,
            seed=self.record_seed(index),
            constraints=cfg.constraints,
            objective_kind=cfg.objective_kind,
            target_label=cfg.target_label,
            early_stop=cfg.early_stop,
            monotone_threshold=cfg.monotone_threshold,
            smoothing=cfg.smoothing,
            max_queries=cfg.max_queries,
            full_trace=cfg.full_trace,
            report_on=cfg.report_on,
        )


def _attack_one(
    setup: RunSetup, lexicons: LexiconSource, index: int, rec: dict[str, Any]
) -> dict[str, Any]:
    doc = document_from_record(rec)
    space = lexicons.space_for(index, doc)
    oracle = setup.make_oracle()
    objective = setup.make_objective(doc, oracle)
    config = setup.record_config(index)
    result = run_attack(doc, space, objective, config)

    reported = (
        result.best_sampled if config.report_on == "best_sampled"
        else result.final_assignment
    )
    metrics = _example_metrics(setup, doc, reported, objective, result)
    out = {
        "index": index,
        "original": detokenize(doc.tokens),
        "adversarial": detokenize(reported.tokens),
        "success": result.success,
        "metrics": metrics.to_dict(),
        "query_count": result.query_count,
        "seed": config.seed,
        "final_score": result.final_score,
        "gamma_trace": result.gamma_trace(),
    }
    if setup.trace_path:
        out["trace"] = [r.to_dict() for r in result.trace]
    return out


def _example_metrics(setup, doc, assignment, objective, result) -> MetricReport:
    sim = objective.similarity_to_original(assignment.tokens)
    sim = None if sim == float("-inf") else sim
    kwargs: dict[str, Any] = {}
    if setup.kind == "seq2seq":
        ref = doc.reference
        orig_out = objective.original_output()
        adv_out = objective.context.oracle.query_translate(
            [detokenize(assignment.tokens)]
        )[0]
        bleu_o = sentence_bleu(tokens_for_bleu(orig_out), ref)
        bleu_a = sentence_bleu(tokens_for_bleu(adv_out), ref)
        out_sim = objective.context.output_similarity_fn or setup.similarity
        kwargs = {
            "bleu_original": bleu_o,
            "bleu_adversarial": bleu_a,
            "sim_original": out_sim(tokens_for_bleu(orig_out), ref),
            "sim_adversarial": out_sim(tokens_for_bleu(adv_out), ref),
        }
    return MetricReport(
        success=result.success,
        mod_rate=modification_rate(doc.tokens, assignment.tokens),
        semantic_similarity=sim,
        queries=result.query_count,
        **kwargs,
    )


# -- subcommands --------------------------------------------------------------

def cmd_attack(args) -> int:
    cfg = load_config(args.config)
    setup = RunSetup(cfg, victim_url=args.victim_url, seed=args.seed)
    if args.workers is not None:
        setup.workers = args.workers
    lexicons = LexiconSource(args.lexicons)
    records = load_dataset(args.dataset)

    if setup.workers > 1:
        with ThreadPoolExecutor(max_workers=setup.workers) as pool:
            futures = [
                pool.submit(_attack_one, setup, lexicons, i, rec)
                for i, rec in enumerate(records)
            ]
            outputs = [f.result() for f in futures]  # input order preserved
    else:
        outputs = [
            _attack_one(setup, lexicons, i, rec) for i, rec in enumerate(records)
        ]

    reports = [MetricReport.from_dict(o["metrics"]) for o in outputs]
    summary = aggregate(reports, successes_only=setup.successes_only)

    trace_lines = []
    for o in outputs:
        for t in o.pop("trace", []):
            trace_lines.append({"index": o["index"], **t})

    with open(args.output, "w", encoding="utf-8") as fh:
        for o in outputs:
            fh.write(json.dumps(o, sort_keys=True))
            fh.write("\n")
        fh.write(json.dumps({"summary": summary.to_dict()}, sort_keys=True))
        fh.write("\n")
    if setup.trace_path:
        with open(setup.trace_path, "a", encoding="utf-8") as fh:
            for line in trace_lines:
                fh.write(json.dumps(line, sort_keys=True))
                fh.write("\n")
    print(f"attacked {summary.total} examples: SAR {100.0 * summary.sar:.1f}")
    return EXIT_OK


def cmd_train_victim(args) -> int:
    records = load_dataset(args.dataset)
    pairs = [(r["text"], int(r["label"])) for r in records]
    cfg_dict: dict[str, Any] = {}
    if args.model_config:
        cfg_dict = load_config(args.model_config)
    if args.kind:
        cfg_dict["kind"] = args.kind
    if args.seed is not None:
        cfg_dict["seed"] = args.seed
    holdout = float(cfg_dict.pop("holdout_fraction", 0.0))
    try:
        train_cfg = VictimTrainConfig(**cfg_dict)
    except TypeError as exc:
        raise ConfigError(f"bad victim config: {exc}") from exc

    eval_pairs = pairs
    if holdout > 0.0:
        rng = np.random.default_rng(train_cfg.seed)
        perm = rng.permutation(len(pairs))
        n_hold = max(1, int(holdout * len(pairs)))
        hold_idx = set(perm[:n_hold].tolist())
        eval_pairs = [pairs[i] for i in sorted(hold_idx)]
        pairs = [p for i, p in enumerate(pairs) if i not in hold_idx]

    model = train_local_victim(pairs, train_cfg)
    save_victim(model, args.output)
    acc = training_accuracy(model, eval_pairs)
    label = "held-out" if holdout > 0.0 else "training"
    print(f"trained {model.kind} on {len(pairs)} examples; {label} accuracy {acc:.3f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    setup = RunSetup(cfg, victim_url=args.victim_url)
    lexicons = LexiconSource(args.lexicons)
    records = load_dataset(args.dataset)
    matches = 0
    for i, rec in enumerate(records):
        doc = document_from_record(rec)
        space = lexicons.space_for(i, doc)
        oracle = setup.make_oracle()
        objective = setup.make_objective(doc, oracle)
        try:
            _, exact_score = enumerate_optimum(
                doc, space, objective, cap=args.cap
            )
        except CeaError as exc:
            raise type(exc)(f"record {i}: {exc}") from exc
        result = run_attack(doc, space, objective, setup.record_config(i))
        ce_score = result.final_score
        match = abs(ce_score - exact_score) <= 1e-9
        matches += int(match)
        print(f"record {i}: ce={ce_score:.6f} exact={exact_score:.6f} "
              f"match={'yes' if match else 'no'}")
    rate = matches / len(records) if records else 0.0
    print(f"match rate: {rate:.3f} ({matches}/{len(records)})")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for path in sorted(args.results):
        lines = load_dataset(path)
        example_lines = [l for l in lines if "summary" not in l]
        if not example_lines:
            raise MalformedResults(f"{path} contains no example records")
        try:
            reports = [MetricReport.from_dict(l["metrics"]) for l in example_lines]
        except (KeyError, TypeError) as exc:
            raise MalformedResults(f"{path}: bad example record: {exc}") from exc
        summary_lines = [l for l in lines if "summary" in l]
        successes_only = True
        if summary_lines:
            successes_only = bool(
                summary_lines[-1]["summary"].get("successes_only", True)
            )
        summary = aggregate(reports, successes_only=successes_only)
        rows.append((Path(path).name, summary))

    def fmt(value: Optional[float], scale: float = 100.0) -> str:
        return "-" if value is None else f"{scale * value:.1f}"

    header = f"{'file':<28}{'SAR':>8}{'Mod':>8}{'SS':>8}{'BD':>8}{'SD':>8}{'Queries':>10}"
    print(header)
    print("-" * len(header))
    for name, s in rows:
        print(
            f"{name:<28}{fmt(s.sar):>8}{fmt(s.mean_mod_rate):>8}"
            f"{fmt(s.mean_similarity):>8}{fmt(s.mean_bleu_drop):>8}"
            f"{fmt(s.mean_semantic_drop):>8}{s.mean_queries:>10.1f}"
        )
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = load_config(args.config)
    setup = RunSetup(cfg, victim_url=args.victim_url)
    lexicons = LexiconSource(args.lexicons)
    records = load_dataset(args.dataset)
    for i, rec in enumerate(records):
        doc = document_from_record(rec)
        space = lexicons.space_for(i, doc)
        oracle = setup.make_oracle()
        objective = setup.make_objective(doc, oracle)
        theta = SamplingDistribution.uniform(space)
        est = estimate_rare_event_probability(
            theta, space, objective, args.gamma, args.n_samples,
            setup.record_seed(i),
        )
        print(json.dumps({
            "index": i,
            "gamma": args.gamma,
            "estimate": est.estimate,
            "stderr": est.stderr,
            "n_samples": est.n_samples,
        }, sort_keys=True))
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cea",
        description="Word-substitution attacks via cross-entropy optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="attack every record of a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--lexicons", required=True,
                   help="directory of <index>.json files or a .jsonl bundle")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--victim-url", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("train-victim", help="fit and serialize a local victim")
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--model-config", default=None)
    p.add_argument("--kind", choices=["naive-bayes", "logistic-regression"],
                   default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train_victim)

    p = sub.add_parser("verify", help="compare attacks against exhaustive enumeration")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--lexicons", required=True)
    p.add_argument("--cap", type=int, default=10 ** 6)
    p.add_argument("--victim-url", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="tabulate one or more result files")
    p.add_argument("results", nargs="+")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("estimate", help="rare-event probability under uniform sampling")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--lexicons", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--victim-url", default=None)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidConfig) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RemoteProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (OSError, CeaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
