"""Command line front end.

Exit codes: 0 clean, 1 completed with diagnostics, 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import codec, datasets, grammar, metrics, pipeline
from .backends import backend_from_spec
from .codec import (
    AllPermutations,
    AnswerOrder,
    Diagnostic,
    FixedPermutations,
    LinearPermutations,
    RandomOrder,
    RoleOrder,
)

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2


def _load_records(path, task, fmt, diagnostics: list[Diagnostic]):
    return list(
        datasets.load_dataset(path, task, fmt=fmt, on_skip=diagnostics.append)
    )


def _order_strategy(name: Optional[str], seed: int):
    if name is None:
        return None
    if name == "random":
        return RandomOrder(seed)
    if name == "role":
        return RoleOrder()
    return AnswerOrder()


def _permute_scheme(name: Optional[str], seed: int, cap: int, count: int):
    if name is None:
        return None
    if name == "all":
        return AllPermutations(cap)
    if name == "fixed":
        return FixedPermutations(count, seed)
    return LinearPermutations(seed)


def cmd_prepare(args) -> int:
    diagnostics: list[Diagnostic] = []
    records = _load_records(args.input, args.task, args.format, diagnostics)
    if args.qanom_extra:
        extra = _load_records(args.qanom_extra, "qanom", args.format, diagnostics)
        records = datasets.build_joint_corpus(
            records,
            extra,
            datasets.JointCorpusConfig(
                duplication_factor=args.duplication_factor,
                task_signal=args.task_signal,
                seed=args.seed,
            ),
        )
    skipped: list[Diagnostic] = []
    pairs = datasets.emit_training_pairs(
        records,
        strategy=_order_strategy(args.order, args.seed),
        scheme=_permute_scheme(args.permute, args.seed, args.cap, args.count),
        task_signal=args.task_signal,
        on_skip=skipped.append,
    )
    written = datasets.write_training_pairs(pairs, args.output)
    print(f"wrote {written} pairs to {args.output}")
    if skipped:
        print(f"skipped {len(skipped)} records without usable QAs", file=sys.stderr)
    for diag in diagnostics:
        print(f"{diag.kind}: {diag.detail}", file=sys.stderr)
    return EXIT_DIAGNOSTICS if diagnostics else EXIT_OK


def cmd_stats(args) -> int:
    diagnostics: list[Diagnostic] = []
    stats = datasets.compute_stats(
        datasets.load_dataset(
            args.input, args.task, fmt=args.format, on_skip=diagnostics.append
        )
    )
    if args.json:
        print(json.dumps(stats.to_dict()))
    else:
        for key, value in stats.to_dict().items():
            print(f"{key} = {'-' if value is None else value}")
    for diag in diagnostics:
        print(f"{diag.kind}: {diag.detail}", file=sys.stderr)
    return EXIT_DIAGNOSTICS if diagnostics else EXIT_OK


def cmd_parse(args) -> int:
    backend = backend_from_spec(args.backend)
    if args.config:
        config = pipeline.PipelineConfig.from_mapping(pipeline.load_config(args.config))
    else:
        config = pipeline.PipelineConfig()
    url = config.resolved_backend_url()
    if url and args.backend == "echo":
        backend = backend_from_spec(url)
    if args.text:
        with open(args.input, encoding="utf-8") as handle:
            sentences = [
                pipeline.tag_tokens(line.split(), str(i))
                for i, line in enumerate(handle)
                if line.strip()
            ]
    else:
        sentences = pipeline.read_tagged_file(args.input)
    tasks = tuple(t.strip() for t in args.tasks.split(",") if t.strip())
    for task in tasks:
        if task not in datasets.TASKS:
            print(f"unknown task {task!r}", file=sys.stderr)
            return EXIT_USAGE

    raw_rows: list[dict] = []
    sink = raw_rows.append if args.raw_out else None
    try:
        annotations = pipeline.parse_sentences(
            sentences, tasks, backend, config, raw_sink=sink
        )
    except pipeline.BackendUnavailable as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    diag_count = 0
    with open(args.output, "w", encoding="utf-8") as handle:
        for annotation in annotations:
            diag_count += len(annotation.diagnostics())
            for row in pipeline.annotation_to_records(annotation):
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    if args.raw_out:
        with open(args.raw_out, "w", encoding="utf-8") as handle:
            for row in raw_rows:
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    qa_total = sum(a.qa_count() for a in annotations)
    print(f"parsed {len(annotations)} sentences, {qa_total} QAs -> {args.output}")
    if diag_count:
        print(f"{diag_count} decoding diagnostics", file=sys.stderr)
    return EXIT_DIAGNOSTICS if diag_count else EXIT_OK


def cmd_evaluate(args) -> int:
    diagnostics: list[Diagnostic] = []
    pred = datasets.to_predicate_qas(
        _load_records(args.pred, args.task, "jsonl", diagnostics)
    )
    gold = datasets.to_predicate_qas(
        _load_records(args.gold, args.task, "jsonl", diagnostics)
    )
    if args.task == "discourse":
        config = metrics.MatchConfig.for_discourse()
        if args.gamma is not None:
            config = metrics.MatchConfig(gamma=args.gamma, mode="discourse")
        report = metrics.score_discourse(pred, gold, config)
    else:
        config = metrics.MatchConfig.for_qasrl()
        if args.gamma is not None:
            config = metrics.MatchConfig(gamma=args.gamma, mode="qasrl")
        report = metrics.score_ua_la(pred, gold, config)
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        print(report.to_text())
    for diag in diagnostics + report.diagnostics:
        print(f"{diag.kind}: {diag.detail}", file=sys.stderr)
    return EXIT_DIAGNOSTICS if (diagnostics or report.diagnostics) else EXIT_OK


def cmd_validate(args) -> int:
    """Partition raw generated sequences by decodability.

    Reads the JSONL written by ``parse --raw-out``. Every line lands in
    exactly one bucket; buckets sum to the line count.
    """
    buckets = {
        "valid": 0,
        "malformed-sequence": 0,
        "unalignable-answer": 0,
        "unparseable-question": 0,
    }
    total = 0
    with open(args.input, encoding="utf-8") as handle:
        for raw_line in handle:
            line = raw_line.strip()
            if not line:
                continue
            total += 1
            row = json.loads(line)
            task = row.get("task", args.task)
            qas, diags = codec.delinearize_output(
                row["raw"], row.get("tokens", ()), task
            )
            kinds = {d.kind for d in diags}
            if codec.MALFORMED_SEQUENCE in kinds:
                buckets["malformed-sequence"] += 1
                continue
            if codec.UNALIGNABLE_ANSWER in kinds:
                buckets["unalignable-answer"] += 1
                continue
            if _has_unparseable_question(qas, row.get("verb_form"), task):
                buckets["unparseable-question"] += 1
                continue
            buckets["valid"] += 1
    for name, count in buckets.items():
        print(f"{name} = {count}")
    print(f"total = {total}")
    if sum(buckets.values()) != total:
        print("bucket counts do not sum to total", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if buckets["valid"] == total else EXIT_DIAGNOSTICS


def _has_unparseable_question(qas, verb_form, task) -> bool:
    for qa in qas:
        if task == "discourse":
            try:
                grammar.match_discourse_prefix(qa.question)
            except grammar.NoPrefixMatch:
                return True
        else:
            try:
                grammar.parse_question(qa.question, verb_form or "")
            except grammar.UnparseableQuestion:
                return True
    return False


def cmd_analyze_positions(args) -> int:
    diagnostics: list[Diagnostic] = []
    pred = datasets.to_predicate_qas(
        _load_records(args.pred, args.task, "jsonl", diagnostics)
    )
    gold = datasets.to_predicate_qas(
        _load_records(args.gold, args.task, "jsonl", diagnostics)
    )
    config = (
        metrics.MatchConfig.for_discourse()
        if args.task == "discourse"
        else metrics.MatchConfig.for_qasrl()
    )
    for bucket in metrics.position_precision(pred, gold, config):
        print(
            f"position {bucket.position}: precision {bucket.precision:.3f} "
            f"(support {bucket.support})"
        )
    for diag in diagnostics:
        print(f"{diag.kind}: {diag.detail}", file=sys.stderr)
    return EXIT_DIAGNOSTICS if diagnostics else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaparse", description="QA-based semantic annotation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    prepare = sub.add_parser("prepare", help="emit training pairs from gold records")
    prepare.add_argument("--input", required=True)
    prepare.add_argument("--task", required=True, choices=datasets.TASKS)
    prepare.add_argument("--output", required=True)
    prepare.add_argument("--format", default="jsonl", choices=("jsonl", "csv"))
    group = prepare.add_mutually_exclusive_group()
    group.add_argument("--order", choices=("random", "role", "answer"))
    group.add_argument("--permute", choices=("all", "fixed", "linear"))
    prepare.add_argument("--seed", type=int, default=0)
    prepare.add_argument("--cap", type=int, default=10)
    prepare.add_argument("--count", type=int, default=3)
    prepare.add_argument("--qanom-extra", help="nominal gold file to mix in")
    prepare.add_argument("--duplication-factor", type=int, default=14)
    prepare.add_argument(
        "--task-signal", choices=[s for s in datasets.TASK_SIGNALS if s]
    )
    prepare.set_defaults(func=cmd_prepare)

    stats = sub.add_parser("stats", help="corpus counts")
    stats.add_argument("--input", required=True)
    stats.add_argument("--task", required=True, choices=datasets.TASKS)
    stats.add_argument("--format", default="jsonl", choices=("jsonl", "csv"))
    stats.add_argument("--json", action="store_true")
    stats.set_defaults(func=cmd_stats)

    parse = sub.add_parser("parse", help="annotate sentences via a backend")
    parse.add_argument("--input", required=True)
    parse.add_argument("--output", required=True)
    parse.add_argument("--tasks", default="qasrl")
    parse.add_argument(
        "--backend",
        default="echo",
        help="'echo', 'replay:GOLD.jsonl', or a backend URL",
    )
    parse.add_argument("--config")
    parse.add_argument("--text", action="store_true", help="input is raw text lines")
    parse.add_argument("--raw-out", help="also write undecoded outputs as JSONL")
    parse.set_defaults(func=cmd_parse)

    evaluate = sub.add_parser("evaluate", help="score predictions against gold")
    evaluate.add_argument("--pred", required=True)
    evaluate.add_argument("--gold", required=True)
    evaluate.add_argument("--task", required=True, choices=datasets.TASKS)
    evaluate.add_argument("--gamma", type=float)
    evaluate.add_argument("--json", action="store_true")
    evaluate.set_defaults(func=cmd_evaluate)

    validate = sub.add_parser("validate", help="partition raw outputs by decodability")
    validate.add_argument("--input", required=True)
    validate.add_argument("--task", default="qasrl", choices=datasets.TASKS)
    validate.set_defaults(func=cmd_validate)

    positions = sub.add_parser(
        "analyze-positions", help="precision by generation position"
    )
    positions.add_argument("--pred", required=True)
    positions.add_argument("--gold", required=True)
    positions.add_argument("--task", required=True, choices=datasets.TASKS)
    positions.set_defaults(func=cmd_analyze_positions)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, datasets.SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
