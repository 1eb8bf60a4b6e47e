"""Dataset loading, statistics, and training-pair emission.

The canonical on-disk form is JSONL, one record per line::

    {"task": "qasrl", "sentence_id": "s1", "domain": "wikinews",
     "tokens": [...], "predicate_index": 2, "verb_form": "shoot",
     "is_predicate": true,
     "qas": [{"question": "Who was shot?",
              "answers": [{"text": "Both", "start_token": 0, "end_token": 1}]}]}

Role tasks (qasrl, qanom) carry one record per predicate; discourse
records are sentence level with the predicate fields null. A thin CSV
adapter covers the common one-row-per-answer export layout; anything else
should be converted to canonical JSONL first (see scripts/download_data.py).
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Optional, Sequence

from . import codec
from .codec import (
    AnswerSpan,
    Diagnostic,
    InputEncodingConfig,
    LinearizationStrategy,
    PermutationScheme,
    QAPair,
)

TASKS = ("qasrl", "qanom", "discourse")

TASK_SIGNALS = (None, "prefix", "marker", "output_type")

VERBAL_PREFIX = "parse verbal: "
NOMINAL_PREFIX = "parse nominal: "
VERBAL_MARKER = "[VERBAL_PREDICATE]"
NOMINAL_MARKER = "[NOMINAL_PREDICATE]"
OUTPUT_TYPE_SEPARATOR = " [TYPE] "


class SchemaError(ValueError):
    """A dataset row does not fit the expected layout."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class InsufficientRecords(ValueError):
    """A sample was requested that exceeds the filtered population."""


@dataclass(frozen=True)
class DatasetRecord:
    task: str
    sentence_id: str
    tokens: tuple[str, ...]
    qas: tuple[QAPair, ...]
    domain: str = ""
    predicate_index: Optional[int] = None
    verb_form: Optional[str] = None
    is_predicate: Optional[bool] = None

    def key(self) -> tuple:
        if self.task == "discourse":
            return (self.sentence_id,)
        return (self.sentence_id, self.predicate_index)


def qa_to_dict(qa: QAPair) -> dict:
    return {
        "question": qa.question,
        "answers": [
            {"text": a.text, "start_token": a.start_token, "end_token": a.end_token}
            for a in qa.answers
        ],
    }


def qa_from_dict(data: dict) -> QAPair:
    answers = tuple(
        AnswerSpan(a["text"], a.get("start_token"), a.get("end_token"))
        for a in data["answers"]
    )
    return QAPair(data["question"], answers)


def record_to_dict(record: DatasetRecord) -> dict:
    return {
        "task": record.task,
        "sentence_id": record.sentence_id,
        "domain": record.domain,
        "tokens": list(record.tokens),
        "predicate_index": record.predicate_index,
        "verb_form": record.verb_form,
        "is_predicate": record.is_predicate,
        "qas": [qa_to_dict(qa) for qa in record.qas],
    }


def record_from_dict(data: dict, task: Optional[str] = None) -> DatasetRecord:
    return DatasetRecord(
        task=data.get("task") or task or "qasrl",
        sentence_id=str(data["sentence_id"]),
        domain=data.get("domain") or "",
        tokens=tuple(data["tokens"]),
        predicate_index=data.get("predicate_index"),
        verb_form=data.get("verb_form"),
        is_predicate=data.get("is_predicate"),
        qas=tuple(qa_from_dict(qa) for qa in data.get("qas", [])),
    )


def _check_record(record: DatasetRecord) -> Optional[str]:
    """Return a reason to skip the record, or None if it is sound."""
    if record.task not in TASKS:
        return f"unknown task {record.task!r}"
    if not record.tokens:
        return "empty token list"
    if record.task != "discourse":
        if record.predicate_index is None:
            return "missing predicate index"
        if not 0 <= record.predicate_index < len(record.tokens):
            return f"predicate index {record.predicate_index} out of range"
        for qa in record.qas:
            for ans in qa.answers:
                if not ans.aligned:
                    return f"unaligned gold answer {ans.text!r}"
                joined = " ".join(
                    record.tokens[ans.start_token : ans.end_token]
                ).casefold()
                if joined != codec.normalize_ws(ans.text).casefold():
                    return f"answer text does not match span: {ans.text!r}"
    for qa in record.qas:
        if not qa.question or not qa.answers:
            return f"QA without question or answers: {qa.question!r}"
    return None


def load_dataset(
    path,
    task: Optional[str] = None,
    fmt: str = "jsonl",
    on_skip: Optional[Callable[[Diagnostic], None]] = None,
) -> Iterator[DatasetRecord]:
    """Stream records from a dataset file.

    ``fmt`` is "jsonl" (canonical) or "csv" (adapter). Records that fail
    validation are skipped and reported through ``on_skip``.
    """
    if fmt == "jsonl":
        rows = _iter_jsonl(path, task)
    elif fmt == "csv":
        rows = _iter_csv(path, task)
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")
    for line_no, record in rows:
        reason = _check_record(record)
        if reason is not None:
            if on_skip is not None:
                on_skip(Diagnostic("skipped_record", f"line {line_no}: {reason}"))
            continue
        yield record


def _iter_jsonl(path, task) -> Iterator[tuple[int, DatasetRecord]]:
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                record = record_from_dict(data, task)
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise SchemaError(str(exc), line_no) from exc
            yield line_no, record


# Adapter for the flat CSV export layout: one row per question, answers
# packed into a single cell with "~!~" between spans and token ranges as
# "start:end" (end exclusive) in a parallel cell.
_CSV_ANSWER_SEP = "~!~"
_CSV_FIELDS = {"sentence_id", "sentence", "predicate_index", "verb_form", "question"}


def _iter_csv(path, task) -> Iterator[tuple[int, DatasetRecord]]:
    chosen_task = task or "qasrl"
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = _CSV_FIELDS - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(f"csv missing columns {sorted(missing)}")
        grouped: dict[tuple, dict] = {}
        order: list[tuple] = []
        for line_no, row in enumerate(reader, 2):
            sent_id = row["sentence_id"]
            pred_idx = int(row["predicate_index"])
            key = (sent_id, pred_idx)
            if key not in grouped:
                grouped[key] = {
                    "line": line_no,
                    "tokens": tuple(row["sentence"].split()),
                    "verb_form": row["verb_form"],
                    "is_predicate": _parse_bool(row.get("is_predicate", "true")),
                    "qas": [],
                }
                order.append(key)
            texts = row.get("answer", "")
            ranges = row.get("answer_range", "")
            answers = []
            for text, rng in zip(
                texts.split(_CSV_ANSWER_SEP), ranges.split(_CSV_ANSWER_SEP)
            ):
                if not text:
                    continue
                start, _, end = rng.partition(":")
                answers.append(AnswerSpan(text.strip(), int(start), int(end)))
            if row["question"]:  # negative candidates have an empty question cell
                grouped[key]["qas"].append(QAPair(row["question"], tuple(answers)))
    for sent_id, pred_idx in order:
        info = grouped[(sent_id, pred_idx)]
        yield info["line"], DatasetRecord(
            task=chosen_task,
            sentence_id=sent_id,
            tokens=info["tokens"],
            predicate_index=pred_idx,
            verb_form=info["verb_form"],
            is_predicate=info["is_predicate"],
            qas=tuple(info["qas"]),
        )


def _parse_bool(text: str) -> bool:
    return str(text).strip().casefold() in ("1", "true", "yes", "y")


def write_dataset(records: Iterable[DatasetRecord], path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record_to_dict(record), ensure_ascii=False))
            handle.write("\n")
            count += 1
    return count


@dataclass
class CorpusStats:
    sentences: int = 0
    predicates: Optional[int] = None
    questions: int = 0
    answers: int = 0

    def to_dict(self) -> dict:
        return {
            "sentences": self.sentences,
            "predicates": self.predicates,
            "questions": self.questions,
            "answers": self.answers,
        }


def compute_stats(records: Iterable[DatasetRecord]) -> CorpusStats:
    """Count distinct sentences, positive predicates, questions, answers.

    Discourse corpora have no predicate notion, so predicates stays None.
    """
    sentence_ids = set()
    predicates = 0
    questions = 0
    answers = 0
    saw_role_task = False
    for record in records:
        sentence_ids.add(record.sentence_id)
        questions += len(record.qas)
        answers += sum(len(qa.answers) for qa in record.qas)
        if record.task != "discourse":
            saw_role_task = True
            if record.is_predicate or record.is_predicate is None:
                predicates += 1
    return CorpusStats(
        sentences=len(sentence_ids),
        predicates=predicates if saw_role_task else None,
        questions=questions,
        answers=answers,
    )


@dataclass(frozen=True)
class JointCorpusConfig:
    """Mixing recipe for a joint verbal+nominal corpus.

    ``duplication_factor`` repeats every nominal record that many times.
    ``task_signal`` optionally marks the task: "prefix" switches the task
    prefix per record, "marker" switches the predicate marker token,
    "output_type" appends the predicate type to the target sequence, and
    None (the default, and the best-scoring choice) leaves pairs
    uninformed.
    """

    duplication_factor: int = 14
    task_signal: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.task_signal not in TASK_SIGNALS:
            raise ValueError(f"unknown task signal {self.task_signal!r}")
        if self.duplication_factor < 1:
            raise ValueError("duplication factor must be >= 1")


def build_joint_corpus(
    qasrl_records: Iterable[DatasetRecord],
    qanom_records: Iterable[DatasetRecord],
    config: Optional[JointCorpusConfig] = None,
) -> list[DatasetRecord]:
    """Interleave verbal records with duplicated nominal records.

    Every nominal record appears exactly ``duplication_factor`` times (by
    reference). The combined list is shuffled deterministically by the
    config seed. Task-signal decoration happens at pair-emission time via
    the same config.
    """
    cfg = config or JointCorpusConfig()
    combined: list[DatasetRecord] = list(qasrl_records)
    for record in qanom_records:
        combined.extend([record] * cfg.duplication_factor)
    random.Random(cfg.seed).shuffle(combined)
    return combined


def _record_encoding(
    record: DatasetRecord,
    base: InputEncodingConfig,
    task_signal: Optional[str],
) -> InputEncodingConfig:
    if task_signal == "prefix":
        prefix = NOMINAL_PREFIX if record.task == "qanom" else VERBAL_PREFIX
        return replace(base, task_prefix=prefix)
    if task_signal == "marker":
        marker = NOMINAL_MARKER if record.task == "qanom" else VERBAL_MARKER
        return replace(base, marker_token=marker)
    return base


def _decorate_target(target: str, record: DatasetRecord, task_signal: Optional[str]) -> str:
    if task_signal == "output_type":
        kind = "nominal" if record.task == "qanom" else "verbal"
        return target + OUTPUT_TYPE_SEPARATOR + kind
    return target


def emit_training_pairs(
    records: Iterable[DatasetRecord],
    strategy: Optional[LinearizationStrategy] = None,
    scheme: Optional[PermutationScheme] = None,
    encoding: Optional[InputEncodingConfig] = None,
    discourse_prefix: str = codec.DISCOURSE_TASK_PREFIX,
    task_signal: Optional[str] = None,
    on_skip: Optional[Callable[[Diagnostic], None]] = None,
) -> Iterator[tuple[str, str]]:
    """Turn gold records into (source, target) training pairs.

    A strategy emits one pair per record in that order; a scheme emits one
    pair per sampled ordering; passing neither keeps the gold file order.
    Strategies and schemes are mutually exclusive. Role records are
    encoded per predicate; discourse records are grouped per sentence.
    Records without usable QAs (negative predicate candidates) are
    skipped and reported through ``on_skip``.
    """
    if strategy is not None and scheme is not None:
        raise ValueError("strategy and scheme are mutually exclusive")
    base_cfg = encoding or InputEncodingConfig()

    def orderings(record: DatasetRecord) -> Optional[list[list[QAPair]]]:
        qas = list(record.qas)
        try:
            if scheme is not None:
                per_record = scheme
                if hasattr(scheme, "seed"):
                    per_record = replace(
                        scheme, seed=_mix_seed(scheme.seed, record)
                    )
                return codec.permute_augment(qas, per_record)
            if strategy is not None:
                per_record = strategy
                if isinstance(strategy, codec.RandomOrder):
                    per_record = replace(
                        strategy, seed=_mix_seed(strategy.seed, record)
                    )
                return [codec.order_qas(qas, per_record)]
            return [qas]
        except (codec.UnalignedAnswerError, ValueError) as exc:
            if on_skip is not None:
                on_skip(Diagnostic("skipped_record", f"{record.key()}: {exc}"))
            return None

    discourse_buffer: dict[str, list[DatasetRecord]] = {}
    discourse_order: list[str] = []
    for record in records:
        if record.task == "discourse":
            if record.sentence_id not in discourse_buffer:
                discourse_buffer[record.sentence_id] = []
                discourse_order.append(record.sentence_id)
            discourse_buffer[record.sentence_id].append(record)
            continue
        if record.is_predicate is False or not record.qas:
            if on_skip is not None:
                on_skip(
                    Diagnostic("skipped_record", f"{record.key()}: no gold QAs")
                )
            continue
        cfg = _record_encoding(record, base_cfg, task_signal)
        source = codec.encode_input(
            record.tokens, record.predicate_index, record.verb_form or "", cfg
        )
        variants = orderings(record)
        if variants is None:
            continue
        for qas in variants:
            target = codec.linearize_output(qas, record.task)
            yield source, _decorate_target(target, record, task_signal)
    for sentence_id in discourse_order:
        group = discourse_buffer[sentence_id]
        qas = [qa for record in group for qa in record.qas]
        if not qas:
            if on_skip is not None:
                on_skip(Diagnostic("skipped_record", f"({sentence_id!r},): no gold QAs"))
            continue
        merged = DatasetRecord(
            task="discourse",
            sentence_id=sentence_id,
            tokens=group[0].tokens,
            qas=tuple(qas),
        )
        source = codec.encode_sentence_input(merged.tokens, discourse_prefix)
        variants = orderings(merged)
        if variants is None:
            continue
        for ordered in variants:
            yield source, codec.linearize_output(ordered, "discourse")


def _mix_seed(seed: int, record: DatasetRecord) -> int:
    key = f"{seed}|{record.sentence_id}|{record.predicate_index}"
    return int.from_bytes(hashlib.md5(key.encode()).digest()[:8], "big")


def write_training_pairs(pairs: Iterable[tuple[str, str]], path) -> int:
    """Write source<TAB>target lines; token text never contains tabs."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for source, target in pairs:
            handle.write(f"{source}\t{target}\n")
            count += 1
    return count


def sample_subset(
    records: Sequence[DatasetRecord],
    target_size: int,
    seed: int = 0,
    domain_filter: Optional[str] = None,
) -> list[DatasetRecord]:
    """Uniform sample without replacement, deterministic per seed."""
    pool = [
        r
        for r in records
        if domain_filter is None or r.domain == domain_filter
    ]
    if target_size > len(pool):
        raise InsufficientRecords(
            f"asked for {target_size} records, only {len(pool)} available"
        )
    return random.Random(seed).sample(pool, target_size)


def to_predicate_qas(
    records: Iterable[DatasetRecord],
) -> list["metrics.PredicateQAs"]:
    """Group records into scoring instances keyed per predicate/sentence."""
    from . import metrics

    grouped: dict[tuple, dict] = {}
    order: list[tuple] = []
    for record in records:
        key = record.key()
        if key not in grouped:
            grouped[key] = {"qas": [], "verb_form": record.verb_form}
            order.append(key)
        grouped[key]["qas"].extend(record.qas)
        if grouped[key]["verb_form"] is None:
            grouped[key]["verb_form"] = record.verb_form
    return [
        metrics.PredicateQAs(key, tuple(grouped[key]["qas"]), grouped[key]["verb_form"])
        for key in order
    ]
