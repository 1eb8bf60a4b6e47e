#!/usr/bin/env python3
"""Fetch the published QA-SRL / QANom / QADiscourse corpora and convert
them to the canonical JSONL layout (one record per predicate, or per
sentence-level QA group for discourse).

Usage:
    python3 scripts/download_data.py [--out DIR] [--tasks qasrl,qanom,discourse]

Needs the `datasets` hub client (pip install datasets). Output files are
named {task}_{split}.jsonl; point QASEM_DATA_DIR at the output directory
to enable the corpus-dependent checks in the test suite, e.g.

    QASEM_DATA_DIR=data python3 -m pytest tests/test_acceptance.py -s

Every converted record is re-validated by qaparse's loader afterwards;
rows the hub ships with out-of-sentence answers are dropped with a note
rather than written through.
"""

import argparse
import json
import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from qaparse import datasets as ds  # noqa: E402

# hub dataset name, config, and the split names to pull per task
SOURCES = {
    "qasrl": [
        ("biu-nlp/qa_srl2018", None, {"train": "train"}),
        ("biu-nlp/qa_srl2020", None, {"validation": "dev", "test": "test"}),
    ],
    "qanom": [
        ("biu-nlp/qanom", None, {"train": "train", "validation": "dev", "test": "test"}),
    ],
    "discourse": [
        ("biu-nlp/qa_discourse", None, {"train": "train", "validation": "dev", "test": "test"}),
    ],
}


def hub_load(name, config, split):
    try:
        from datasets import load_dataset as hub_load_dataset
    except ImportError:
        sys.exit(
            "the hub client is not installed; run: pip install datasets"
        )
    return hub_load_dataset(name, config, split=split)


def row_tokens(row) -> list[str]:
    if row.get("tokens"):
        return list(row["tokens"])
    return str(row["sentence"]).split(" ")


def row_question(row) -> str:
    """Hub rows carry either a ready question string or a slot list."""
    q = row["question"]
    if isinstance(q, str):
        text = q.strip()
    else:
        words = [w for w in q if w and w != "_"]
        text = " ".join(words).strip()
        if not text.endswith("?"):
            text = text.rstrip(" ?") + "?"
    return text[:1].upper() + text[1:] if text else text


def parse_range(rng) -> tuple[int, int]:
    if isinstance(rng, str):
        start, _, end = rng.partition(":")
        return int(start), int(end)
    start, end = rng
    return int(start), int(end)


def aligned_span(text: str, rng, tokens) -> dict:
    """Build an answer dict, accepting exclusive or inclusive end indices."""
    start, end = parse_range(rng)
    text = " ".join(str(text).split())
    for candidate_end in (end, end + 1):
        joined = " ".join(tokens[start:candidate_end])
        if joined.casefold() == text.casefold():
            return {"text": text, "start_token": start, "end_token": candidate_end}
    return {"text": text, "start_token": start, "end_token": end}


def convert_role_rows(rows, task) -> list[dict]:
    grouped = defaultdict(lambda: {"qas": []})
    order = []
    for row in rows:
        tokens = row_tokens(row)
        sent_id = str(row.get("sent_id") or row.get("sentence_id") or row.get("qasrl_id"))
        pred_idx = int(
            row.get("predicate_idx", row.get("predicate_index", row.get("target_idx", 0)))
        )
        key = (sent_id, pred_idx)
        if key not in grouped:
            order.append(key)
            verb_form = row.get("verb_form") or row.get("predicate") or tokens[pred_idx]
            is_pred = row.get("is_verbal")
            grouped[key].update(
                {
                    "task": task,
                    "sentence_id": sent_id,
                    "domain": str(row.get("domain") or ""),
                    "tokens": tokens,
                    "predicate_index": pred_idx,
                    "verb_form": str(verb_form),
                    "is_predicate": True if is_pred is None else bool(is_pred),
                }
            )
        question = row_question(row)
        answers = []
        texts = row.get("answers") or []
        ranges = row.get("answer_ranges") or []
        for text, rng in zip(texts, ranges):
            answers.append(aligned_span(text, rng, grouped[key]["tokens"]))
        if question and answers:
            grouped[key]["qas"].append({"question": question, "answers": answers})
    return [grouped[key] for key in order]


def convert_discourse_rows(rows) -> list[dict]:
    grouped = defaultdict(lambda: {"qas": []})
    order = []
    for row in rows:
        tokens = row_tokens(row)
        sent_id = str(row.get("sent_id") or row.get("sentence_id"))
        if sent_id not in grouped:
            order.append(sent_id)
            grouped[sent_id].update(
                {
                    "task": "discourse",
                    "sentence_id": sent_id,
                    "domain": str(row.get("domain") or ""),
                    "tokens": tokens,
                    "predicate_index": None,
                    "verb_form": None,
                    "is_predicate": None,
                }
            )
        question = row_question(row)
        answer = " ".join(str(row.get("answer") or "").split())
        if question and answer:
            grouped[sent_id]["qas"].append(
                {
                    "question": question,
                    "answers": [
                        {"text": answer, "start_token": None, "end_token": None}
                    ],
                }
            )
    return [grouped[sid] for sid in order]


def write_validated(records, path: Path) -> tuple[int, int]:
    staging = path.with_suffix(".staging.jsonl")
    with open(staging, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    skipped = []
    kept = list(ds.load_dataset(staging, on_skip=skipped.append))
    ds.write_dataset(kept, path)
    staging.unlink()
    return len(kept), len(skipped)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data")
    parser.add_argument("--tasks", default="qasrl,qanom,discourse")
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
    for task in tasks:
        if task not in SOURCES:
            sys.exit(f"unknown task {task!r}")
        for name, config, split_map in SOURCES[task]:
            for hub_split, split in split_map.items():
                print(f"fetching {name} [{hub_split}] ...", flush=True)
                rows = hub_load(name, config, hub_split)
                if task == "discourse":
                    records = convert_discourse_rows(rows)
                else:
                    records = convert_role_rows(rows, task)
                path = out_dir / f"{task}_{split}.jsonl"
                kept, skipped = write_validated(records, path)
                note = f", {skipped} invalid rows dropped" if skipped else ""
                print(f"  wrote {kept} records to {path}{note}")
    print(
        "done; check counts with: python3 -m qaparse.cli stats "
        f"--input {out_dir}/qanom_train.jsonl --task qanom"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
