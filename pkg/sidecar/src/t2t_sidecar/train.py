"""Fine-tuning over source<TAB>target pairs, with a validating dry run.

The hyper-parameter space is a fixed small grid: learning rate in
{0.001, 0.005, 0.01}, dropout in {0.1, 0.15}, effective batch size in
{96, 168}, always 20 epochs and decoding beam 5. The default config is
the large-corpus fixed point (lr 0.005, dropout 0.1, batch 96).

Dry-run mode parses the pairs file, re-serializes it, and checks the
bytes match exactly, so batch construction is validated against the
emitting tool without touching a model. Real runs hold out a validation
slice and select the best run by validation loss; optimizer and
schedule are framework defaults (AdamW, constant learning rate) and are
recorded in the report. Task-metric selection (argument-detection F1)
is done externally by decoding each saved checkpoint and scoring it
with the annotation toolkit.
"""

from __future__ import annotations

import hashlib
import importlib.util
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

GRID_LEARNING_RATES = (0.001, 0.005, 0.01)
GRID_DROPOUTS = (0.1, 0.15)
GRID_BATCHES = (96, 168)

DEFAULT_MODEL = "t5-small"

# Markup strings in prepared pairs; registered as atomic vocabulary items.
MARKUP_TOKENS = ("[PREDICATE]", "[SEP]", "</qa>", "</q>", "</a>")


class PairsFormatError(ValueError):
    """The pairs file is not strict source<TAB>target lines."""


class TrainingUnavailable(RuntimeError):
    """The training runtime or the base model cannot be loaded."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.005
    dropout: float = 0.1
    effective_batch: int = 96
    epochs: int = 20
    beam: int = 5
    half_precision: bool = False

    def __post_init__(self):
        if self.learning_rate not in GRID_LEARNING_RATES:
            raise ValueError(f"learning rate must be one of {GRID_LEARNING_RATES}")
        if self.dropout not in GRID_DROPOUTS:
            raise ValueError(f"dropout must be one of {GRID_DROPOUTS}")
        if self.effective_batch not in GRID_BATCHES:
            raise ValueError(f"effective batch must be one of {GRID_BATCHES}")
        if self.epochs < 1 or self.beam < 1:
            raise ValueError("epochs and beam must be positive")


def grid_configs() -> list[TrainConfig]:
    """The full sweep, 12 configs in deterministic order."""
    return [
        TrainConfig(learning_rate=lr, dropout=dr, effective_batch=bs)
        for lr in GRID_LEARNING_RATES
        for dr in GRID_DROPOUTS
        for bs in GRID_BATCHES
    ]


def read_pairs(path) -> list[tuple[str, str]]:
    """Strict TSV reader: every line is non-empty source<TAB>target."""
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.rstrip("\n")
            if not line:
                raise PairsFormatError(f"line {line_no}: empty line")
            cols = line.split("\t")
            if len(cols) != 2:
                raise PairsFormatError(
                    f"line {line_no}: expected exactly one tab, got {len(cols) - 1}"
                )
            source, target = cols
            if not source or not target:
                raise PairsFormatError(f"line {line_no}: empty source or target")
            pairs.append((source, target))
    return pairs


def runtime_available() -> bool:
    return (
        importlib.util.find_spec("torch") is not None
        and importlib.util.find_spec("transformers") is not None
    )


def hardware_note() -> Optional[str]:
    """A warning when this environment cannot realistically train."""
    if not runtime_available():
        return (
            "training runtime (torch + transformers) unavailable; "
            "this environment can only dry-run"
        )
    import torch

    if not torch.cuda.is_available():
        return (
            "no GPU detected; the full recipe (20 epochs at effective "
            "batch 96 or more) is impractical on CPU, treat this "
            "environment as dry-run-only"
        )
    return None


def _dry_run_entry(pairs, config: TrainConfig) -> dict:
    return {
        "config": asdict(config),
        "batches_per_epoch": math.ceil(len(pairs) / config.effective_batch),
        "optimizer_steps": math.ceil(len(pairs) / config.effective_batch)
        * config.epochs,
    }


def _byte_match(pairs, path) -> tuple[bool, str]:
    raw = Path(path).read_bytes()
    rebuilt = "".join(f"{s}\t{t}\n" for s, t in pairs).encode("utf-8")
    digest = hashlib.sha256(raw).hexdigest()
    return rebuilt == raw, digest


def _load_runtime(model_name: str):
    try:
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
    except ImportError as exc:
        raise TrainingUnavailable(f"training runtime not installed: {exc}") from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_name)
        model = AutoModelForSeq2SeqLM.from_pretrained(model_name)
    except Exception as exc:
        raise TrainingUnavailable(f"cannot load base model {model_name!r}: {exc}") from exc
    return torch, tokenizer, model


def _set_dropout(model, torch, value: float):
    for module in model.modules():
        if isinstance(module, torch.nn.Dropout):
            module.p = value


def _encode_batch(tokenizer, torch, sources, targets, device):
    enc = tokenizer(list(sources), return_tensors="pt", padding=True)
    labels = tokenizer(list(targets), return_tensors="pt", padding=True).input_ids
    labels[labels == tokenizer.pad_token_id] = -100
    return enc.to(device), labels.to(device)


def _epoch_loss(model, tokenizer, torch, pairs, micro_batch, device) -> float:
    if not pairs:
        return float("nan")
    total = 0.0
    count = 0
    model.eval()
    with torch.no_grad():
        for i in range(0, len(pairs), micro_batch):
            chunk = pairs[i : i + micro_batch]
            enc, labels = _encode_batch(
                tokenizer, torch, [s for s, _ in chunk], [t for _, t in chunk], device
            )
            loss = model(**enc, labels=labels).loss
            total += float(loss) * len(chunk)
            count += len(chunk)
    return total / count


def _fine_tune(
    pairs,
    config: TrainConfig,
    model_name: str,
    run_dir: Path,
    micro_batch: int,
    seed: int = 0,
) -> dict:
    torch, tokenizer, model = _load_runtime(model_name)
    new_tokens = [
        t for t in MARKUP_TOKENS if t not in tokenizer.get_vocab()
    ]
    if new_tokens:
        tokenizer.add_special_tokens({"additional_special_tokens": new_tokens})
        model.resize_token_embeddings(len(tokenizer))
    _set_dropout(model, torch, config.dropout)

    device = "cuda" if torch.cuda.is_available() else "cpu"
    model.to(device)
    precision_note = "fp32"
    if config.half_precision:
        if device == "cuda":
            model.half()
            precision_note = "fp16"
        else:
            precision_note = "fp32 (half precision requested, no GPU)"

    rng = random.Random(seed)
    shuffled = list(pairs)
    rng.shuffle(shuffled)
    val_count = len(shuffled) // 20 if len(shuffled) >= 20 else 0
    val_pairs = shuffled[:val_count]
    train_pairs = shuffled[val_count:]

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    accumulate = max(1, math.ceil(config.effective_batch / micro_batch))
    val_losses = []
    for _ in range(config.epochs):
        model.train()
        rng.shuffle(train_pairs)
        optimizer.zero_grad()
        pending = 0
        for i in range(0, len(train_pairs), micro_batch):
            chunk = train_pairs[i : i + micro_batch]
            enc, labels = _encode_batch(
                tokenizer, torch, [s for s, _ in chunk], [t for _, t in chunk], device
            )
            loss = model(**enc, labels=labels).loss / accumulate
            loss.backward()
            pending += 1
            if pending == accumulate:
                optimizer.step()
                optimizer.zero_grad()
                pending = 0
        if pending:
            optimizer.step()
            optimizer.zero_grad()
        val_losses.append(
            _epoch_loss(model, tokenizer, torch, val_pairs, micro_batch, device)
        )

    run_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(run_dir)
    tokenizer.save_pretrained(run_dir)
    has_val = val_pairs and not math.isnan(val_losses[-1])
    return {
        "run_dir": str(run_dir),
        "config": asdict(config),
        "train_pairs": len(train_pairs),
        "val_pairs": len(val_pairs),
        "val_loss": min(val_losses) if has_val else None,
        "final_val_loss": val_losses[-1] if has_val else None,
        "optimizer": "AdamW, framework defaults except learning rate",
        "lr_schedule": "constant, framework default",
        "precision": precision_note,
        "markup_tokens_added": new_tokens,
        "device": device,
    }


def train_model(
    pairs_path,
    config: Optional[TrainConfig] = None,
    grid: bool = False,
    dry_run: bool = False,
    model_name: str = DEFAULT_MODEL,
    out_dir="runs",
    micro_batch: int = 8,
) -> dict:
    """Run (or validate) fine-tuning over a prepared pairs file.

    Grid mode sweeps all 12 configs and reports the best run by
    validation loss; fixed mode runs one config (default: the fixed
    point). Dry-run mode validates the pairs file and enumerates the
    planned runs without loading a model.
    """
    if grid and config is not None:
        raise ValueError("grid mode sweeps the whole grid; do not pass a config")
    pairs = read_pairs(pairs_path)
    if not pairs:
        raise PairsFormatError("pairs file is empty")
    configs = grid_configs() if grid else [config or TrainConfig()]

    if dry_run:
        matched, digest = _byte_match(pairs, pairs_path)
        report = {
            "mode": "dry_run",
            "pairs": len(pairs),
            "byte_match": matched,
            "sha256": digest,
            "runs": [_dry_run_entry(pairs, cfg) for cfg in configs],
        }
        note = hardware_note()
        if note:
            report["warning"] = note
        return report

    out = Path(out_dir)
    results = []
    for index, cfg in enumerate(configs):
        run_dir = out / (f"run_{index:02d}" if grid else "run")
        results.append(
            _fine_tune(pairs, cfg, model_name, run_dir, micro_batch, seed=index)
        )
    scored = [r for r in results if r["val_loss"] is not None]
    ranked = min(scored, key=lambda r: r["val_loss"]) if scored else results[0]
    return {
        "mode": "grid" if grid else "fixed",
        "runs": results,
        "best": ranked["run_dir"],
        "selection": (
            "validation loss; decode saved checkpoints and score externally "
            "for task-metric selection"
        ),
    }
