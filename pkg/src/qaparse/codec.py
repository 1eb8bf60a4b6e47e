"""Sequence codec between QA sets and flat text-to-text strings.

The output side uses a three-delimiter grammar::

    output  := "" | qa (" </qa> " qa)*
    qa      := question " </q> " answers
    answers := answer (" </a> " answer)*

The input side encodes a token list with predicate markers, a task prefix,
and an appended verb form, e.g.
``parse: Both were shot in the [PREDICATE] confrontation [PREDICATE] with
police ... [SEP] confront``. Decoding is best effort: anything that does
not fit the grammar lands in diagnostics instead of raising.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import random
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .grammar import WH_RANKING, WH_VALUES, normalize_ws

QA_SEPARATOR = " </qa> "
QUESTION_SEPARATOR = " </q> "
ANSWER_SEPARATOR = " </a> "
DELIMITER_TOKENS = ("</qa>", "</q>", "</a>")

TASK_PREFIX = "parse: "
DISCOURSE_TASK_PREFIX = "parse discourse: "

MARKER_MODES = ("both", "before", "after", "append_target")

MALFORMED_SEQUENCE = "malformed_sequence"
UNALIGNABLE_ANSWER = "unalignable_answer"
UNPARSEABLE_QUESTION = "unparseable_question"


class MarkerCollision(ValueError):
    """A sentence token equals the marker or separator token."""


class DelimiterCollision(ValueError):
    """A question or answer contains an output delimiter."""


class UnalignedAnswerError(ValueError):
    """AnswerOrder was asked to sort spans that are not aligned."""


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    detail: str


@dataclass(frozen=True)
class AnswerSpan:
    """An answer string, optionally aligned to a [start, end) token span."""

    text: str
    start_token: Optional[int] = None
    end_token: Optional[int] = None

    @property
    def aligned(self) -> bool:
        return self.start_token is not None and self.end_token is not None


@dataclass(frozen=True)
class QAPair:
    question: str
    answers: tuple[AnswerSpan, ...]

    @classmethod
    def from_texts(cls, question: str, *answer_texts: str) -> "QAPair":
        return cls(question, tuple(AnswerSpan(t) for t in answer_texts))


@dataclass(frozen=True)
class RandomOrder:
    seed: int = 0


@dataclass(frozen=True)
class RoleOrder:
    pass


@dataclass(frozen=True)
class AnswerOrder:
    pass


LinearizationStrategy = Union[RandomOrder, RoleOrder, AnswerOrder]


@dataclass(frozen=True)
class AllPermutations:
    cap: int = 10


@dataclass(frozen=True)
class FixedPermutations:
    count: int = 3
    seed: int = 0


@dataclass(frozen=True)
class LinearPermutations:
    seed: int = 0


PermutationScheme = Union[AllPermutations, FixedPermutations, LinearPermutations]


@dataclass(frozen=True)
class InputEncodingConfig:
    task_prefix: str = TASK_PREFIX
    marker_mode: str = "both"
    marker_token: str = "[PREDICATE]"
    sep_token: str = "[SEP]"
    append_verb_form: bool = True

    def __post_init__(self):
        if self.marker_mode not in MARKER_MODES:
            raise ValueError(f"unknown marker mode {self.marker_mode!r}")


def encode_input(
    tokens: Sequence[str],
    predicate_index: int,
    verb_form: str,
    config: Optional[InputEncodingConfig] = None,
) -> str:
    """Encode one predicate instance as a source sequence."""
    cfg = config or InputEncodingConfig()
    if not 0 <= predicate_index < len(tokens):
        raise IndexError(
            f"predicate index {predicate_index} outside sentence of {len(tokens)} tokens"
        )
    for reserved in (cfg.marker_token, cfg.sep_token):
        if reserved in tokens:
            raise MarkerCollision(f"sentence contains reserved token {reserved!r}")
    marker = cfg.marker_token
    i = predicate_index
    if cfg.marker_mode == "both":
        body = list(tokens[:i]) + [marker, tokens[i], marker] + list(tokens[i + 1 :])
    elif cfg.marker_mode == "before":
        body = list(tokens[:i]) + [marker, tokens[i]] + list(tokens[i + 1 :])
    elif cfg.marker_mode == "after":
        body = list(tokens[: i + 1]) + [marker] + list(tokens[i + 1 :])
    else:  # append_target: sentence untouched, target repeated after it
        body = list(tokens) + [cfg.sep_token, tokens[i]]
    parts = cfg.task_prefix + " ".join(body)
    if cfg.append_verb_form:
        parts += f" {cfg.sep_token} {verb_form}"
    return parts


def encode_sentence_input(
    tokens: Sequence[str], task_prefix: str = DISCOURSE_TASK_PREFIX
) -> str:
    """Encode a whole sentence (no predicate) as a source sequence."""
    return task_prefix + " ".join(tokens)


def _contains_delimiter(text: str) -> bool:
    return any(tok in text for tok in DELIMITER_TOKENS)


def linearize_output(qas: Sequence[QAPair], task: str = "qasrl") -> str:
    """Serialize QA pairs in the given order; empty input gives ""."""
    rendered = []
    for qa in qas:
        question = normalize_ws(qa.question)
        answers = [normalize_ws(a.text) for a in qa.answers]
        if not question or not answers or not all(answers):
            raise ValueError(f"QA with empty question or answer: {qa!r}")
        for text in [question] + answers:
            if _contains_delimiter(text):
                raise DelimiterCollision(f"delimiter token inside {text!r}")
        rendered.append(question + QUESTION_SEPARATOR + ANSWER_SEPARATOR.join(answers))
    return QA_SEPARATOR.join(rendered)


_QA_SPLIT = re.compile(r"\s*</qa>\s*")
_Q_SPLIT = re.compile(r"\s*</q>\s*")
_A_SPLIT = re.compile(r"\s*</a>\s*")


def align_answer(answer_text: str, tokens: Sequence[str]) -> AnswerSpan:
    """Leftmost case-insensitive exact token-span match, else unaligned."""
    norm = normalize_ws(answer_text)
    if not norm:
        return AnswerSpan(norm)
    words = [w.casefold() for w in norm.split()]
    folded = [t.casefold() for t in tokens]
    width = len(words)
    for start in range(len(folded) - width + 1):
        if folded[start : start + width] == words:
            return AnswerSpan(norm, start, start + width)
    return AnswerSpan(norm)


def delinearize_output(
    seq: str, tokens: Sequence[str], task: str = "qasrl"
) -> tuple[list[QAPair], list[Diagnostic]]:
    """Parse a generated sequence back into QA pairs, best effort.

    Structural failures, unalignable answers, and empty pieces are
    reported as diagnostics; the function never raises on model output.
    Discourse answers are aligned opportunistically but may stay
    unaligned without a diagnostic.
    """
    qas: list[QAPair] = []
    diagnostics: list[Diagnostic] = []
    s = normalize_ws(seq)
    if not s:
        return qas, diagnostics
    for fragment in _QA_SPLIT.split(s):
        fragment = fragment.strip()
        if not fragment:
            diagnostics.append(Diagnostic(MALFORMED_SEQUENCE, "empty fragment"))
            continue
        parts = _Q_SPLIT.split(fragment)
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            diagnostics.append(Diagnostic(MALFORMED_SEQUENCE, fragment))
            continue
        question = parts[0].strip()
        spans: list[AnswerSpan] = []
        for piece in _A_SPLIT.split(parts[1]):
            piece = piece.strip()
            if not piece:
                diagnostics.append(
                    Diagnostic(MALFORMED_SEQUENCE, f"empty answer in {fragment!r}")
                )
                continue
            span = align_answer(piece, tokens)
            if task in ("qasrl", "qanom") and not span.aligned:
                diagnostics.append(Diagnostic(UNALIGNABLE_ANSWER, piece))
            spans.append(span)
        if not spans:
            diagnostics.append(Diagnostic(MALFORMED_SEQUENCE, fragment))
            continue
        qas.append(QAPair(question, tuple(spans)))
    return qas, diagnostics


def _wh_rank(question: str) -> int:
    lowered = question.casefold()
    for wh in WH_VALUES:
        if lowered.startswith(wh + " ") or lowered == wh:
            head = wh.split()[0]
            return WH_RANKING.index(head) if head in WH_RANKING else len(WH_RANKING)
    return len(WH_RANKING)


def _stable_key(qas: Iterable[QAPair]) -> str:
    parts = []
    for qa in qas:
        parts.append(qa.question + "\x1e" + "\x1e".join(a.text for a in qa.answers))
    return "\x1f".join(sorted(parts))


def _derive_rng(seed: int, key: str) -> random.Random:
    digest = hashlib.md5(f"{seed}|{key}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def order_qas(
    qas: Iterable[QAPair], strategy: LinearizationStrategy
) -> list[QAPair]:
    """Return the QAs as a list ordered by the given strategy.

    RandomOrder shuffles a canonical sort of the pairs with an rng derived
    from the seed and the pair contents, so the order is fixed per
    instance per seed regardless of input order. RoleOrder sorts by WH
    rank then question text. AnswerOrder sorts by the first answer's start
    token then question text and requires aligned spans.
    """
    items = list(qas)
    if isinstance(strategy, RandomOrder):
        items.sort(key=lambda qa: (qa.question, tuple(a.text for a in qa.answers)))
        rng = _derive_rng(strategy.seed, _stable_key(items))
        rng.shuffle(items)
        return items
    if isinstance(strategy, RoleOrder):
        items.sort(key=lambda qa: (_wh_rank(qa.question), qa.question))
        return items
    if isinstance(strategy, AnswerOrder):
        for qa in items:
            if not qa.answers or any(not a.aligned for a in qa.answers):
                raise UnalignedAnswerError(
                    f"AnswerOrder needs aligned spans: {qa.question!r}"
                )
        items.sort(
            key=lambda qa: (qa.answers[0].start_token, qa.question)
        )
        return items
    raise TypeError(f"unknown strategy {strategy!r}")


def _sample_permutations(
    n: int, k: int, rng: random.Random
) -> list[tuple[int, ...]]:
    """k index permutations, distinct while possible, then with replacement."""
    total = math.factorial(n)
    if total <= 5040:
        pool = list(itertools.permutations(range(n)))
        chosen = rng.sample(pool, min(k, total))
        chosen += [rng.choice(pool) for _ in range(k - len(chosen))]
        return chosen
    seen = set()
    out: list[tuple[int, ...]] = []
    while len(out) < k:
        perm = list(range(n))
        rng.shuffle(perm)
        t = tuple(perm)
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def permute_augment(
    qas: Sequence[QAPair], scheme: PermutationScheme
) -> list[list[QAPair]]:
    """Expand one QA list into several ordering variants.

    AllPermutations enumerates orderings lexicographically over input
    positions and truncates at the cap; FixedPermutations samples a fixed
    count (with replacement once the orderings run out); LinearPermutations
    samples as many orderings as there are QAs. Sampling is
    seed-deterministic.
    """
    items = list(qas)
    n = len(items)
    if n == 0:
        raise ValueError("cannot permute an empty QA list")
    if isinstance(scheme, AllPermutations):
        perms = itertools.islice(itertools.permutations(range(n)), scheme.cap)
        return [[items[i] for i in perm] for perm in perms]
    if isinstance(scheme, FixedPermutations):
        k, seed = scheme.count, scheme.seed
    elif isinstance(scheme, LinearPermutations):
        k, seed = n, scheme.seed
    else:
        raise TypeError(f"unknown scheme {scheme!r}")
    rng = _derive_rng(seed, str(n))
    return [[items[i] for i in perm] for perm in _sample_permutations(n, k, rng)]
