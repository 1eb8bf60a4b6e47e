"""End-to-end parsing pipeline over a pluggable text-to-text backend.

A tagged sentence goes through: predicate candidate detection (verbs by
POS tag, nominalizations by lexicon), predicativeness classification for
nominal candidates, per-predicate input encoding, batched generation, and
output decoding back into aligned QA sets. Decoding problems become
diagnostics on the result, never exceptions; backend failures surface as
BackendUnavailable after retries.
"""

from __future__ import annotations

import concurrent.futures
import functools
import os
import time
from dataclasses import dataclass, field, replace
from importlib import resources as _resources
from typing import Callable, Iterable, Optional, Sequence

from . import codec, grammar
from .backends import Backend
from .codec import Diagnostic, InputEncodingConfig, QAPair

BACKEND_URL_ENV = "QASEM_BACKEND_URL"

DEFAULT_AUX_STOPLIST = frozenset(
    {
        "be", "am", "is", "are", "was", "were", "been", "being",
        "have", "has", "had", "having",
        "do", "does", "did", "doing", "done",
        "will", "would", "shall", "should", "can", "could", "may", "might", "must",
    }
)


class BackendUnavailable(RuntimeError):
    """Generation failed after retries; carries the failed batch indices."""

    def __init__(self, batch_indices: Sequence[int], cause: Optional[Exception] = None):
        self.batch_indices = list(batch_indices)
        self.cause = cause
        super().__init__(
            f"backend failed for batches {self.batch_indices}: {cause}"
        )


@dataclass(frozen=True)
class TaggedSentence:
    """Tokens with coarse POS tags (VERB / NOUN / OTHER), parallel lists."""

    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...]
    sentence_id: str = ""

    def __post_init__(self):
        if len(self.tokens) != len(self.pos_tags):
            raise ValueError(
                f"{len(self.tokens)} tokens vs {len(self.pos_tags)} tags"
            )


@dataclass(frozen=True)
class PredicateCandidate:
    index: int
    kind: str  # "verbal" | "nominal"
    verb_form: str
    score: Optional[float] = None


@dataclass
class TaskResult:
    task: str
    predicate_index: Optional[int]
    verb_form: Optional[str]
    qas: list[QAPair]
    diagnostics: list[Diagnostic] = field(default_factory=list)


@dataclass
class SentenceAnnotation:
    sentence_id: str
    tokens: tuple[str, ...]
    results: list[TaskResult] = field(default_factory=list)

    def qa_count(self) -> int:
        return sum(len(r.qas) for r in self.results)

    def diagnostics(self) -> list[Diagnostic]:
        return [d for r in self.results for d in r.diagnostics]


@dataclass
class PipelineConfig:
    encoding: InputEncodingConfig = field(default_factory=InputEncodingConfig)
    discourse_prefix: str = codec.DISCOURSE_TASK_PREFIX
    beam: int = 5
    max_length: int = 512
    batch_size: int = 16
    concurrency: int = 4
    retries: int = 3
    retry_base_delay: float = 0.5
    classify_threshold: float = 0.5
    aux_stoplist: frozenset[str] = DEFAULT_AUX_STOPLIST
    backend_url: str = ""

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        cfg = cls()
        simple = {
            "beam": int, "max_length": int, "batch_size": int,
            "concurrency": int, "retries": int,
            "retry_base_delay": float, "classify_threshold": float,
            "backend_url": str, "discourse_prefix": str,
        }
        for key, conv in simple.items():
            if key in data:
                setattr(cfg, key, conv(data[key]))
        encoding_keys = {
            "task_prefix": str, "marker_mode": str,
            "marker_token": str, "sep_token": str, "append_verb_form": bool,
        }
        overrides = {
            key: conv(data[key]) for key, conv in encoding_keys.items() if key in data
        }
        if overrides:
            cfg.encoding = replace(cfg.encoding, **overrides)
        return cfg

    def resolved_backend_url(self) -> str:
        return os.environ.get(BACKEND_URL_ENV) or self.backend_url


def load_config(path) -> dict:
    """Parse a flat key=value config file ('#' comments, quoted strings)."""
    data: dict = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {line_no}: expected key = value")
            data[key.strip()] = _coerce(value.strip())
    return data


def _coerce(value: str):
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        return value[1:-1]
    lowered = value.casefold()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def detect_verb_predicates(
    sentence: TaggedSentence,
    aux_stoplist: frozenset[str] = DEFAULT_AUX_STOPLIST,
    inflections: Optional[grammar.InflectionTable] = None,
) -> list[PredicateCandidate]:
    """Every VERB-tagged token outside the auxiliary stoplist."""
    table = inflections or grammar.default_inflections()
    candidates = []
    for index, (token, tag) in enumerate(zip(sentence.tokens, sentence.pos_tags)):
        if not tag.upper().startswith("V"):
            continue
        if token.casefold() in aux_stoplist:
            continue
        candidates.append(
            PredicateCandidate(index, "verbal", table.lemma(token))
        )
    return candidates


def extract_nominalization_candidates(
    sentence: TaggedSentence,
    lexicon: Optional[dict[str, str]] = None,
) -> list[PredicateCandidate]:
    """NOUN-tagged tokens with a lexicon entry (plurals reduced)."""
    lex = lexicon if lexicon is not None else grammar.load_nominalization_lexicon()
    candidates = []
    for index, (token, tag) in enumerate(zip(sentence.tokens, sentence.pos_tags)):
        if not tag.upper().startswith("N"):
            continue
        word = token.casefold()
        verb = lex.get(word)
        if verb is None and word.endswith("s") and not word.endswith("ss"):
            verb = lex.get(word[:-1])
            if verb is None and word.endswith("es"):
                verb = lex.get(word[:-2])
        if verb is not None:
            candidates.append(PredicateCandidate(index, "nominal", verb))
    return candidates


class AlwaysTrueScorer:
    """Accepts every nominal candidate; offline fallback."""

    def score(self, sentence: TaggedSentence, candidates: Sequence[PredicateCandidate],
              encoding: InputEncodingConfig) -> list[float]:
        return [1.0] * len(candidates)


class GoldLookupScorer:
    """Scores candidates from a (sentence_id, index) -> bool table."""

    def __init__(self, table: dict[tuple[str, int], bool]):
        self.table = dict(table)

    def score(self, sentence: TaggedSentence, candidates: Sequence[PredicateCandidate],
              encoding: InputEncodingConfig) -> list[float]:
        return [
            1.0 if self.table.get((sentence.sentence_id, c.index)) else 0.0
            for c in candidates
        ]


class BackendScorer:
    """Asks the backend's /classify endpoint, inputs encoded per candidate."""

    def __init__(self, backend: Backend):
        self.backend = backend

    def score(self, sentence: TaggedSentence, candidates: Sequence[PredicateCandidate],
              encoding: InputEncodingConfig) -> list[float]:
        if not candidates:
            return []
        inputs = [
            codec.encode_input(sentence.tokens, c.index, c.verb_form, encoding)
            for c in candidates
        ]
        return self.backend.classify(inputs)


def classify_predicative(
    sentence: TaggedSentence,
    candidates: Sequence[PredicateCandidate],
    scorer,
    threshold: float = 0.5,
    encoding: Optional[InputEncodingConfig] = None,
) -> list[PredicateCandidate]:
    """Keep candidates whose predicativeness score reaches the threshold."""
    cfg = encoding or InputEncodingConfig()
    scores = scorer.score(sentence, candidates, cfg)
    kept = []
    for candidate, score in zip(candidates, scores):
        if score >= threshold:
            kept.append(replace(candidate, score=score))
    return kept


def generate_batched(
    requests_list: Sequence[str],
    backend: Backend,
    batch_size: int = 16,
    concurrency_limit: int = 4,
    retries: int = 3,
    base_delay: float = 0.5,
    beam: int = 5,
    max_length: int = 512,
    sleep: Callable[[float], None] = time.sleep,
) -> list[str]:
    """Generate for all requests, preserving order.

    Requests are chunked into batches processed concurrently under the
    given limit; each batch gets up to ``retries`` attempts with
    exponential backoff. Any batch that still fails raises
    BackendUnavailable carrying the failed batch indices.
    """
    if not requests_list:
        return []
    batches = [
        requests_list[i : i + batch_size]
        for i in range(0, len(requests_list), batch_size)
    ]

    def run_batch(batch: Sequence[str]) -> list[str]:
        last_exc: Optional[Exception] = None
        for attempt in range(retries):
            try:
                outputs = backend.generate(list(batch), beam=beam, max_length=max_length)
                if len(outputs) != len(batch):
                    raise RuntimeError(
                        f"backend returned {len(outputs)} outputs for {len(batch)} inputs"
                    )
                return outputs
            except Exception as exc:  # retried; re-raised as BackendUnavailable
                last_exc = exc
                if attempt + 1 < retries:
                    sleep(base_delay * (2 ** attempt))
        raise last_exc  # type: ignore[misc]

    results: dict[int, list[str]] = {}
    failed: list[tuple[int, Exception]] = []
    workers = max(1, min(concurrency_limit, len(batches)))
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(run_batch, batch): i for i, batch in enumerate(batches)}
        for future in concurrent.futures.as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as exc:
                failed.append((index, exc))
    if failed:
        failed.sort()
        raise BackendUnavailable([i for i, _ in failed], failed[0][1])
    out: list[str] = []
    for i in range(len(batches)):
        out.extend(results[i])
    return out


def parse_sentences(
    sentences: Sequence[TaggedSentence],
    tasks: Sequence[str],
    backend: Backend,
    config: Optional[PipelineConfig] = None,
    scorer=None,
    lexicon: Optional[dict[str, str]] = None,
    raw_sink: Optional[Callable[[dict], None]] = None,
) -> list[SentenceAnnotation]:
    """Annotate sentences with QA sets for the requested tasks.

    All generation requests across sentences and tasks go through one
    batched call; outputs are decoded per request and re-assembled in
    sentence order. ``raw_sink`` receives one dict per generation request
    with the undecoded output, for offline inspection.
    """
    cfg = config or PipelineConfig()
    chosen_scorer = scorer if scorer is not None else BackendScorer(backend)
    annotations = [
        SentenceAnnotation(s.sentence_id or str(i), s.tokens)
        for i, s in enumerate(sentences)
    ]
    requests_list: list[str] = []
    slots: list[tuple[int, str, Optional[int], Optional[str]]] = []
    for s_idx, sentence in enumerate(sentences):
        if "qasrl" in tasks:
            for cand in detect_verb_predicates(sentence, cfg.aux_stoplist):
                requests_list.append(
                    codec.encode_input(
                        sentence.tokens, cand.index, cand.verb_form, cfg.encoding
                    )
                )
                slots.append((s_idx, "qasrl", cand.index, cand.verb_form))
        if "qanom" in tasks:
            candidates = extract_nominalization_candidates(sentence, lexicon)
            kept = classify_predicative(
                sentence, candidates, chosen_scorer, cfg.classify_threshold, cfg.encoding
            )
            for cand in kept:
                requests_list.append(
                    codec.encode_input(
                        sentence.tokens, cand.index, cand.verb_form, cfg.encoding
                    )
                )
                slots.append((s_idx, "qanom", cand.index, cand.verb_form))
        if "discourse" in tasks:
            requests_list.append(
                codec.encode_sentence_input(sentence.tokens, cfg.discourse_prefix)
            )
            slots.append((s_idx, "discourse", None, None))
    outputs = generate_batched(
        requests_list,
        backend,
        batch_size=cfg.batch_size,
        concurrency_limit=cfg.concurrency,
        retries=cfg.retries,
        base_delay=cfg.retry_base_delay,
        beam=cfg.beam,
        max_length=cfg.max_length,
    )
    for (s_idx, task, pred_idx, verb_form), output in zip(slots, outputs):
        sentence = sentences[s_idx]
        if raw_sink is not None:
            raw_sink(
                {
                    "sentence_id": annotations[s_idx].sentence_id,
                    "task": task,
                    "tokens": list(sentence.tokens),
                    "predicate_index": pred_idx,
                    "verb_form": verb_form,
                    "raw": output,
                }
            )
        qas, diagnostics = codec.delinearize_output(output, sentence.tokens, task)
        annotations[s_idx].results.append(
            TaskResult(task, pred_idx, verb_form, qas, diagnostics)
        )
    return annotations


def parse_sentence(
    sentence: TaggedSentence,
    tasks: Sequence[str],
    backend: Backend,
    config: Optional[PipelineConfig] = None,
    scorer=None,
    lexicon: Optional[dict[str, str]] = None,
) -> SentenceAnnotation:
    return parse_sentences([sentence], tasks, backend, config, scorer, lexicon)[0]


def annotation_to_records(annotation: SentenceAnnotation) -> list[dict]:
    """Canonical JSONL rows for an annotation, one per task result."""
    rows = []
    for result in annotation.results:
        rows.append(
            {
                "task": result.task,
                "sentence_id": annotation.sentence_id,
                "domain": "",
                "tokens": list(annotation.tokens),
                "predicate_index": result.predicate_index,
                "verb_form": result.verb_form,
                "is_predicate": None if result.task == "discourse" else True,
                "qas": [
                    {
                        "question": qa.question,
                        "answers": [
                            {
                                "text": a.text,
                                "start_token": a.start_token,
                                "end_token": a.end_token,
                            }
                            for a in qa.answers
                        ],
                    }
                    for qa in result.qas
                ],
            }
        )
    return rows


# --- input readers and the test-only fallback tagger ---


def read_tagged_file(path) -> list[TaggedSentence]:
    """Read token<TAB>tag lines, blank line between sentences.

    A line like ``# id: some-name`` before a sentence sets its id.
    """
    sentences: list[TaggedSentence] = []
    tokens: list[str] = []
    tags: list[str] = []
    sent_id = ""

    def flush():
        nonlocal tokens, tags, sent_id
        if tokens:
            sentences.append(
                TaggedSentence(tuple(tokens), tuple(tags), sent_id or str(len(sentences)))
            )
        tokens, tags, sent_id = [], [], ""

    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                _, _, value = line.partition(":")
                if value.strip():
                    sent_id = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise ValueError(f"expected token<TAB>tag, got {line!r}")
            tokens.append(cols[0])
            tags.append(cols[1])
    flush()
    return sentences


@functools.lru_cache(maxsize=1)
def _pos_lexicon() -> dict[str, str]:
    text = _resources.files("qaparse.resources").joinpath("pos_lexicon.tsv").read_text(
        "utf-8"
    )
    lexicon = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word, _, tag = line.partition("\t")
        lexicon[word.casefold()] = tag.strip()
    return lexicon


_NOUNISH_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ance", "ence", "ism")


def tag_tokens(
    tokens: Sequence[str],
    sentence_id: str = "",
    inflections: Optional[grammar.InflectionTable] = None,
) -> TaggedSentence:
    """Tiny lexicon-and-suffix tagger. For tests and offline demos only."""
    table = inflections or grammar.default_inflections()
    lexicon = _pos_lexicon()
    tags = []
    for token in tokens:
        word = token.casefold()
        tag = lexicon.get(word)
        if tag is None:
            if table.knows_surface(word):
                tag = "VERB"
            elif word.endswith(_NOUNISH_SUFFIXES) or token[:1].isupper():
                tag = "NOUN"
            else:
                tag = "OTHER"
        tags.append(tag)
    return TaggedSentence(tuple(tokens), tuple(tags), sentence_id)
