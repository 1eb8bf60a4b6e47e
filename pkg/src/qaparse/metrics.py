"""Evaluation metrics for QA annotation sets.

Predicted and gold QA sets are matched per predicate (or per sentence for
discourse) with maximum-cardinality bipartite matching over token-IOU
edges, then aggregated micro-averaged over the corpus:

* UA / LA: unlabeled and labeled QA detection (role questions);
* UQA / LQA: unlabeled detection plus prefix and sense accuracy
  (discourse questions);
* per-position precision buckets over the generation order.

IOU edge weights are kept as exact fractions internally so the optimizer
and the exhaustive oracle are comparable without float noise.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from . import grammar
from .codec import Diagnostic, QAPair, UNPARSEABLE_QUESTION

MATCHING_SIZE_LIMIT = 16
EXHAUSTIVE_SIZE_LIMIT = 8


class SizeLimitExceeded(ValueError):
    """An alignment instance is too large for the requested solver."""


@dataclass(frozen=True)
class MatchConfig:
    """Matching threshold and token-bag mode ("qasrl" or "discourse")."""

    gamma: float = 0.3
    mode: str = "qasrl"

    @classmethod
    def for_qasrl(cls) -> "MatchConfig":
        return cls(gamma=0.3, mode="qasrl")

    @classmethod
    def for_discourse(cls) -> "MatchConfig":
        return cls(gamma=0.5, mode="discourse")


_EDGE_PUNCT = string.punctuation


def iou_tokenize(text: str) -> frozenset[str]:
    """Whitespace tokens, edge punctuation stripped, case-folded."""
    out = []
    for raw in text.split():
        tok = raw.strip(_EDGE_PUNCT).casefold()
        if tok:
            out.append(tok)
    return frozenset(out)


def _iou_fraction(a: frozenset[str], b: frozenset[str]) -> Fraction:
    union = a | b
    if not union:
        return Fraction(0)
    return Fraction(len(a & b), len(union))


def token_iou(a: Iterable[str], b: Iterable[str]) -> float:
    """Intersection over union of two case-folded token sets."""
    sa = frozenset(t.casefold() for t in a)
    sb = frozenset(t.casefold() for t in b)
    return float(_iou_fraction(sa, sb))


@dataclass(frozen=True)
class AlignedPair:
    pred_index: int
    gold_index: int
    iou: float


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[AlignedPair, ...]
    unmatched_pred: tuple[int, ...]
    unmatched_gold: tuple[int, ...]
    objective: tuple[int, Fraction]


def qa_token_bag(
    qa: QAPair,
    mode: str = "qasrl",
    prefix_inventory: Optional[Sequence[grammar.DiscoursePrefix]] = None,
) -> frozenset[str]:
    """Token bag a QA is matched on.

    Role QAs match on the union of their answer tokens. Discourse QAs
    match on question-body plus answer tokens jointly, with the prefix
    excluded (questions without a known prefix fall back to the whole
    question text).
    """
    answer_tokens: frozenset[str] = frozenset()
    for ans in qa.answers:
        answer_tokens |= iou_tokenize(ans.text)
    if mode != "discourse":
        return answer_tokens
    try:
        _, body = grammar.match_discourse_prefix(qa.question, prefix_inventory)
    except grammar.NoPrefixMatch:
        body = qa.question
    return answer_tokens | iou_tokenize(body)


def _edge_weights(
    pred_bags: Sequence[frozenset[str]],
    gold_bags: Sequence[frozenset[str]],
    gamma: float,
) -> list[list[Optional[Fraction]]]:
    weights: list[list[Optional[Fraction]]] = []
    for pb in pred_bags:
        row: list[Optional[Fraction]] = []
        for gb in gold_bags:
            w = _iou_fraction(pb, gb)
            row.append(w if w >= gamma else None)
        weights.append(row)
    return weights


def _solve_masked(
    weights: Sequence[Sequence[Optional[Fraction]]],
) -> tuple[list[tuple[int, int]], tuple[int, Fraction]]:
    """Exact assignment maximizing (cardinality, total IOU).

    Dynamic program over subsets of the column side; ties are broken by
    the lexicographically smallest assignment vector (unmatched sorts
    last), so results are fully deterministic.
    """
    n_rows = len(weights)
    n_cols = len(weights[0]) if n_rows else 0
    if n_cols == 0 or n_rows == 0:
        return [], (0, Fraction(0))
    import sys

    needed = n_rows + 100
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)
    zero = (0, Fraction(0))
    # best[i][mask]: optimum over rows i.. with columns in mask used up
    best = [dict() for _ in range(n_rows + 1)]

    def value(i: int, mask: int) -> tuple[int, Fraction]:
        if i == n_rows:
            return zero
        cached = best[i].get(mask)
        if cached is not None:
            return cached
        opt = value(i + 1, mask)
        row = weights[i]
        for j in range(n_cols):
            bit = 1 << j
            if mask & bit or row[j] is None:
                continue
            card, total = value(i + 1, mask | bit)
            cand = (card + 1, total + row[j])
            if cand > opt:
                opt = cand
        best[i][mask] = opt
        return opt

    objective = value(0, 0)
    pairs: list[tuple[int, int]] = []
    mask = 0
    for i in range(n_rows):
        target = value(i, mask)
        row = weights[i]
        chosen = None
        for j in range(n_cols):
            bit = 1 << j
            if mask & bit or row[j] is None:
                continue
            card, total = value(i + 1, mask | bit)
            if (card + 1, total + row[j]) == target:
                chosen = j
                break
        if chosen is None:
            continue
        pairs.append((i, chosen))
        mask |= 1 << chosen
    return pairs, objective


def align_qa_sets(
    pred: Sequence[QAPair],
    gold: Sequence[QAPair],
    config: Optional[MatchConfig] = None,
    prefix_inventory: Optional[Sequence[grammar.DiscoursePrefix]] = None,
) -> Alignment:
    """Match predicted against gold QAs at the config's IOU threshold.

    Maximizes cardinality first, total IOU second, and breaks remaining
    ties deterministically (lowest pred index, then lowest gold index,
    whenever the gold side fits the subset mask).
    """
    cfg = config or MatchConfig()
    if min(len(pred), len(gold)) > MATCHING_SIZE_LIMIT:
        raise SizeLimitExceeded(
            f"{len(pred)}x{len(gold)} QA alignment instance is too large"
        )
    pred_bags = [qa_token_bag(qa, cfg.mode, prefix_inventory) for qa in pred]
    gold_bags = [qa_token_bag(qa, cfg.mode, prefix_inventory) for qa in gold]
    # The subset mask runs over the column side, so columns must be the
    # side that fits the size limit; that is gold except in degenerate
    # flooded-prediction cases.
    if len(gold) <= MATCHING_SIZE_LIMIT:
        weights = _edge_weights(pred_bags, gold_bags, cfg.gamma)
        raw_pairs, objective = _solve_masked(weights)
        pair_idx = sorted(raw_pairs)
    else:
        weights = _edge_weights(gold_bags, pred_bags, cfg.gamma)
        raw_pairs, objective = _solve_masked(weights)
        pair_idx = sorted((p, g) for g, p in raw_pairs)
    matched_pred = {p for p, _ in pair_idx}
    matched_gold = {g for _, g in pair_idx}
    pairs = tuple(
        AlignedPair(p, g, float(_iou_fraction(pred_bags[p], gold_bags[g])))
        for p, g in pair_idx
    )
    return Alignment(
        pairs=pairs,
        unmatched_pred=tuple(i for i in range(len(pred)) if i not in matched_pred),
        unmatched_gold=tuple(j for j in range(len(gold)) if j not in matched_gold),
        objective=objective,
    )


def align_qa_sets_exhaustive(
    pred: Sequence[QAPair],
    gold: Sequence[QAPair],
    config: Optional[MatchConfig] = None,
    prefix_inventory: Optional[Sequence[grammar.DiscoursePrefix]] = None,
) -> Alignment:
    """Brute-force reference matcher for small instances (<= 8 a side)."""
    cfg = config or MatchConfig()
    if max(len(pred), len(gold)) > EXHAUSTIVE_SIZE_LIMIT:
        raise SizeLimitExceeded(
            f"exhaustive matcher limited to {EXHAUSTIVE_SIZE_LIMIT} QAs a side"
        )
    pred_bags = [qa_token_bag(qa, cfg.mode, prefix_inventory) for qa in pred]
    gold_bags = [qa_token_bag(qa, cfg.mode, prefix_inventory) for qa in gold]
    weights = _edge_weights(pred_bags, gold_bags, cfg.gamma)
    n_pred, n_gold = len(pred), len(gold)
    best_obj = (0, Fraction(0))
    best_pairs: list[tuple[int, int]] = []

    def recurse(i: int, used: set[int], acc: list[tuple[int, int]], card: int, total: Fraction):
        nonlocal best_obj, best_pairs
        if i == n_pred:
            obj = (card, total)
            if obj > best_obj:
                best_obj, best_pairs = obj, list(acc)
            elif obj == best_obj and _assignment_vector(acc, n_pred) < _assignment_vector(
                best_pairs, n_pred
            ):
                best_pairs = list(acc)
            return
        recurse(i + 1, used, acc, card, total)
        for j in range(n_gold):
            if j in used or weights[i][j] is None:
                continue
            used.add(j)
            acc.append((i, j))
            recurse(i + 1, used, acc, card + 1, total + weights[i][j])
            acc.pop()
            used.remove(j)

    recurse(0, set(), [], 0, Fraction(0))
    matched_pred = {p for p, _ in best_pairs}
    matched_gold = {g for _, g in best_pairs}
    pairs = tuple(
        AlignedPair(p, g, float(weights[p][g])) for p, g in sorted(best_pairs)
    )
    return Alignment(
        pairs=pairs,
        unmatched_pred=tuple(i for i in range(n_pred) if i not in matched_pred),
        unmatched_gold=tuple(j for j in range(n_gold) if j not in matched_gold),
        objective=best_obj,
    )


def _assignment_vector(pairs: Sequence[tuple[int, int]], n_pred: int) -> tuple:
    by_pred = dict(pairs)
    return tuple(by_pred.get(i, float("inf")) for i in range(n_pred))


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _prf(tp: int, fp: int, fn: int) -> PRF:
    """Precision/recall/F1 in percent."""
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(100.0 * p, 100.0 * r, 100.0 * f1)


@dataclass(frozen=True)
class PredicateQAs:
    """One scoring instance: a predicate's (or sentence's) QA list.

    ``key`` pairs prediction and gold instances, e.g.
    (sentence_id, predicate_index) for role QAs or (sentence_id,) for
    discourse QAs. QA order is the generation order.
    """

    key: tuple
    qas: tuple[QAPair, ...]
    verb_form: Optional[str] = None


@dataclass
class ScoreReport:
    counts: dict[str, int] = field(default_factory=dict)
    ua: Optional[PRF] = None
    la: Optional[PRF] = None
    uqa: Optional[PRF] = None
    prefix_accuracy: Optional[float] = None
    lqa_accuracy: Optional[float] = None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def to_dict(self) -> dict:
        out: dict = dict(self.counts)
        for name in ("ua", "la", "uqa"):
            prf = getattr(self, name)
            if prf is not None:
                out[f"{name}_p"] = prf.precision
                out[f"{name}_r"] = prf.recall
                out[f"{name}_f1"] = prf.f1
        if self.prefix_accuracy is not None:
            out["prefix_accuracy"] = self.prefix_accuracy
        if self.lqa_accuracy is not None:
            out["lqa_accuracy"] = self.lqa_accuracy
        out["diagnostics"] = len(self.diagnostics)
        return out

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, float):
                lines.append(f"{key} = {value:.1f}")
            else:
                lines.append(f"{key} = {value}")
        return "\n".join(lines)


RoleMapper = Callable[[str, Optional[str]], grammar.SyntacticRole]


def default_role_mapper(question: str, verb_form: Optional[str]) -> grammar.SyntacticRole:
    return grammar.map_to_role(grammar.parse_question(question, verb_form or ""))


def _group(instances: Iterable[PredicateQAs]) -> dict[tuple, PredicateQAs]:
    grouped: dict[tuple, PredicateQAs] = {}
    for inst in instances:
        prev = grouped.get(inst.key)
        if prev is None:
            grouped[inst.key] = inst
        else:
            grouped[inst.key] = PredicateQAs(
                inst.key, prev.qas + inst.qas, prev.verb_form or inst.verb_form
            )
    return grouped


def score_ua_la(
    pred: Iterable[PredicateQAs],
    gold: Iterable[PredicateQAs],
    config: Optional[MatchConfig] = None,
    role_mapper: Optional[RoleMapper] = None,
) -> ScoreReport:
    """Micro-averaged unlabeled and labeled QA scores over a corpus.

    UA counts matched pairs; LA additionally requires the paired
    questions to ask about the same syntactic role. Unparseable predicted
    questions stay false positives and are reported as diagnostics.
    """
    cfg = config or MatchConfig.for_qasrl()
    mapper = role_mapper or default_role_mapper
    pred_by_key = _group(pred)
    gold_by_key = _group(gold)
    ua_tp = ua_fp = ua_fn = 0
    la_tp = la_fp = la_fn = 0
    diagnostics: list[Diagnostic] = []
    for key in sorted(set(pred_by_key) | set(gold_by_key), key=repr):
        p_inst = pred_by_key.get(key)
        g_inst = gold_by_key.get(key)
        p_qas = list(p_inst.qas) if p_inst else []
        g_qas = list(g_inst.qas) if g_inst else []
        alignment = align_qa_sets(p_qas, g_qas, cfg)
        ua_tp += len(alignment.pairs)
        ua_fp += len(alignment.unmatched_pred)
        ua_fn += len(alignment.unmatched_gold)
        la_fp += len(alignment.unmatched_pred)
        la_fn += len(alignment.unmatched_gold)
        for pair in alignment.pairs:
            p_qa = p_qas[pair.pred_index]
            g_qa = g_qas[pair.gold_index]
            try:
                p_role = mapper(p_qa.question, p_inst.verb_form if p_inst else None)
            except grammar.UnparseableQuestion as exc:
                diagnostics.append(Diagnostic(UNPARSEABLE_QUESTION, f"{p_qa.question} ({exc.reason})"))
                la_fp += 1
                la_fn += 1
                continue
            try:
                g_role = mapper(g_qa.question, g_inst.verb_form if g_inst else None)
            except grammar.UnparseableQuestion as exc:
                diagnostics.append(Diagnostic(UNPARSEABLE_QUESTION, f"{g_qa.question} ({exc.reason})"))
                la_fp += 1
                la_fn += 1
                continue
            if p_role == g_role:
                la_tp += 1
            else:
                la_fp += 1
                la_fn += 1
    counts = {
        "ua_tp": ua_tp, "ua_fp": ua_fp, "ua_fn": ua_fn,
        "la_tp": la_tp, "la_fp": la_fp, "la_fn": la_fn,
    }
    return ScoreReport(
        counts=counts,
        ua=_prf(ua_tp, ua_fp, ua_fn),
        la=_prf(la_tp, la_fp, la_fn),
        diagnostics=diagnostics,
    )


def score_discourse(
    pred: Iterable[PredicateQAs],
    gold: Iterable[PredicateQAs],
    config: Optional[MatchConfig] = None,
    prefix_inventory: Optional[Sequence[grammar.DiscoursePrefix]] = None,
    sense_map: Optional[dict[str, str]] = None,
) -> ScoreReport:
    """Discourse QA scores: UQA detection plus prefix and sense accuracy.

    Predicted questions without a recognizable prefix count as false
    positives and are excluded from matching. Prefix accuracy compares
    matched prefix surfaces; LQA accuracy compares their senses.
    """
    cfg = config or MatchConfig.for_discourse()
    inventory = (
        tuple(prefix_inventory)
        if prefix_inventory is not None
        else grammar.default_discourse_prefixes()
    )
    senses = sense_map or {p.surface: p.sense for p in inventory}
    pred_by_key = _group(pred)
    gold_by_key = _group(gold)
    tp = fp = fn = 0
    aligned_total = 0
    prefix_hits = 0
    sense_hits = 0
    diagnostics: list[Diagnostic] = []

    def split_prefixed(qas: Sequence[QAPair], is_pred: bool):
        nonlocal fp, fn
        kept, prefixes = [], []
        for qa in qas:
            try:
                prefix, _ = grammar.match_discourse_prefix(qa.question, inventory)
            except grammar.NoPrefixMatch:
                diagnostics.append(Diagnostic("no_prefix", qa.question))
                if is_pred:
                    fp += 1
                else:
                    fn += 1
                continue
            kept.append(qa)
            prefixes.append(prefix)
        return kept, prefixes

    for key in sorted(set(pred_by_key) | set(gold_by_key), key=repr):
        p_inst = pred_by_key.get(key)
        g_inst = gold_by_key.get(key)
        p_qas, p_prefixes = split_prefixed(p_inst.qas if p_inst else (), True)
        g_qas, g_prefixes = split_prefixed(g_inst.qas if g_inst else (), False)
        alignment = align_qa_sets(p_qas, g_qas, cfg, inventory)
        tp += len(alignment.pairs)
        fp += len(alignment.unmatched_pred)
        fn += len(alignment.unmatched_gold)
        for pair in alignment.pairs:
            aligned_total += 1
            p_prefix = p_prefixes[pair.pred_index]
            g_prefix = g_prefixes[pair.gold_index]
            if p_prefix.surface == g_prefix.surface:
                prefix_hits += 1
            if senses.get(p_prefix.surface, p_prefix.sense) == senses.get(
                g_prefix.surface, g_prefix.sense
            ):
                sense_hits += 1
    counts = {"uqa_tp": tp, "uqa_fp": fp, "uqa_fn": fn, "aligned_pairs": aligned_total}
    return ScoreReport(
        counts=counts,
        uqa=_prf(tp, fp, fn),
        prefix_accuracy=prefix_hits / aligned_total if aligned_total else 0.0,
        lqa_accuracy=sense_hits / aligned_total if aligned_total else 0.0,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class PositionPrecision:
    position: int
    precision: float
    support: int


def position_precision(
    pred: Iterable[PredicateQAs],
    gold: Iterable[PredicateQAs],
    config: Optional[MatchConfig] = None,
) -> list[PositionPrecision]:
    """Unlabeled precision bucketed by a QA's index in its generation order."""
    cfg = config or MatchConfig.for_qasrl()
    pred_by_key = _group(pred)
    gold_by_key = _group(gold)
    totals: dict[int, int] = {}
    hits: dict[int, int] = {}
    for key, p_inst in pred_by_key.items():
        g_inst = gold_by_key.get(key)
        g_qas = list(g_inst.qas) if g_inst else []
        alignment = align_qa_sets(list(p_inst.qas), g_qas, cfg)
        matched = {pair.pred_index for pair in alignment.pairs}
        for idx in range(len(p_inst.qas)):
            totals[idx] = totals.get(idx, 0) + 1
            if idx in matched:
                hits[idx] = hits.get(idx, 0) + 1
    return [
        PositionPrecision(idx, hits.get(idx, 0) / totals[idx], totals[idx])
        for idx in sorted(totals)
    ]
