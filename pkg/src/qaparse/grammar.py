"""Templated question grammar.

Questions come in two shapes:

* role questions over a predicate, built from seven slots
  (WH, AUX, SUBJ, VERB, OBJ1, PREP, OBJ2) rendered left to right and
  terminated with "?", e.g. "Where has someone been recovering?";
* discourse questions anchored by a surface prefix drawn from a closed,
  editable inventory, e.g. "Since when have both been recovering?".

The module owns parsing, rendering, the mapping from a parsed question to
its coarse syntactic role, and the prefix inventory. Slot values are plain
strings; the empty string means the slot is unfilled.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from importlib import resources as _resources
from typing import Iterable, Optional

_WS = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs to single spaces and strip the ends."""
    return _WS.sub(" ", text).strip()


class UnparseableQuestion(ValueError):
    """Raised when a question does not fit the slot template."""

    def __init__(self, reason: str, token: str = ""):
        self.reason = reason
        self.token = token
        detail = f"{reason} (at {token!r})" if token else reason
        super().__init__(detail)


class NoPrefixMatch(ValueError):
    """Raised when no inventory prefix matches a discourse question."""


# WH words in their canonical ranking order. "how long" and "how much" are
# distinct WH values; for ranking they share the rank of their head word.
WH_RANKING = ("what", "who", "when", "where", "how", "why")
WH_VALUES = ("how long", "how much", "what", "who", "when", "where", "how", "why")
ADJUNCT_WHS = frozenset({"when", "where", "why", "how", "how long", "how much"})

AUXILIARIES = frozenset(
    {
        "do", "does", "did", "is", "are", "was", "were", "has", "have", "had",
        "will", "would", "can", "could", "may", "might", "must", "should",
        "don't", "doesn't", "didn't", "isn't", "aren't", "wasn't", "weren't",
        "hasn't", "haven't", "hadn't", "won't", "wouldn't", "can't",
        "couldn't", "mightn't", "mustn't", "shouldn't",
    }
)

# Words allowed before the main verb inside a multi-word VERB slot
# ("been recovering", "not shot", "have been shot").
VERB_GROUP_WORDS = frozenset(
    {
        "be", "been", "being", "am", "is", "are", "was", "were",
        "have", "has", "had", "get", "gets", "got", "gotten", "getting", "not",
    }
)

_BE_GET_FORMS = frozenset(
    {
        "be", "been", "being", "am", "is", "are", "was", "were",
        "isn't", "aren't", "wasn't", "weren't",
        "get", "gets", "got", "gotten", "getting",
    }
)

SUBJ_PLACEHOLDERS = ("someone", "something")
OBJ1_PLACEHOLDERS = ("someone", "something")
OBJ2_PLACEHOLDERS = ("someone", "something", "somewhere")
PLACEHOLDERS = frozenset({"someone", "something", "somewhere"})


def _read_resource_lines(name: str) -> list[str]:
    text = _resources.files("qaparse.resources").joinpath(name).read_text("utf-8")
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


@dataclass(frozen=True)
class VerbForms:
    base: str
    past: str
    past_participle: str
    present_participle: str
    third_singular: str

    def surfaces(self) -> tuple[str, ...]:
        return (
            self.base,
            self.past,
            self.past_participle,
            self.present_participle,
            self.third_singular,
        )


_VOWELS = "aeiou"


def regular_inflect(base: str) -> VerbForms:
    """Inflect an unlisted verb with regular morphology rules.

    Covers +ed/+ing/+s with e-drop, y->ie, and a short-word consonant
    doubling heuristic. Verbs the rules would get wrong belong in the
    inflection table resource instead.
    """
    b = base
    if not b:
        raise ValueError("empty verb")
    double = (
        len(b) <= 4
        and len(b) >= 3
        and b[-1] not in _VOWELS + "wxy"
        and b[-2] in _VOWELS
        and b[-3] not in _VOWELS
    )
    if b.endswith("e") and not b.endswith("ee"):
        past = b + "d"
        prespart = b[:-1] + "ing"
    elif b.endswith("y") and len(b) > 1 and b[-2] not in _VOWELS:
        past = b[:-1] + "ied"
        prespart = b + "ing"
    elif double:
        past = b + b[-1] + "ed"
        prespart = b + b[-1] + "ing"
    else:
        past = b + "ed"
        prespart = b + "ing"
    if b.endswith(("s", "x", "z", "ch", "sh", "o")):
        third = b + "es"
    elif b.endswith("y") and len(b) > 1 and b[-2] not in _VOWELS:
        third = b[:-1] + "ies"
    else:
        third = b + "s"
    return VerbForms(b, past, past, prespart, third)


# "be" has more surface forms than the five table columns hold.
_BE_EXTRA_SURFACES = ("am", "are", "were")


class InflectionTable:
    """Verb inflection lookup with a regular-morphology fallback."""

    def __init__(self, rows: Iterable[VerbForms]):
        self._rows: dict[str, VerbForms] = {}
        self._lemma_index: dict[str, str] = {}
        for row in rows:
            self._rows[row.base] = row
            for surface in row.surfaces():
                self._lemma_index.setdefault(surface.casefold(), row.base)
        if "be" in self._rows:
            for surface in _BE_EXTRA_SURFACES:
                self._lemma_index.setdefault(surface, "be")

    @classmethod
    def from_file(cls, path) -> "InflectionTable":
        rows = []
        with open(path, encoding="utf-8") as handle:
            for raw in handle:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                cols = line.split("\t")
                if len(cols) != 5:
                    raise ValueError(f"bad inflection row: {line!r}")
                rows.append(VerbForms(*cols))
        return cls(rows)

    @classmethod
    def from_resource(cls) -> "InflectionTable":
        rows = []
        for line in _read_resource_lines("inflections.tsv"):
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"bad inflection row: {line!r}")
            rows.append(VerbForms(*cols))
        return cls(rows)

    def forms(self, base: str) -> VerbForms:
        key = base.casefold()
        row = self._rows.get(key)
        return row if row is not None else regular_inflect(key)

    def surface_set(self, base: str) -> frozenset[str]:
        key = base.casefold()
        surfaces = frozenset(s.casefold() for s in self.forms(key).surfaces())
        if key == "be":
            surfaces |= frozenset(_BE_EXTRA_SURFACES)
        return surfaces

    def knows_surface(self, surface: str) -> bool:
        """True when the surface form appears in a table row."""
        return surface.casefold() in self._lemma_index

    def lemma(self, surface: str) -> str:
        """Best-effort lemma for an inflected surface form.

        Exact table hits win; otherwise common suffixes are stripped with
        un-doubling. Unknown words come back unchanged.
        """
        word = surface.casefold()
        hit = self._lemma_index.get(word)
        if hit is not None:
            return hit
        for suffix in ("ing", "ed"):
            if word.endswith(suffix) and len(word) > len(suffix) + 1:
                stem = word[: -len(suffix)]
                if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "ls":
                    stem = stem[:-1]
                return stem
        if word.endswith("ies") and len(word) > 3:
            return word[:-3] + "y"
        if word.endswith("es") and word[:-2].endswith(("s", "x", "z", "ch", "sh", "o")):
            return word[:-2]
        if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
            return word[:-1]
        return word


@functools.lru_cache(maxsize=1)
def default_inflections() -> InflectionTable:
    return InflectionTable.from_resource()


@dataclass(frozen=True)
class SlotInventories:
    """Closed slot vocabularies plus the open preposition list."""

    wh_words: tuple[str, ...] = WH_RANKING
    auxiliaries: frozenset[str] = AUXILIARIES
    placeholders: frozenset[str] = PLACEHOLDERS
    prepositions: frozenset[str] = frozenset()

    def max_prep_words(self) -> int:
        return max((p.count(" ") + 1 for p in self.prepositions), default=1)


@functools.lru_cache(maxsize=1)
def default_inventories() -> SlotInventories:
    preps = frozenset(p.casefold() for p in _read_resource_lines("prepositions.txt"))
    return SlotInventories(prepositions=preps)


@dataclass(frozen=True)
class QasrlQuestion:
    """A role question decomposed into its template slots.

    Empty string marks an unfilled slot. ``wh`` is stored casefolded;
    the other slots keep their surface form. ``verb_form`` is the base
    form of the predicate the question was parsed against; it is not a
    rendered slot but is needed for voice detection and role mapping.
    """

    wh: str
    verb: str
    verb_form: str
    aux: str = ""
    subj: str = ""
    obj1: str = ""
    prep: str = ""
    obj2: str = ""

    def slots(self) -> tuple[str, ...]:
        return (self.wh, self.aux, self.subj, self.verb, self.obj1, self.prep, self.obj2)


def render_question(question: QasrlQuestion) -> str:
    """Join the non-empty slots left to right, capitalize, add "?"."""
    parts = [part for part in question.slots() if part]
    text = " ".join(parts) + "?"
    return text[0].upper() + text[1:]


def _match_wh(words: list[str]) -> Optional[tuple[str, int]]:
    for wh in WH_VALUES:
        wh_words = wh.split()
        cand = [w.casefold() for w in words[: len(wh_words)]]
        if cand == wh_words:
            return wh, len(wh_words)
    return None


def _parse_tail(
    tail: list[str], inventories: SlotInventories
) -> Optional[tuple[str, str, str]]:
    """Split the post-verb tokens into (obj1, prep, obj2), or None."""
    i = 0
    obj1 = ""
    if i < len(tail) and tail[i].casefold() in OBJ1_PLACEHOLDERS:
        obj1 = tail[i]
        i += 1
    prep = ""
    for width in range(min(inventories.max_prep_words(), len(tail) - i), 0, -1):
        cand = " ".join(tail[i : i + width])
        if cand.casefold() in inventories.prepositions:
            prep = cand
            i += width
            break
    obj2 = ""
    if i < len(tail) and tail[i].casefold() in OBJ2_PLACEHOLDERS:
        obj2 = tail[i]
        i += 1
    if i != len(tail):
        return None
    return obj1, prep, obj2


def parse_question(
    text: str,
    verb_form: str,
    inventories: Optional[SlotInventories] = None,
    inflections: Optional[InflectionTable] = None,
) -> QasrlQuestion:
    """Parse a role question into its slot assignment.

    The parse is canonical: when several slot assignments reproduce the
    text, leading auxiliaries are pulled into AUX before being left in the
    VERB slot, and a placeholder right after the verb fills OBJ1 before
    OBJ2. Raises UnparseableQuestion with the first offending token.
    """
    inv = inventories or default_inventories()
    table = inflections or default_inflections()
    norm = normalize_ws(text)
    if not norm.endswith("?"):
        raise UnparseableQuestion("missing terminal '?'", norm[-1:] if norm else "")
    words = norm[:-1].strip().split()
    if not words:
        raise UnparseableQuestion("empty question")
    wh_hit = _match_wh(words)
    if wh_hit is None:
        raise UnparseableQuestion("unknown WH word", words[0])
    wh, consumed = wh_hit
    rest = words[consumed:]
    if not rest:
        raise UnparseableQuestion("no verb slot", words[-1])
    verb_surfaces = table.surface_set(verb_form)

    for take_aux in (True, False):
        i = 0
        aux = ""
        if take_aux:
            if rest[0].casefold() not in inv.auxiliaries:
                continue
            aux = rest[0]
            i = 1
        for take_subj in (True, False):
            j = i
            subj = ""
            if take_subj:
                if j >= len(rest) or rest[j].casefold() not in SUBJ_PLACEHOLDERS:
                    continue
                subj = rest[j]
                j += 1
            remaining = rest[j:]
            if not remaining:
                continue
            # The verb group is a run of helper words ending at an
            # inflection of verb_form; try the shortest run first.
            prefix_limit = 0
            while (
                prefix_limit < len(remaining) - 1
                and remaining[prefix_limit].casefold() in VERB_GROUP_WORDS
            ):
                prefix_limit += 1
            for m in range(1, prefix_limit + 2):
                if m > len(remaining):
                    break
                if remaining[m - 1].casefold() not in verb_surfaces:
                    continue
                tail = _parse_tail(remaining[m:], inv)
                if tail is None:
                    continue
                obj1, prep, obj2 = tail
                return QasrlQuestion(
                    wh=wh,
                    aux=aux,
                    subj=subj,
                    verb=" ".join(remaining[:m]),
                    verb_form=verb_form,
                    obj1=obj1,
                    prep=prep,
                    obj2=obj2,
                )
    raise UnparseableQuestion(
        f"no slot assignment for verb form {verb_form!r}", rest[0]
    )


@dataclass(frozen=True)
class SyntacticRole:
    """Coarse syntactic role a question asks about.

    kind is one of SUBJ, OBJ, OBJ2, PREP-OBJ, ADJUNCT; detail carries the
    preposition for PREP-OBJ and the WH word for ADJUNCT.
    """

    kind: str
    detail: str = ""


def _is_passive(question: QasrlQuestion, table: InflectionTable) -> bool:
    group = question.verb.split()
    last = group[-1].casefold()
    if last != table.forms(question.verb_form).past_participle.casefold():
        return False
    if question.aux.casefold() in _BE_GET_FORMS:
        return True
    return any(w.casefold() in _BE_GET_FORMS for w in group[:-1])


def map_to_role(
    question: QasrlQuestion, inflections: Optional[InflectionTable] = None
) -> SyntacticRole:
    """Map a parsed question to the role its WH asks about.

    Adjunct WHs answer for themselves; otherwise an empty SUBJ slot under
    active voice marks a subject question, a question ending in a bare
    preposition asks for that preposition's object, an empty OBJ1 slot
    (passive or not) asks for the direct object, and anything left asks
    for the second object.
    """
    table = inflections or default_inflections()
    if question.wh in ADJUNCT_WHS:
        return SyntacticRole("ADJUNCT", question.wh)
    if not question.subj and not _is_passive(question, table):
        return SyntacticRole("SUBJ")
    if question.prep and not question.obj2:
        return SyntacticRole("PREP-OBJ", question.prep.casefold())
    if not question.obj1:
        return SyntacticRole("OBJ")
    return SyntacticRole("OBJ2")


def questions_equivalent(
    a: QasrlQuestion,
    b: QasrlQuestion,
    inflections: Optional[InflectionTable] = None,
) -> bool:
    """True when both questions ask about the same syntactic role."""
    table = inflections or default_inflections()
    return map_to_role(a, table) == map_to_role(b, table)


@dataclass(frozen=True)
class DiscoursePrefix:
    surface: str
    sense: str


def load_discourse_prefixes(path=None) -> tuple[DiscoursePrefix, ...]:
    if path is None:
        lines = _read_resource_lines("discourse_prefixes.tsv")
    else:
        with open(path, encoding="utf-8") as handle:
            lines = [
                line.strip()
                for line in handle
                if line.strip() and not line.strip().startswith("#")
            ]
    prefixes = []
    for line in lines:
        cols = line.split("\t")
        if len(cols) != 2:
            raise ValueError(f"bad prefix row: {line!r}")
        prefixes.append(DiscoursePrefix(normalize_ws(cols[0]), cols[1].strip()))
    return tuple(prefixes)


@functools.lru_cache(maxsize=1)
def default_discourse_prefixes() -> tuple[DiscoursePrefix, ...]:
    return load_discourse_prefixes()


def match_discourse_prefix(
    text: str, inventory: Optional[Iterable[DiscoursePrefix]] = None
) -> tuple[DiscoursePrefix, str]:
    """Match the longest inventory prefix against a discourse question.

    Matching is case-insensitive on the first character only. Returns the
    prefix and the remaining question body; raises NoPrefixMatch.
    """
    prefixes = tuple(inventory) if inventory is not None else default_discourse_prefixes()
    norm = normalize_ws(text)
    best = None
    for prefix in prefixes:
        s = prefix.surface
        if len(norm) < len(s):
            continue
        if norm[:1].casefold() != s[:1].casefold() or norm[1 : len(s)] != s[1:]:
            continue
        if len(norm) > len(s) and norm[len(s)] != " ":
            continue
        if best is None or len(s) > len(best.surface):
            best = prefix
    if best is None:
        raise NoPrefixMatch(f"no known prefix in {text!r}")
    return best, norm[len(best.surface) :].strip()


def load_nominalization_lexicon(path=None) -> dict[str, str]:
    """Load a noun -> base verb lexicon (TSV, '#' comments)."""
    if path is None:
        lines = _read_resource_lines("nominalizations.tsv")
    else:
        with open(path, encoding="utf-8") as handle:
            lines = [
                line.strip()
                for line in handle
                if line.strip() and not line.strip().startswith("#")
            ]
    lexicon = {}
    for line in lines:
        cols = line.split("\t")
        if len(cols) != 2:
            raise ValueError(f"bad lexicon row: {line!r}")
        lexicon[cols[0].casefold()] = cols[1].strip()
    return lexicon
