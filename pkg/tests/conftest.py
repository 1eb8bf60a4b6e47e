"""Shared fixtures and randomized generators.

The generators build canonical slot assignments directly, so property
tests can check parse/render round trips without using the parser to
filter its own inputs.
"""

import random
from pathlib import Path

import pytest

from qaparse import grammar
from qaparse.codec import AnswerSpan, QAPair

DATA_DIR = Path(__file__).parent / "data"

# Verbs whose surface forms collide with auxiliary or verb-group helper
# words; excluded from generated questions to keep assignments canonical.
_COLLIDING_VERBS = {"be", "get", "have", "do"}

SAMPLE_VERBS = (
    "shoot", "recover", "confront", "attack", "announce", "approve",
    "review", "construct", "open", "permit", "occur", "stop", "plan",
    "travel", "increase", "spend", "bring", "give", "send", "take",
)

_AUX_POOL = (
    "did", "does", "do", "was", "were", "is", "are", "has", "have", "had",
    "will", "would", "can", "could", "should", "might", "didn't", "wasn't",
)

# (prefix words, needs_aux): helper words before the main verb. Prefixes
# that start with an auxiliary are only canonical when AUX is filled.
_VERB_PREFIXES = (
    ((), False),
    (("been",), False),
    (("being",), False),
    (("be",), False),
    (("get",), False),
    (("not",), True),
    (("have", "been"), True),
    (("was",), True),
)

_PREP_POOL = (
    "", "from", "with", "to", "for", "on", "in", "at", "about", "by",
    "out of", "in front of", "according to",
)


def random_question(rng: random.Random) -> grammar.QasrlQuestion:
    """A canonical random slot assignment (lowercase slots)."""
    table = grammar.default_inflections()
    verb_form = rng.choice(SAMPLE_VERBS)
    assert verb_form not in _COLLIDING_VERBS
    wh = rng.choice(grammar.WH_VALUES)
    aux = rng.choice(_AUX_POOL) if rng.random() < 0.7 else ""
    subj = rng.choice(grammar.SUBJ_PLACEHOLDERS) if aux and rng.random() < 0.6 else ""
    prefix, needs_aux = rng.choice(_VERB_PREFIXES)
    if needs_aux and not aux:
        prefix = ()
    head = rng.choice(table.forms(verb_form).surfaces())
    verb = " ".join(prefix + (head,))
    obj1 = rng.choice(grammar.OBJ1_PLACEHOLDERS) if rng.random() < 0.4 else ""
    prep = rng.choice(_PREP_POOL)
    obj2 = ""
    if (obj1 or prep) and rng.random() < 0.4:
        obj2 = rng.choice(grammar.OBJ2_PLACEHOLDERS)
    return grammar.QasrlQuestion(
        wh=wh, aux=aux, subj=subj, verb=verb, verb_form=verb_form,
        obj1=obj1, prep=prep, obj2=obj2,
    )


_VOCAB = (
    "miners", "glass", "harbor", "signal", "temple", "ridge", "cables",
    "voters", "engine", "marble", "lantern", "orchard", "tunnels", "ferry",
    "quarry", "beacon", "stencil", "walnut", "girder", "saddle", "north",
    "early", "barely", "twice", "onward", "slowly",
)


def random_tokens(rng: random.Random, n: int = 12) -> tuple[str, ...]:
    """Distinct tokens, so leftmost answer alignment is unambiguous."""
    return tuple(rng.sample(_VOCAB, n))


def random_role_qa_set(
    rng: random.Random, tokens, max_qas: int = 5
) -> tuple[list[QAPair], str]:
    """Aligned QA pairs over the tokens plus their shared verb form."""
    verb_form = rng.choice(SAMPLE_VERBS)
    qas = []
    seen = set()
    for _ in range(rng.randint(1, max_qas)):
        question = grammar.render_question(random_question(rng))
        if question in seen:
            continue
        seen.add(question)
        answers = []
        for _ in range(rng.randint(1, 3)):
            start = rng.randrange(len(tokens))
            end = rng.randint(start + 1, min(len(tokens), start + 3))
            answers.append(AnswerSpan(" ".join(tokens[start:end]), start, end))
        qas.append(QAPair(question, tuple(answers)))
    return qas, verb_form


def random_discourse_qa_set(
    rng: random.Random, tokens, max_qas: int = 4
) -> list[QAPair]:
    """Prefix-anchored questions; answers aligned or free-text."""
    prefixes = grammar.default_discourse_prefixes()
    qas = []
    seen = set()
    for _ in range(rng.randint(1, max_qas)):
        prefix = rng.choice(prefixes)
        body = " ".join(rng.sample(_VOCAB, rng.randint(2, 4)))
        question = f"{prefix.surface} {body}?"
        if question in seen:
            continue
        seen.add(question)
        if rng.random() < 0.5:
            start = rng.randrange(len(tokens))
            end = rng.randint(start + 1, min(len(tokens), start + 3))
            answer = AnswerSpan(" ".join(tokens[start:end]), start, end)
        else:
            # Free-text answers use words outside the sentence vocabulary
            # so opportunistic realignment cannot kick in.
            answer = AnswerSpan(f"afterwards {rng.randrange(1000)} settled")
        qas.append(QAPair(question, (answer,)))
    return qas


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def make_question():
    return random_question


@pytest.fixture
def make_tokens():
    return random_tokens


@pytest.fixture
def make_role_qa_set():
    return random_role_qa_set


@pytest.fixture
def make_discourse_qa_set():
    return random_discourse_qa_set
