import json
import random

import pytest

from qaparse import grammar
from qaparse.grammar import (
    DiscoursePrefix,
    QasrlQuestion,
    SyntacticRole,
    UnparseableQuestion,
    map_to_role,
    match_discourse_prefix,
    parse_question,
    questions_equivalent,
    render_question,
)

from conftest import random_question


def q(**kwargs):
    return QasrlQuestion(**kwargs)


class TestParseQuestion:
    def test_subject_question(self):
        parsed = parse_question("Who shot someone?", "shoot")
        assert parsed == q(wh="who", verb="shot", verb_form="shoot", obj1="someone")

    def test_aux_subj_prep(self):
        parsed = parse_question("What did someone confront with?", "confront")
        assert parsed == q(
            wh="what", aux="did", subj="someone", verb="confront",
            verb_form="confront", prep="with",
        )

    def test_multi_word_verb_group(self):
        parsed = parse_question("Where has someone been recovering?", "recover")
        assert parsed.aux == "has"
        assert parsed.subj == "someone"
        assert parsed.verb == "been recovering"

    def test_two_word_wh(self):
        parsed = parse_question(
            "How long was someone recovering from something?", "recover"
        )
        assert parsed.wh == "how long"
        assert parsed.prep == "from"
        assert parsed.obj2 == "something"

    def test_double_object(self):
        parsed = parse_question("What did someone give someone?", "give")
        assert parsed.obj1 == "someone"
        assert parsed.obj2 == ""

    def test_multiword_preposition(self):
        parsed = parse_question("What did someone travel out of?", "travel")
        assert parsed.prep == "out of"

    def test_aux_preferred_over_verb_group(self):
        # "was" could start the verb group; the canonical parse uses AUX.
        parsed = parse_question("Who was shot?", "shoot")
        assert parsed.aux == "was"
        assert parsed.verb == "shot"

    def test_no_wh_word(self):
        with pytest.raises(UnparseableQuestion):
            parse_question("Banana yellow loud?", "be")

    def test_missing_question_mark(self):
        with pytest.raises(UnparseableQuestion):
            parse_question("Who shot someone", "shoot")

    def test_verb_form_mismatch(self):
        with pytest.raises(UnparseableQuestion):
            parse_question("Who shot someone?", "recover")

    def test_stray_content_token(self):
        with pytest.raises(UnparseableQuestion):
            parse_question("Who shot the sheriff?", "shoot")

    def test_whitespace_normalized(self):
        parsed = parse_question("  Who   shot  someone?", "shoot")
        assert render_question(parsed) == "Who shot someone?"


class TestRenderQuestion:
    def test_basic(self):
        assert (
            render_question(q(wh="who", verb="shot", verb_form="shoot", obj1="someone"))
            == "Who shot someone?"
        )

    def test_full_slots(self):
        question = q(
            wh="how long", aux="was", subj="someone", verb="recovering",
            verb_form="recover", prep="from", obj2="something",
        )
        assert (
            render_question(question)
            == "How long was someone recovering from something?"
        )

    def test_round_trip_random(self):
        rng = random.Random(20240)
        for _ in range(500):
            question = random_question(rng)
            rendered = render_question(question)
            assert parse_question(rendered, question.verb_form) == question, rendered


class TestGoldQuestions:
    def test_fixture_gold_round_trips(self, data_dir):
        checked = 0
        for name in ("qasrl_dev.jsonl", "qanom_dev.jsonl"):
            with open(data_dir / name, encoding="utf-8") as handle:
                for line in handle:
                    record = json.loads(line)
                    for qa in record["qas"]:
                        parsed = parse_question(qa["question"], record["verb_form"])
                        assert render_question(parsed) == qa["question"]
                        checked += 1
        assert checked >= 15


class TestRoleMapping:
    CASES = [
        ("Who shot someone?", "shoot", SyntacticRole("SUBJ")),
        ("Who was shot?", "shoot", SyntacticRole("OBJ")),
        ("Who got shot?", "shoot", SyntacticRole("OBJ")),
        ("What did someone approve?", "approve", SyntacticRole("OBJ")),
        ("Where has someone been recovering?", "recover", SyntacticRole("ADJUNCT", "where")),
        ("When was someone shot?", "shoot", SyntacticRole("ADJUNCT", "when")),
        (
            "How long was someone recovering from something?",
            "recover",
            SyntacticRole("ADJUNCT", "how long"),
        ),
        ("What was someone recovering from?", "recover", SyntacticRole("PREP-OBJ", "from")),
        ("What did someone confront with?", "confront", SyntacticRole("PREP-OBJ", "with")),
        ("What did someone give someone?", "give", SyntacticRole("OBJ2")),
        ("What increased?", "increase", SyntacticRole("SUBJ")),
    ]

    @pytest.mark.parametrize("text,verb_form,expected", CASES)
    def test_case(self, text, verb_form, expected):
        assert map_to_role(parse_question(text, verb_form)) == expected

    def test_equivalence_examples(self):
        a = parse_question("What was someone recovering from?", "recover")
        b = parse_question("What did someone recover from?", "recover")
        assert questions_equivalent(a, b)
        c = parse_question("Who shot someone?", "shoot")
        d = parse_question("Who was shot?", "shoot")
        assert not questions_equivalent(c, d)
        assert questions_equivalent(c, c)

    def test_equivalence_relation_properties(self):
        rng = random.Random(7)
        questions = [random_question(rng) for _ in range(30)]
        roles = [map_to_role(question) for question in questions]
        for qa, ra in zip(questions, roles):
            assert questions_equivalent(qa, qa)
            for qb, rb in zip(questions, roles):
                assert questions_equivalent(qa, qb) == (ra == rb)


class TestInflections:
    def test_irregular_lookup(self):
        table = grammar.default_inflections()
        assert table.lemma("shot") == "shoot"
        assert table.lemma("recovering") == "recover"
        assert table.lemma("was") == "be"
        assert table.knows_surface("been")
        assert not table.knows_surface("xylophone")

    def test_regular_fallback(self):
        forms = grammar.regular_inflect("walk")
        assert forms.past == "walked"
        assert forms.present_participle == "walking"
        assert forms.third_singular == "walks"
        assert grammar.regular_inflect("carry").past == "carried"
        assert grammar.regular_inflect("stop").past == "stopped"
        assert grammar.regular_inflect("move").past == "moved"

    def test_surface_set_covers_be_extras(self):
        table = grammar.default_inflections()
        assert {"am", "are", "were", "been"} <= table.surface_set("be")


class TestDiscoursePrefix:
    def test_table_examples(self):
        prefix, body = match_discourse_prefix("While what were both shot?")
        assert prefix.surface == "While what"
        assert body == "were both shot?"
        prefix, body = match_discourse_prefix(
            "Since when have both been recovering in hospital?"
        )
        assert prefix.surface == "Since when"
        assert body == "have both been recovering in hospital?"

    def test_no_prefix(self):
        with pytest.raises(grammar.NoPrefixMatch):
            match_discourse_prefix("Purple monkeys?")

    def test_longest_prefix_wins(self):
        inventory = (
            DiscoursePrefix("After", "a"),
            DiscoursePrefix("After what", "b"),
        )
        prefix, body = match_discourse_prefix("After what happened?", inventory)
        assert prefix.surface == "After what"
        assert body == "happened?"

    def test_word_boundary_required(self):
        inventory = (DiscoursePrefix("After", "a"),)
        with pytest.raises(grammar.NoPrefixMatch):
            match_discourse_prefix("Afterwards it settled?", inventory)

    def test_first_char_case_insensitive(self):
        prefix, _ = match_discourse_prefix("since when did it change?")
        assert prefix.surface == "Since when"

    def test_inventory_senses_nonempty(self):
        for prefix in grammar.default_discourse_prefixes():
            assert prefix.sense
        surfaces = [p.surface for p in grammar.default_discourse_prefixes()]
        assert len(surfaces) == len(set(surfaces))

    def test_attested_prefixes_present(self):
        surfaces = {p.surface for p in grammar.default_discourse_prefixes()}
        assert {"In what case", "After what", "Since when", "While what"} <= surfaces
