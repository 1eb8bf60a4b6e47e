import itertools
import math
import random

import pytest

from qaparse import codec
from qaparse.codec import (
    AllPermutations,
    AnswerOrder,
    AnswerSpan,
    DelimiterCollision,
    FixedPermutations,
    InputEncodingConfig,
    LinearPermutations,
    MarkerCollision,
    QAPair,
    RandomOrder,
    RoleOrder,
    UnalignedAnswerError,
    align_answer,
    delinearize_output,
    encode_input,
    encode_sentence_input,
    linearize_output,
    order_qas,
    permute_augment,
)

from conftest import random_discourse_qa_set, random_role_qa_set, random_tokens

SENTENCE = (
    "Both were shot in the confrontation with police and have been "
    "recovering in hospital since the attack ."
).split()


class TestEncodeInput:
    def test_default_layout(self):
        tokens = "Both were shot in the confrontation with police ...".split()
        assert encode_input(tokens, 5, "confront") == (
            "parse: Both were shot in the [PREDICATE] confrontation "
            "[PREDICATE] with police ... [SEP] confront"
        )

    def test_single_token(self):
        assert encode_input(["run"], 0, "run") == (
            "parse: [PREDICATE] run [PREDICATE] [SEP] run"
        )

    def test_marker_before(self):
        cfg = InputEncodingConfig(marker_mode="before", append_verb_form=False)
        assert encode_input(["a", "b", "c"], 1, "b", cfg) == "parse: a [PREDICATE] b c"

    def test_marker_after(self):
        cfg = InputEncodingConfig(marker_mode="after", append_verb_form=False)
        assert encode_input(["a", "b", "c"], 1, "b", cfg) == "parse: a b [PREDICATE] c"

    def test_append_target_keeps_sentence_verbatim(self):
        cfg = InputEncodingConfig(marker_mode="append_target")
        out = encode_input(["a", "b", "c"], 1, "bee", cfg)
        assert out == "parse: a b c [SEP] b [SEP] bee"
        assert "[PREDICATE]" not in out

    def test_both_mode_has_exactly_two_markers(self):
        out = encode_input(SENTENCE, 2, "shoot")
        assert out.count("[PREDICATE]") == 2
        # Stripping prefix, markers, and the verb-form suffix recovers
        # the sentence verbatim.
        body = out[len("parse: "):].split(" [SEP] ")[0]
        restored = " ".join(w for w in body.split() if w != "[PREDICATE]")
        assert restored == " ".join(SENTENCE)

    def test_marker_collision(self):
        with pytest.raises(MarkerCollision):
            encode_input(["a", "[PREDICATE]", "c"], 0, "a")
        with pytest.raises(MarkerCollision):
            encode_input(["a", "[SEP]"], 0, "a")

    def test_index_bounds(self):
        with pytest.raises(IndexError):
            encode_input(["a"], 1, "a")
        with pytest.raises(IndexError):
            encode_input(["a"], -1, "a")

    def test_sentence_input(self):
        assert encode_sentence_input(["a", "b"]) == "parse discourse: a b"

    def test_unknown_marker_mode_rejected(self):
        with pytest.raises(ValueError):
            InputEncodingConfig(marker_mode="sideways")


class TestLinearize:
    def test_single_qa_single_answer(self):
        qas = [QAPair("Who was shot?", (AnswerSpan("Both", 0, 1),))]
        assert linearize_output(qas) == "Who was shot? </q> Both"

    def test_multiple_answers(self):
        qas = [
            QAPair(
                "When was someone shot?",
                (AnswerSpan("in the confrontation", 3, 6), AnswerSpan("the attack", 15, 17)),
            )
        ]
        assert linearize_output(qas) == (
            "When was someone shot? </q> in the confrontation </a> the attack"
        )

    def test_multiple_qas(self):
        qas = [
            QAPair.from_texts("Who was shot?", "Both"),
            QAPair.from_texts("Who shot someone?", "police"),
        ]
        assert linearize_output(qas) == (
            "Who was shot? </q> Both </qa> Who shot someone? </q> police"
        )

    def test_empty_list(self):
        assert linearize_output([]) == ""

    def test_delimiter_collision(self):
        with pytest.raises(DelimiterCollision):
            linearize_output([QAPair.from_texts("Who was </q> shot?", "Both")])
        with pytest.raises(DelimiterCollision):
            linearize_output([QAPair.from_texts("Who was shot?", "a </a> b")])

    def test_empty_answer_rejected(self):
        with pytest.raises(ValueError):
            linearize_output([QAPair("Who was shot?", ())])


class TestAlignAnswer:
    def test_token_lookup(self):
        span = align_answer("Both", SENTENCE)
        assert (span.start_token, span.end_token) == (0, 1)

    def test_leftmost_match(self):
        span = align_answer("the confrontation", SENTENCE)
        assert (span.start_token, span.end_token) == (4, 6)

    def test_casefolded(self):
        span = align_answer("both", SENTENCE)
        assert span.aligned and span.start_token == 0

    def test_empty_text_unaligned(self):
        assert not align_answer("", SENTENCE).aligned

    def test_non_span_unaligned(self):
        assert not align_answer("Bot", SENTENCE).aligned
        assert not align_answer("shot in hospital", SENTENCE).aligned


class TestDelinearize:
    def test_inverse_of_linearize(self):
        qas = [
            QAPair(
                "When was someone shot?",
                (AnswerSpan("in the confrontation", 3, 6), AnswerSpan("the attack", 15, 17)),
            ),
            QAPair("Who was shot?", (AnswerSpan("Both", 0, 1),)),
        ]
        back, diags = delinearize_output(linearize_output(qas), SENTENCE)
        assert back == qas
        assert diags == []

    def test_spacing_tolerant(self):
        back, diags = delinearize_output(
            "Who was shot?  </q>Both</qa>Who shot someone? </q>  police", SENTENCE
        )
        assert [qa.question for qa in back] == ["Who was shot?", "Who shot someone?"]
        assert diags == []

    def test_unalignable_answer_kept_with_diagnostic(self):
        back, diags = delinearize_output("Who was shot? </q> Bot", SENTENCE)
        assert len(back) == 1
        assert not back[0].answers[0].aligned
        assert [d.kind for d in diags] == [codec.UNALIGNABLE_ANSWER]

    def test_garbage_is_malformed(self):
        back, diags = delinearize_output("garbage with no delimiters", SENTENCE)
        assert back == []
        assert [d.kind for d in diags] == [codec.MALFORMED_SEQUENCE]

    def test_empty_sequence(self):
        assert delinearize_output("", SENTENCE) == ([], [])

    def test_fragment_without_question(self):
        back, diags = delinearize_output("</q> Both", SENTENCE)
        assert back == []
        assert diags[0].kind == codec.MALFORMED_SEQUENCE

    def test_empty_answer_piece_diagnosed(self):
        back, diags = delinearize_output(
            "Who was shot? </q> Both </a> ", SENTENCE
        )
        assert len(back) == 1
        assert len(back[0].answers) == 1
        assert any(d.kind == codec.MALFORMED_SEQUENCE for d in diags)

    def test_discourse_answers_may_stay_unaligned(self):
        back, diags = delinearize_output(
            "While what were both shot? </q> During the confrontation with police",
            SENTENCE,
            "discourse",
        )
        assert len(back) == 1
        assert not back[0].answers[0].aligned
        assert diags == []

    def test_round_trip_random_role_sets(self):
        rng = random.Random(99)
        for _ in range(200):
            tokens = random_tokens(rng)
            qas, _ = random_role_qa_set(rng, tokens)
            back, diags = delinearize_output(linearize_output(qas), tokens)
            assert back == qas
            assert diags == []

    def test_round_trip_random_discourse_sets(self):
        rng = random.Random(100)
        for _ in range(200):
            tokens = random_tokens(rng)
            qas = random_discourse_qa_set(rng, tokens)
            back, diags = delinearize_output(
                linearize_output(qas, "discourse"), tokens, "discourse"
            )
            assert back == qas
            assert diags == []


def _qa(question, start=0, end=1, text=None):
    return QAPair(question, (AnswerSpan(text or f"t{start}", start, end),))


class TestOrderQas:
    def test_role_order_wh_ranking(self):
        qas = [
            _qa("When was someone shot?"),
            _qa("Who shot someone?"),
            _qa("What did someone approve?"),
        ]
        ordered = order_qas(qas, RoleOrder())
        assert [q.question.split()[0] for q in ordered] == ["What", "Who", "When"]

    def test_role_order_ties_on_question_text(self):
        qas = [_qa("Who was shot?"), _qa("Who shot someone?")]
        ordered = order_qas(qas, RoleOrder())
        assert [q.question for q in ordered] == ["Who shot someone?", "Who was shot?"]

    def test_answer_order(self):
        qas = [
            _qa("Who shot someone?", 7, 8),
            _qa("Who was shot?", 0, 1),
        ]
        ordered = order_qas(qas, AnswerOrder())
        assert [q.question for q in ordered] == ["Who was shot?", "Who shot someone?"]

    def test_answer_order_requires_alignment(self):
        with pytest.raises(UnalignedAnswerError):
            order_qas([QAPair.from_texts("Who was shot?", "Both")], AnswerOrder())

    def test_sort_strategies_idempotent(self):
        rng = random.Random(4)
        qas, _ = random_role_qa_set(rng, random_tokens(rng), max_qas=5)
        for strategy in (RoleOrder(), AnswerOrder()):
            once = order_qas(qas, strategy)
            assert order_qas(once, strategy) == once

    def test_random_order_deterministic_and_input_order_free(self):
        rng = random.Random(5)
        qas, _ = random_role_qa_set(rng, random_tokens(rng), max_qas=5)
        ordered = order_qas(qas, RandomOrder(11))
        assert order_qas(list(reversed(qas)), RandomOrder(11)) == ordered
        assert sorted(q.question for q in ordered) == sorted(q.question for q in qas)

    def test_random_order_seed_changes_order(self):
        qas = [_qa(f"Who attacked someone?", i, i + 1) for i in range(1)]
        # With several QAs, at least one seed pair should differ.
        many = [
            _qa("Who was shot?", 0, 1),
            _qa("Who shot someone?", 7, 8),
            _qa("When was someone shot?", 3, 6),
            _qa("Where has someone been recovering?", 12, 14),
        ]
        orders = {tuple(q.question for q in order_qas(many, RandomOrder(s))) for s in range(6)}
        assert len(orders) > 1

    def test_singleton_any_strategy(self):
        qas = [_qa("Who was shot?", 0, 1)]
        for strategy in (RandomOrder(3), RoleOrder(), AnswerOrder()):
            assert order_qas(qas, strategy) == qas


class TestPermuteAugment:
    def test_all_counts(self):
        for n in range(1, 7):
            qas = [_qa(f"Who attacked someone? v{i}", i, i + 1) for i in range(n)]
            variants = permute_augment(qas, AllPermutations(10))
            assert len(variants) == min(math.factorial(n), 10)

    def test_all_enumerates_lexicographically(self):
        qas = [_qa("q0", 0, 1), _qa("q1", 1, 2), _qa("q2", 2, 3)]
        variants = permute_augment(qas, AllPermutations(10))
        expected = [
            [qas[i] for i in perm] for perm in itertools.permutations(range(3))
        ]
        assert variants == expected

    def test_fixed_counts(self):
        for n in range(1, 7):
            qas = [_qa(f"q{i}", i, i + 1) for i in range(n)]
            variants = permute_augment(qas, FixedPermutations(3, seed=2))
            assert len(variants) == 3
            for variant in variants:
                assert sorted(q.question for q in variant) == sorted(
                    q.question for q in qas
                )

    def test_fixed_distinct_while_possible(self):
        qas = [_qa(f"q{i}", i, i + 1) for i in range(3)]
        variants = permute_augment(qas, FixedPermutations(3, seed=0))
        keys = [tuple(q.question for q in variant) for variant in variants]
        assert len(set(keys)) == 3

    def test_linear_counts(self):
        for n in range(1, 7):
            qas = [_qa(f"q{i}", i, i + 1) for i in range(n)]
            assert len(permute_augment(qas, LinearPermutations(seed=1))) == n

    def test_seed_determinism(self):
        qas = [_qa(f"q{i}", i, i + 1) for i in range(5)]
        a = permute_augment(qas, FixedPermutations(4, seed=9))
        b = permute_augment(qas, FixedPermutations(4, seed=9))
        assert a == b

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            permute_augment([], AllPermutations())
