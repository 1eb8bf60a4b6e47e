"""QA-based semantic annotation toolkit.

Covers templated verbal and nominal role questions plus prefix-anchored
discourse questions: a question grammar with role mapping, a linearization
codec for text-to-text models, exact set-matching metrics, dataset and
training-pair tooling, and a parsing pipeline over a pluggable backend.
"""

from .backends import (
    Backend,
    BackendProtocolError,
    EchoBackend,
    GoldReplayBackend,
    HttpBackend,
    backend_from_spec,
)
from .codec import (
    AllPermutations,
    AnswerOrder,
    AnswerSpan,
    Diagnostic,
    FixedPermutations,
    InputEncodingConfig,
    LinearPermutations,
    QAPair,
    RandomOrder,
    RoleOrder,
    align_answer,
    delinearize_output,
    encode_input,
    encode_sentence_input,
    linearize_output,
    order_qas,
    permute_augment,
)
from .datasets import (
    CorpusStats,
    DatasetRecord,
    JointCorpusConfig,
    SchemaError,
    build_joint_corpus,
    compute_stats,
    emit_training_pairs,
    load_dataset,
    sample_subset,
    to_predicate_qas,
    write_dataset,
    write_training_pairs,
)
from .grammar import (
    DiscoursePrefix,
    InflectionTable,
    QasrlQuestion,
    SyntacticRole,
    UnparseableQuestion,
    map_to_role,
    match_discourse_prefix,
    parse_question,
    render_question,
)
from .metrics import (
    Alignment,
    MatchConfig,
    PredicateQAs,
    ScoreReport,
    align_qa_sets,
    position_precision,
    score_discourse,
    score_ua_la,
    token_iou,
)
from .pipeline import (
    BackendUnavailable,
    PipelineConfig,
    SentenceAnnotation,
    TaggedSentence,
    detect_verb_predicates,
    extract_nominalization_candidates,
    generate_batched,
    parse_sentence,
    parse_sentences,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendProtocolError",
    "EchoBackend",
    "GoldReplayBackend",
    "HttpBackend",
    "backend_from_spec",
    "AllPermutations",
    "AnswerOrder",
    "AnswerSpan",
    "Diagnostic",
    "FixedPermutations",
    "InputEncodingConfig",
    "LinearPermutations",
    "QAPair",
    "RandomOrder",
    "RoleOrder",
    "align_answer",
    "delinearize_output",
    "encode_input",
    "encode_sentence_input",
    "linearize_output",
    "order_qas",
    "permute_augment",
    "CorpusStats",
    "DatasetRecord",
    "JointCorpusConfig",
    "SchemaError",
    "build_joint_corpus",
    "compute_stats",
    "emit_training_pairs",
    "load_dataset",
    "sample_subset",
    "to_predicate_qas",
    "write_dataset",
    "write_training_pairs",
    "DiscoursePrefix",
    "InflectionTable",
    "QasrlQuestion",
    "SyntacticRole",
    "UnparseableQuestion",
    "map_to_role",
    "match_discourse_prefix",
    "parse_question",
    "render_question",
    "Alignment",
    "MatchConfig",
    "PredicateQAs",
    "ScoreReport",
    "align_qa_sets",
    "position_precision",
    "score_discourse",
    "score_ua_la",
    "token_iou",
    "BackendUnavailable",
    "PipelineConfig",
    "SentenceAnnotation",
    "TaggedSentence",
    "detect_verb_predicates",
    "extract_nominalization_candidates",
    "generate_batched",
    "parse_sentence",
    "parse_sentences",
    "__version__",
]
