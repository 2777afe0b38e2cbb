"""pathdiv: step-level reasoning-path divergence and diversity-driven
curation of one-problem-many-solutions training sets."""

from .core import (
    CuratedRecord,
    CuratedSet,
    CurationConfig,
    DistanceMatrix,
    EmbeddingVector,
    Problem,
    Solution,
    Step,
    StepSummary,
    content_hash,
    count_tokens,
    load_corpus,
    save_jsonl,
)
from .curation import (
    CurationReport,
    ProblemScore,
    SelectionTrace,
    completeness_filter,
    curate,
    curate_detailed,
    emit_training_set,
    greedy_select,
    length_filter,
    rank_problems,
    score_problem_diversity,
)
from .distances import (
    DirectionalMatch,
    RpdResult,
    concat_summary_text,
    cosine_distance,
    directional_divergence,
    pairwise_matrix,
    raw_embedding_distance,
    rpd,
)
from .embeddings import EmbeddingCache, embed_batch, embed_text, mock_embed
from .evaluation import (
    ComparisonOutcome,
    DiversityReport,
    PassAtKReport,
    compare_metrics,
    div_self_bleu,
    output_diversity_report,
    pass_at_k,
    score_histogram,
    self_bleu,
)
from .llm import BoxedPayload, ParseError, parse_boxed, render_boxed

__version__ = "0.1.0"

__all__ = [
    "BoxedPayload",
    "ComparisonOutcome",
    "CuratedRecord",
    "CuratedSet",
    "CurationConfig",
    "CurationReport",
    "DirectionalMatch",
    "DistanceMatrix",
    "DiversityReport",
    "EmbeddingCache",
    "EmbeddingVector",
    "ParseError",
    "PassAtKReport",
    "Problem",
    "ProblemScore",
    "RpdResult",
    "SelectionTrace",
    "Solution",
    "Step",
    "StepSummary",
    "compare_metrics",
    "completeness_filter",
    "concat_summary_text",
    "content_hash",
    "cosine_distance",
    "count_tokens",
    "curate",
    "curate_detailed",
    "directional_divergence",
    "div_self_bleu",
    "embed_batch",
    "embed_text",
    "emit_training_set",
    "greedy_select",
    "length_filter",
    "load_corpus",
    "mock_embed",
    "output_diversity_report",
    "pairwise_matrix",
    "parse_boxed",
    "pass_at_k",
    "rank_problems",
    "raw_embedding_distance",
    "render_boxed",
    "rpd",
    "save_jsonl",
    "score_histogram",
    "score_problem_diversity",
    "self_bleu",
]
