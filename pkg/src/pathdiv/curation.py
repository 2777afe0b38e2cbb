"""Two-phase curation pipeline: quality filtering, problem ranking by
intrinsic solution diversity, greedy max-min solution selection, and
training-set emission.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .core import (
    NEGATIVE_INFINITY,
    CuratedRecord,
    CuratedSet,
    CurationConfig,
    DistanceMatrix,
    EmbeddingVector,
    Problem,
    StepSummary,
    Tokenizer,
    whitespace_tokenize,
)
from .distances import concat_summary_text, pairwise_matrix

log = logging.getLogger(__name__)

# Completeness oracle: tail text -> True (complete) / False (incomplete).
# May raise JudgeUndecided, in which case the solution is conservatively
# excluded with a warning rather than silently kept.
CompletenessJudge = Callable[[str], bool]

# Per-text embedding lookup; raises KeyError / LookupError when missing.
EmbeddingLookup = Callable[[str], EmbeddingVector]


class CurationError(ValueError):
    """Missing summary/embedding or unresolvable selection."""


class JudgeUndecided(RuntimeError):
    """The completeness judge failed to reach a verdict after retries."""


@dataclass(frozen=True)
class ProblemScore:
    problem_id: str
    score: float  # NEGATIVE_INFINITY sentinel when k < 2
    k: int


@dataclass(frozen=True)
class SelectionTrace:
    selected_indices: tuple[int, ...]
    maxmin_values: tuple[float, ...]  # m[r*] at each pick after the first


@dataclass
class CurationReport:
    ingested: int = 0
    dropped_by_length: int = 0
    dropped_by_completeness: int = 0
    ranked: int = 0
    selected: int = 0
    judge_warnings: list[str] = field(default_factory=list)
    scores: list[ProblemScore] = field(default_factory=list)
    # every pairwise entry behind the scores, for distribution export;
    # deliberately kept out of to_record()
    pair_scores: list[dict] = field(default_factory=list)

    def to_record(self) -> dict:
        from .core import score_to_json

        return {
            "ingested": self.ingested,
            "dropped_by_length": self.dropped_by_length,
            "dropped_by_completeness": self.dropped_by_completeness,
            "ranked": self.ranked,
            "selected": self.selected,
            "judge_warnings": list(self.judge_warnings),
            "scores": [
                {"problem_id": s.problem_id, "score": score_to_json(s.score), "k": s.k}
                for s in self.scores
            ],
        }


def length_filter(
    problems: Sequence[Problem], max_avg_tokens: int
) -> tuple[list[Problem], list[Problem]]:
    """Drop problems whose mean solution token count strictly exceeds the
    threshold. The comparison is exact: sum > threshold * k, all integers."""
    kept, dropped = [], []
    for p in problems:
        total = sum(s.token_count for s in p.solutions)
        if p.k > 0 and total > max_avg_tokens * p.k:
            dropped.append(p)
        else:
            kept.append(p)
    return kept, dropped


def tail_text(text: str, tail_tokens: int, tokenizer: Tokenizer | None = None) -> str:
    """The final ``tail_tokens`` tokens of ``text``; the whole text unchanged
    when it is no longer than that."""
    tok = tokenizer or whitespace_tokenize
    tokens = tok(text)
    if len(tokens) <= tail_tokens:
        return text
    return " ".join(tokens[-tail_tokens:])


def completeness_filter(
    problems: Sequence[Problem],
    judge: CompletenessJudge,
    tail_tokens: int,
    min_valid: int,
    tokenizer: Tokenizer | None = None,
    warnings: list[str] | None = None,
) -> tuple[list[Problem], list[Problem]]:
    """Per solution, judge the final-token tail for a proper conclusion;
    discard solutions judged incomplete or undecided, then drop problems left
    with fewer than ``min_valid`` surviving solutions."""
    kept, dropped = [], []
    for p in problems:
        valid = []
        for s in p.solutions:
            tail = tail_text(s.text, tail_tokens, tokenizer)
            try:
                complete = judge(tail)
            except JudgeUndecided:
                msg = (
                    f"completeness judge undecided for ({p.problem_id!r}, "
                    f"{s.solution_id!r}); solution excluded"
                )
                log.warning(msg)
                if warnings is not None:
                    warnings.append(msg)
                continue
            if complete:
                valid.append(s)
        if len(valid) < min_valid:
            dropped.append(p)
        else:
            kept.append(p.with_solutions(valid))
    return kept, dropped


def score_problem_diversity(matrix: DistanceMatrix) -> float:
    """Mean pairwise distance over all unordered solution pairs:
    2/(k(k-1)) * sum_{i<j} entries[i][j]. Problems with k < 2 have no pairs
    and score the negative-infinity sentinel, which ranking never selects."""
    k = matrix.n
    if k < 2:
        return NEGATIVE_INFINITY
    total = math.fsum(
        matrix.entries[i][j] for i in range(k) for j in range(i + 1, k)
    )
    return total * 2.0 / (k * (k - 1))


def rank_problems(scores: Sequence[ProblemScore], n: int) -> list[str]:
    """Top-n problem ids by descending score; sentinel-scored problems are
    never selected; ties break by ascending problem_id."""
    finite = [s for s in scores if s.score != NEGATIVE_INFINITY]
    finite.sort(key=lambda s: (-s.score, s.problem_id))
    return [s.problem_id for s in finite[: max(n, 0)]]


def greedy_select(matrix: DistanceMatrix, m: int) -> SelectionTrace:
    """Greedy max-min (farthest-point) selection over a distance matrix.

    First pick is the row-sum argmax; each later pick maximizes the minimum
    distance to the already-selected set, updating m[r] <- min(m[r], D[r, r*])
    after each pick. All argmax ties break toward the lowest index.
    """
    k = matrix.n
    if m <= 0 or k == 0:
        return SelectionTrace((), ())
    if m >= k:
        return SelectionTrace(tuple(range(k)), ())

    first = max(range(k), key=lambda i: (matrix.row_sum(i), -i))
    selected = [first]
    remain = [r for r in range(k) if r != first]
    mins = {r: matrix.entry(r, first) for r in remain}
    maxmin: list[float] = []

    while len(selected) < m and remain:
        best = max(remain, key=lambda r: (mins[r], -r))
        maxmin.append(mins[best])
        selected.append(best)
        remain.remove(best)
        for r in remain:
            d = matrix.entry(r, best)
            if d < mins[r]:
                mins[r] = d
    return SelectionTrace(tuple(selected), tuple(maxmin))


def _always_complete(_tail: str) -> bool:
    return True


def solution_payload(
    problem_id: str,
    solution_id: str,
    method: str,
    solution_text: str,
    summary: StepSummary | None,
    embed: EmbeddingLookup,
):
    """The per-solution distance payload for ``method``: a list of step
    vectors for "rpd", a single vector otherwise. Raises CurationError naming
    the (problem, solution) when a summary or embedding is missing."""
    try:
        if method == "rpd":
            if summary is None:
                raise LookupError("missing summary")
            return [embed(step.description) for step in summary.steps]
        if method == "raw_embedding":
            return embed(solution_text)
        if method == "summary_embedding":
            if summary is None:
                raise LookupError("missing summary")
            return embed(concat_summary_text(summary))
    except LookupError as exc:
        raise CurationError(
            f"missing embedding/summary for ({problem_id!r}, {solution_id!r}): {exc}"
        ) from exc
    raise CurationError(f"unknown distance method {method!r}")


def curate_detailed(
    corpus: Sequence[Problem],
    config: CurationConfig,
    summaries: Mapping[tuple[str, str], StepSummary],
    embeddings: EmbeddingLookup,
    judge: CompletenessJudge | None = None,
    tokenizer: Tokenizer | None = None,
) -> tuple[CuratedSet, CurationReport]:
    """Full pipeline: filters -> per-problem pairwise matrix -> diversity
    score -> top-N ranking -> greedy selection of M solutions per problem.

    Deterministic given fixed inputs and config. With ``judge`` omitted every
    solution counts as complete, which still enforces the minimum-valid-count
    drop rule; pass a judge to re-run the completeness screen here.
    """
    report = CurationReport(ingested=len(corpus))
    kept, dropped_len = length_filter(corpus, config.max_avg_tokens)
    report.dropped_by_length = len(dropped_len)
    kept, dropped_cmp = completeness_filter(
        kept,
        judge or _always_complete,
        config.completeness_tail_tokens,
        config.min_valid_solutions,
        tokenizer,
        warnings=report.judge_warnings,
    )
    report.dropped_by_completeness = len(dropped_cmp)

    matrices: dict[str, DistanceMatrix] = {}
    by_id: dict[str, Problem] = {}
    for p in kept:
        payloads = [
            solution_payload(
                p.problem_id,
                s.solution_id,
                config.distance_method,
                s.text,
                summaries.get((p.problem_id, s.solution_id)),
                embeddings,
            )
            for s in p.solutions
        ]
        matrix = pairwise_matrix(payloads, config.distance_method)
        matrices[p.problem_id] = matrix
        by_id[p.problem_id] = p
        for i in range(p.k):
            for j in range(i + 1, p.k):
                report.pair_scores.append(
                    {
                        "problem_id": p.problem_id,
                        "solution_id_a": p.solutions[i].solution_id,
                        "solution_id_b": p.solutions[j].solution_id,
                        "score": matrix.entry(i, j),
                    }
                )

    scores = [
        ProblemScore(p.problem_id, score_problem_diversity(matrices[p.problem_id]), p.k)
        for p in kept
    ]
    report.scores = scores
    report.ranked = sum(1 for s in scores if s.score != NEGATIVE_INFINITY)

    top_ids = rank_problems(scores, config.top_n_problems)
    score_by_id = {s.problem_id: s.score for s in scores}
    records = []
    for pid in top_ids:
        p = by_id[pid]
        trace = greedy_select(matrices[pid], config.solutions_per_problem)
        chosen = tuple(p.solutions[i].solution_id for i in trace.selected_indices)
        records.append(
            CuratedRecord(
                problem_id=pid,
                question=p.question,
                selected_solution_ids=chosen,
                score_div=score_by_id[pid],
            )
        )
    report.selected = len(records)
    return CuratedSet(tuple(records), config.fingerprint()), report


def curate(
    corpus: Sequence[Problem],
    config: CurationConfig,
    summaries: Mapping[tuple[str, str], StepSummary],
    embeddings: EmbeddingLookup,
    judge: CompletenessJudge | None = None,
    tokenizer: Tokenizer | None = None,
) -> CuratedSet:
    curated, _report = curate_detailed(corpus, config, summaries, embeddings, judge, tokenizer)
    return curated


def emit_training_set(curated: CuratedSet, corpus: Iterable[Problem]) -> list[dict]:
    """Flatten to one-problem-one-solution training records: problems in
    curated order, solutions in selection order."""
    by_id = {p.problem_id: p for p in corpus}
    out = []
    for rec in curated.records:
        problem = by_id.get(rec.problem_id)
        if problem is None:
            raise CurationError(f"curated problem {rec.problem_id!r} not found in corpus")
        for sid in rec.selected_solution_ids:
            try:
                solution = problem.solution(sid)
            except KeyError as exc:
                raise CurationError(str(exc)) from exc
            out.append(
                {
                    "problem_id": rec.problem_id,
                    "question": rec.question,
                    "solution_id": sid,
                    "solution": solution.text,
                }
            )
    return out
