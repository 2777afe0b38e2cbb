"""Pure distance kernel: clamped cosine distance, the asymmetric step-matching
divergence over step-summary embeddings, whole-text / composite-summary
baseline distances, and pairwise matrix assembly.

All functions are pure over immutable inputs. Means use ``math.fsum`` so
results are permutation-stable to well below 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import DistanceMatrix, EmbeddingVector, StepSummary


class DistanceError(ValueError):
    """Dimension mismatch, zero-norm vector, or payload/method mismatch."""


@dataclass(frozen=True)
class DirectionalMatch:
    """One source step's nearest-target assignment."""

    source_index: int
    matched_target_index: int
    distance: float


@dataclass(frozen=True)
class RpdResult:
    score: float
    matches: tuple[DirectionalMatch, ...]
    direction: str  # "a_to_b" | "b_to_a" | "averaged"


def _check_pair(a: EmbeddingVector, b: EmbeddingVector) -> None:
    if a.dimension != b.dimension:
        raise DistanceError(f"dimension mismatch: {a.dimension} vs {b.dimension}")


def cosine_distance(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """clamp(1 - cos(a, b), 0, 1).

    Raw cosine distance ranges over [0, 2]; per-pair clamping keeps every
    downstream score inside the declared [0, 1] range.
    """
    _check_pair(a, b)
    dot = math.fsum(x * y for x, y in zip(a.values, b.values))
    norm_a = math.sqrt(math.fsum(x * x for x in a.values))
    norm_b = math.sqrt(math.fsum(y * y for y in b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DistanceError("cosine distance undefined for zero-norm vector")
    if a.values == b.values:
        # sqrt(n^2)*sqrt(n^2) can round away from n^2; identity must be exact
        return 0.0
    return min(1.0, max(0.0, 1.0 - dot / (norm_a * norm_b)))


def raw_embedding_distance(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine distance between whole-unit embeddings (full solution texts or
    composite summary texts). Same kernel as cosine_distance; kept as a named
    operation because the inputs mean something different."""
    return cosine_distance(a, b)


def directional_divergence(
    source: Sequence[EmbeddingVector], target: Sequence[EmbeddingVector]
) -> RpdResult:
    """For each source vector, the minimum clamped cosine distance to any
    target vector; the score is the mean of those minima."""
    if not source or not target:
        raise DistanceError("directional divergence requires non-empty vector lists")
    matches = []
    for i, vec in enumerate(source):
        best_j = 0
        best_d = cosine_distance(vec, target[0])
        for j in range(1, len(target)):
            d = cosine_distance(vec, target[j])
            if d < best_d:
                best_d, best_j = d, j
        matches.append(DirectionalMatch(i, best_j, best_d))
    score = math.fsum(m.distance for m in matches) / len(matches)
    return RpdResult(score=score, matches=tuple(matches), direction="a_to_b")


def rpd(
    steps_a: Sequence[EmbeddingVector], steps_b: Sequence[EmbeddingVector]
) -> RpdResult:
    """Reasoning-path divergence between two step-embedding lists.

    Either side empty scores exactly 1.0. Otherwise the strictly shorter list
    is matched into the longer one and the minima are averaged. Equal-length
    lists are scored in both directions and averaged, which restores the
    symmetry the pairwise matrix requires.
    """
    if not steps_a or not steps_b:
        return RpdResult(score=1.0, matches=(), direction="averaged")
    if len(steps_a) < len(steps_b):
        r = directional_divergence(steps_a, steps_b)
        return RpdResult(r.score, r.matches, "a_to_b")
    if len(steps_b) < len(steps_a):
        r = directional_divergence(steps_b, steps_a)
        return RpdResult(r.score, r.matches, "b_to_a")
    fwd = directional_divergence(steps_a, steps_b)
    rev = directional_divergence(steps_b, steps_a)
    score = math.fsum(m.distance for m in fwd.matches + rev.matches) / (
        len(fwd.matches) + len(rev.matches)
    )
    return RpdResult(score=score, matches=fwd.matches + rev.matches, direction="averaged")


def concat_summary_text(summary: StepSummary) -> str:
    """Composite summary text: step descriptions joined by single newlines,
    titles omitted. Embedding this text feeds the summary-distance baseline."""
    return "\n".join(step.description for step in summary.steps)


StepPayload = Sequence[Sequence[EmbeddingVector]]
VectorPayload = Sequence[EmbeddingVector]


def pairwise_matrix(items: Sequence, method: str) -> DistanceMatrix:
    """Assemble the symmetric pairwise distance matrix for one problem.

    ``method`` selects the payload kind: "rpd" expects one step-vector list
    per solution; "raw_embedding" / "summary_embedding" expect one vector per
    solution. Each entry is computed once and mirrored.
    """
    k = len(items)
    if k < 1:
        raise DistanceError("pairwise matrix requires k >= 1 items")
    if method == "rpd":
        for idx, item in enumerate(items):
            if isinstance(item, EmbeddingVector):
                raise DistanceError(
                    f"item {idx}: rpd payload must be a list of step vectors"
                )

        def dist(i: int, j: int) -> float:
            return rpd(items[i], items[j]).score

    elif method in ("raw_embedding", "summary_embedding"):
        for idx, item in enumerate(items):
            if not isinstance(item, EmbeddingVector):
                raise DistanceError(
                    f"item {idx}: {method} payload must be a single vector"
                )

        def dist(i: int, j: int) -> float:
            return raw_embedding_distance(items[i], items[j])

    else:
        raise DistanceError(f"unknown distance method {method!r}")

    rows = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            d = dist(i, j)
            rows[i][j] = d
            rows[j][i] = d
    return DistanceMatrix(tuple(tuple(row) for row in rows))
