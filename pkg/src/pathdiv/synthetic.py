"""Synthetic planted-cluster corpora for offline evaluation.

Each problem gets two (near-)orthogonal strategy directions; every solution
belongs to one cluster and its step, composite-summary, and full-text
embeddings mix the cluster direction with hash-derived noise at configurable
signal strengths. The planted labels give the metric-comparison harness a
ground-truth judge with a closed-form random baseline.

The builder consumes a ``random.Random(seed)`` stream to shuffle cluster
labels. Any downstream randomized method (the random-pair baseline) must be
seeded independently of this corpus seed, or its draws correlate with the
label placement and bias measured success rates.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping

from .core import EmbeddingVector, Problem, Solution, Step, StepSummary, content_hash, count_tokens
from .distances import concat_summary_text
from .embeddings import EmbeddingCache, mock_embed
from .evaluation import ProblemPayload


@dataclass(frozen=True)
class PlantedSpec:
    problems: int = 100
    cluster_sizes: tuple[int, int] = (6, 2)
    steps_per_solution: int = 4
    dimension: int = 64
    step_signal: float = 0.9
    summary_signal: float = 0.45
    text_signal: float = 0.25
    seed: int = 0
    model_id: str = "mock"

    @property
    def solutions_per_problem(self) -> int:
        return sum(self.cluster_sizes)

    @property
    def random_pair_expectation(self) -> float:
        """Closed-form probability that a uniform pair crosses clusters."""
        a, b = self.cluster_sizes
        k = a + b
        return (a * b) / (k * (k - 1) / 2)


@dataclass
class PlantedCorpus:
    spec: PlantedSpec
    problems: list[Problem]
    summaries: dict[tuple[str, str], StepSummary]
    labels: dict[tuple[str, str], int]
    step_vectors: dict[tuple[str, str], tuple[EmbeddingVector, ...]]
    text_vectors: dict[tuple[str, str], EmbeddingVector]
    summary_vectors: dict[tuple[str, str], EmbeddingVector]
    payloads: list[ProblemPayload] = field(default_factory=list)

    def populate_cache(self, cache: EmbeddingCache) -> None:
        """Key every planted vector by the text the pipeline will look up."""
        model = self.spec.model_id
        for p in self.problems:
            for s in p.solutions:
                key = (p.problem_id, s.solution_id)
                summary = self.summaries[key]
                for step, vec in zip(summary.steps, self.step_vectors[key]):
                    cache.put(model, step.description, vec)
                cache.put(model, s.text, self.text_vectors[key])
                cache.put(model, concat_summary_text(summary), self.summary_vectors[key])


def _unit(values: list[float]) -> EmbeddingVector:
    norm = math.sqrt(math.fsum(v * v for v in values))
    return EmbeddingVector(tuple(v / norm for v in values))


def _mix(direction: EmbeddingVector, noise: EmbeddingVector, signal: float) -> EmbeddingVector:
    beta = math.sqrt(max(0.0, 1.0 - signal * signal))
    return _unit([signal * d + beta * w for d, w in zip(direction.values, noise.values)])


def _orthogonalize(v: EmbeddingVector, against: EmbeddingVector) -> EmbeddingVector:
    dot = math.fsum(a * b for a, b in zip(v.values, against.values))
    return _unit([a - dot * b for a, b in zip(v.values, against.values)])


def build_planted_corpus(spec: PlantedSpec) -> PlantedCorpus:
    rng = random.Random(spec.seed)
    corpus = PlantedCorpus(spec, [], {}, {}, {}, {}, {})
    d = spec.dimension
    for p_idx in range(spec.problems):
        pid = f"p{p_idx:04d}"
        tag = content_hash(f"{spec.seed}:{pid}")[:8]
        question = f"Question {p_idx}: determine the planted quantity for instance {tag}."

        u0 = mock_embed(f"{spec.seed}:{pid}:cluster0", d)
        u1 = _orthogonalize(mock_embed(f"{spec.seed}:{pid}:cluster1", d), u0)
        directions = (u0, u1)

        cluster_of: list[int] = []
        for cluster, size in enumerate(spec.cluster_sizes):
            cluster_of.extend([cluster] * size)
        rng.shuffle(cluster_of)

        solutions = []
        for s_idx, cluster in enumerate(cluster_of):
            sid = f"s{s_idx}"
            key = (pid, sid)
            nonce = content_hash(f"{spec.seed}:{pid}:{sid}")[:12]
            text = (
                f"Solution {sid} of problem {pid} follows strategy family {cluster} "
                f"through trace {nonce}; after simplification the final answer is {tag}."
            )
            solutions.append(Solution(sid, text, count_tokens(text)))
            corpus.labels[key] = cluster

            steps = tuple(
                Step(
                    description=(
                        f"Apply stage {t + 1} of the family-{cluster} technique "
                        f"for {pid}/{sid} (variant {nonce})."
                    ),
                    title=f"Step {t + 1}",
                )
                for t in range(spec.steps_per_solution)
            )
            summary = StepSummary.build(pid, sid, steps)
            corpus.summaries[key] = summary

            direction = directions[cluster]
            corpus.step_vectors[key] = tuple(
                _mix(direction, mock_embed(f"{spec.seed}:{pid}:{sid}:step{t}", d), spec.step_signal)
                for t in range(spec.steps_per_solution)
            )
            corpus.summary_vectors[key] = _mix(
                direction, mock_embed(f"{spec.seed}:{pid}:{sid}:summary", d), spec.summary_signal
            )
            corpus.text_vectors[key] = _mix(
                direction, mock_embed(f"{spec.seed}:{pid}:{sid}:text", d), spec.text_signal
            )

        problem = Problem(pid, question, tuple(solutions))
        corpus.problems.append(problem)
        sids = tuple(s.solution_id for s in solutions)
        corpus.payloads.append(
            ProblemPayload(
                problem_id=pid,
                question=question,
                solution_ids=sids,
                texts={s.solution_id: s.text for s in solutions},
                summaries={sid: corpus.summaries[(pid, sid)] for sid in sids},
                step_vectors={sid: corpus.step_vectors[(pid, sid)] for sid in sids},
                text_vectors={sid: corpus.text_vectors[(pid, sid)] for sid in sids},
                summary_vectors={sid: corpus.summary_vectors[(pid, sid)] for sid in sids},
            )
        )
    return corpus


def labels_records(corpus: PlantedCorpus) -> list[dict]:
    return [
        {"problem_id": pid, "solution_id": sid, "cluster": cluster}
        for (pid, sid), cluster in sorted(corpus.labels.items())
    ]


def load_labels(records: list[dict]) -> dict[tuple[str, str], int]:
    return {(r["problem_id"], r["solution_id"]): int(r["cluster"]) for r in records}


def payloads_from_parts(
    problems,
    summaries: Mapping[tuple[str, str], StepSummary],
    cache: EmbeddingCache,
    model_id: str,
) -> list[ProblemPayload]:
    """Assemble comparison payloads from corpus + summaries + cache, keeping
    only the vector kinds actually present in the cache."""
    payloads = []
    for p in problems:
        sids = tuple(s.solution_id for s in p.solutions)
        texts = {s.solution_id: s.text for s in p.solutions}
        summ = {sid: summaries[(p.problem_id, sid)] for sid in sids
                if (p.problem_id, sid) in summaries}
        step_vecs = {}
        summary_vecs = {}
        text_vecs = {}
        for sid in sids:
            s = summ.get(sid)
            if s is not None:
                vecs = [cache.get(model_id, step.description) for step in s.steps]
                if all(v is not None for v in vecs):
                    step_vecs[sid] = tuple(vecs)  # type: ignore[arg-type]
                sv = cache.get(model_id, concat_summary_text(s))
                if sv is not None:
                    summary_vecs[sid] = sv
            tv = cache.get(model_id, texts[sid])
            if tv is not None:
                text_vecs[sid] = tv
        payloads.append(
            ProblemPayload(
                problem_id=p.problem_id,
                question=p.question,
                solution_ids=sids,
                texts=texts,
                summaries=summ,
                step_vectors=step_vecs,
                text_vectors=text_vecs,
                summary_vectors=summary_vecs,
            )
        )
    return payloads
