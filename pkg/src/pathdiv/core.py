"""Domain types, validation, content hashing, and JSONL persistence.

Every record type is an immutable dataclass that round-trips losslessly
through one JSON object per line (UTF-8, trailing newline).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

Tokenizer = Callable[[str], list[str]]

NEGATIVE_INFINITY = float("-inf")

# Step counts the summarizer is asked for; outside this band we warn but keep.
EXPECTED_STEP_RANGE = (3, 5)
MAX_ACCEPTED_STEPS = 10


class CorpusError(ValueError):
    """Malformed corpus file: bad JSON line, duplicate id, schema violation."""


def whitespace_tokenize(text: str) -> list[str]:
    return text.split()


def count_tokens(text: str, tokenizer: Tokenizer | None = None) -> int:
    """Token count under the configured tokenizer (whitespace by default)."""
    tok = tokenizer or whitespace_tokenize
    return len(tok(text))


def content_hash(text: str) -> str:
    """SHA-256 hex digest of the UTF-8 bytes; keys the embedding cache."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Solution:
    solution_id: str
    text: str
    token_count: int

    def __post_init__(self) -> None:
        if not self.solution_id:
            raise CorpusError("solution_id must be non-empty")
        if not self.text:
            raise CorpusError(f"solution {self.solution_id!r}: text must be non-empty")
        if self.token_count < 0:
            raise CorpusError(f"solution {self.solution_id!r}: negative token_count")

    @classmethod
    def from_record(cls, rec: Mapping, tokenizer: Tokenizer | None = None) -> "Solution":
        text = rec["text"]
        count = rec.get("token_count")
        if count is None:
            count = count_tokens(text, tokenizer)
        return cls(solution_id=rec["solution_id"], text=text, token_count=int(count))

    def to_record(self) -> dict:
        return {"solution_id": self.solution_id, "text": self.text}


@dataclass(frozen=True)
class Problem:
    problem_id: str
    question: str
    solutions: tuple[Solution, ...]

    def __post_init__(self) -> None:
        if not self.problem_id:
            raise CorpusError("problem_id must be non-empty")
        ids = [s.solution_id for s in self.solutions]
        if len(ids) != len(set(ids)):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise CorpusError(f"problem {self.problem_id!r}: duplicate solution_id {dup!r}")
        object.__setattr__(self, "solutions", tuple(self.solutions))

    @property
    def k(self) -> int:
        return len(self.solutions)

    def solution(self, solution_id: str) -> Solution:
        for s in self.solutions:
            if s.solution_id == solution_id:
                return s
        raise KeyError(f"problem {self.problem_id!r} has no solution {solution_id!r}")

    def with_solutions(self, solutions: Sequence[Solution]) -> "Problem":
        return Problem(self.problem_id, self.question, tuple(solutions))

    @classmethod
    def from_record(cls, rec: Mapping, tokenizer: Tokenizer | None = None) -> "Problem":
        sols = tuple(Solution.from_record(s, tokenizer) for s in rec["solutions"])
        return cls(problem_id=rec["problem_id"], question=rec["question"], solutions=sols)

    def to_record(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "question": self.question,
            "solutions": [s.to_record() for s in self.solutions],
        }


@dataclass(frozen=True)
class Step:
    description: str
    title: str | None = None

    def __post_init__(self) -> None:
        if not self.description:
            raise CorpusError("step description must be non-empty")


@dataclass(frozen=True)
class StepSummary:
    problem_id: str
    solution_id: str
    steps: tuple[Step, ...]
    step_count_warning: bool = False

    def __post_init__(self) -> None:
        if not self.steps:
            raise CorpusError(
                f"summary ({self.problem_id!r}, {self.solution_id!r}): no steps"
            )
        object.__setattr__(self, "steps", tuple(self.steps))

    @classmethod
    def build(cls, problem_id: str, solution_id: str, steps: Sequence[Step]) -> "StepSummary":
        """Construct with the step-count policy applied: 1..10 accepted, 0 rejected,
        counts outside the expected 3..5 band flagged with a warning marker."""
        if len(steps) > MAX_ACCEPTED_STEPS:
            raise CorpusError(
                f"summary ({problem_id!r}, {solution_id!r}): {len(steps)} steps "
                f"exceeds the accepted maximum of {MAX_ACCEPTED_STEPS}"
            )
        lo, hi = EXPECTED_STEP_RANGE
        warning = not (lo <= len(steps) <= hi)
        return cls(problem_id, solution_id, tuple(steps), step_count_warning=warning)

    @classmethod
    def from_record(cls, rec: Mapping) -> "StepSummary":
        steps = tuple(Step(description=s["description"], title=s.get("title")) for s in rec["steps"])
        return cls(
            problem_id=rec["problem_id"],
            solution_id=rec["solution_id"],
            steps=steps,
            step_count_warning=bool(rec.get("step_count_warning", False)),
        )

    def to_record(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "solution_id": self.solution_id,
            "steps": [{"title": s.title, "description": s.description} for s in self.steps],
            "step_count_warning": self.step_count_warning,
        }


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str = ""

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("embedding dimension must be > 0")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("embedding contains non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def dimension(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise divergence matrix with zero diagonal, entries in [0, 1]."""

    entries: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(float(v) for v in row) for row in self.entries)
        n = len(rows)
        if n < 1:
            raise ValueError("distance matrix must have n >= 1")
        if any(len(row) != n for row in rows):
            raise ValueError("distance matrix must be square")
        for i in range(n):
            if rows[i][i] != 0.0:
                raise ValueError(f"diagonal entry ({i},{i}) must be zero")
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"matrix not symmetric at ({i},{j})")
                if not (0.0 <= rows[i][j] <= 1.0):
                    raise ValueError(f"entry ({i},{j})={rows[i][j]} outside [0, 1]")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    def entry(self, i: int, j: int) -> float:
        return self.entries[i][j]

    def row_sum(self, i: int) -> float:
        return math.fsum(self.entries[i][j] for j in range(self.n) if j != i)


@dataclass(frozen=True)
class CuratedRecord:
    problem_id: str
    question: str
    selected_solution_ids: tuple[str, ...]
    score_div: float

    def __post_init__(self) -> None:
        ids = self.selected_solution_ids
        if len(ids) != len(set(ids)):
            raise ValueError(f"curated record {self.problem_id!r}: duplicate selections")
        object.__setattr__(self, "selected_solution_ids", tuple(ids))

    @classmethod
    def from_record(cls, rec: Mapping) -> "CuratedRecord":
        return cls(
            problem_id=rec["problem_id"],
            question=rec["question"],
            selected_solution_ids=tuple(rec["selected_solution_ids"]),
            score_div=float(rec["score_div"]),
        )

    def to_record(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "question": self.question,
            "selected_solution_ids": list(self.selected_solution_ids),
            "score_div": self.score_div,
        }


@dataclass(frozen=True)
class CuratedSet:
    records: tuple[CuratedRecord, ...]
    config_fingerprint: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))


DISTANCE_METHODS = ("rpd", "raw_embedding", "summary_embedding")


@dataclass(frozen=True)
class CurationConfig:
    top_n_problems: int
    solutions_per_problem: int
    max_avg_tokens: int = 14000
    completeness_tail_tokens: int = 500
    min_valid_solutions: int = 10
    rng_seed: int = 0
    distance_method: str = "rpd"

    def __post_init__(self) -> None:
        for name in ("top_n_problems", "solutions_per_problem", "max_avg_tokens",
                     "completeness_tail_tokens", "min_valid_solutions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.distance_method not in DISTANCE_METHODS:
            raise ValueError(
                f"distance_method must be one of {DISTANCE_METHODS}, "
                f"got {self.distance_method!r}"
            )

    def to_record(self) -> dict:
        return {
            "top_n_problems": self.top_n_problems,
            "solutions_per_problem": self.solutions_per_problem,
            "max_avg_tokens": self.max_avg_tokens,
            "completeness_tail_tokens": self.completeness_tail_tokens,
            "min_valid_solutions": self.min_valid_solutions,
            "rng_seed": self.rng_seed,
            "distance_method": self.distance_method,
        }

    def fingerprint(self) -> str:
        return content_hash(json.dumps(self.to_record(), sort_keys=True))


def save_jsonl(records: Iterable, path: str | os.PathLike) -> None:
    """Write one JSON object per line, UTF-8, trailing newline.

    Accepts plain dicts or any object exposing ``to_record()``.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = rec.to_record() if hasattr(rec, "to_record") else rec
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


def load_jsonl(path: str | os.PathLike) -> list[dict]:
    """Read a JSONL file; raises naming the offending line on malformed JSON."""
    out: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: malformed JSON on line {lineno}: {exc.msg}") from exc
    return out


def load_corpus(path: str | os.PathLike, tokenizer: Tokenizer | None = None) -> list[Problem]:
    """Load problems.jsonl in file order, rejecting duplicate problem_ids."""
    problems: list[Problem] = []
    seen: set[str] = set()
    for lineno, rec in enumerate(load_jsonl(path), start=1):
        try:
            problem = Problem.from_record(rec, tokenizer)
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"{path}: bad problem record on line {lineno}: {exc}") from exc
        if problem.problem_id in seen:
            raise CorpusError(f"{path}: duplicate problem_id {problem.problem_id!r}")
        seen.add(problem.problem_id)
        problems.append(problem)
    return problems


def load_summaries(path: str | os.PathLike) -> list[StepSummary]:
    return [StepSummary.from_record(rec) for rec in load_jsonl(path)]


def summary_index(summaries: Iterable[StepSummary]) -> dict[tuple[str, str], StepSummary]:
    return {(s.problem_id, s.solution_id): s for s in summaries}


def score_to_json(score: float) -> float | str:
    """JSON has no -inf; the sentinel serializes as the string "-inf"."""
    return "-inf" if score == NEGATIVE_INFINITY else score


def score_from_json(value: float | str) -> float:
    if value == "-inf":
        return NEGATIVE_INFINITY
    return float(value)
