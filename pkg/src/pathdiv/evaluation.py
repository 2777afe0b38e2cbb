"""Evaluation and analysis: pass@k estimation, Self-BLEU and its complement,
output-diversity reporting partitioned by pass count, the metric-comparison
harness, and score-distribution export.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import random
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .core import EmbeddingVector, StepSummary, load_jsonl
from .distances import cosine_distance, rpd
from .llm import select_diverse_pair

log = logging.getLogger(__name__)

# Pass-count partition used by the diversity report: problems with a correct
# count in [2, 12] are "moderately solved", in [13, n] "well solved".
MODERATE_RANGE = (2, 12)
WELL_SOLVED_LOW = 13
DEFAULT_ATTEMPTS = 16


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased pass@k estimate from n samples with c correct:
    1 - C(n-c, k)/C(n, k).

    Evaluated with exact integer binomials (arbitrary precision, so no
    overflow) and a single correctly rounded division, which makes the result
    bit-identical to exhaustive subset enumeration.
    """
    if not (0 <= c <= n):
        raise ValueError(f"need 0 <= c <= n, got c={c}, n={n}")
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n - c < k:
        return 1.0
    return 1.0 - math.comb(n - c, k) / math.comb(n, k)


@dataclass(frozen=True)
class PassAtKReport:
    n: int
    counts: tuple[tuple[str, int], ...]  # (problem_id, c) in input order
    estimates: Mapping[int, float]  # k -> mean over problems

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "counts": {pid: c for pid, c in self.counts},
            "estimates": {str(k): v for k, v in sorted(self.estimates.items())},
        }


def build_passk_report(
    per_problem: Sequence[tuple[str, int, int]], k_list: Sequence[int]
) -> PassAtKReport:
    """Aggregate (problem_id, n, c) rows; n must be uniform across problems."""
    if not per_problem:
        raise ValueError("no problems to evaluate")
    ns = {n for _, n, _ in per_problem}
    if len(ns) != 1:
        raise ValueError(f"sample count differs across problems: {sorted(ns)}")
    n = ns.pop()
    estimates = {
        k: math.fsum(pass_at_k(n, c, k) for _, _, c in per_problem) / len(per_problem)
        for k in k_list
    }
    return PassAtKReport(
        n=n,
        counts=tuple((pid, c) for pid, _, c in per_problem),
        estimates=estimates,
    )


def load_samples(path: str | os.PathLike) -> list[tuple[str, int, int]]:
    """Read samples.jsonl ({problem_id, sample_index, text, is_correct}) into
    (problem_id, n, c) rows, preserving first-seen problem order."""
    order: list[str] = []
    totals: dict[str, int] = {}
    correct: dict[str, int] = {}
    for lineno, rec in enumerate(load_jsonl(path), start=1):
        try:
            pid = rec["problem_id"]
            flag = bool(rec["is_correct"])
            rec["sample_index"], rec["text"]
        except (KeyError, TypeError) as exc:
            from .core import CorpusError

            raise CorpusError(f"{path}: bad sample record on line {lineno}: {exc}") from exc
        if pid not in totals:
            order.append(pid)
            totals[pid] = 0
            correct[pid] = 0
        totals[pid] += 1
        correct[pid] += int(flag)
    return [(pid, totals[pid], correct[pid]) for pid in order]


# ---------------------------------------------------------------------------
# Self-BLEU

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def bleu_tokenize(text: str) -> list[str]:
    """Whitespace-plus-punctuation tokenization: words and standalone marks."""
    return _TOKEN_RE.findall(text)


def _modified_precision(candidate: list[str], references: list[list[str]], order: int) -> float:
    cand_counts = Counter(tuple(candidate[i : i + order]) for i in range(len(candidate) - order + 1))
    total = sum(cand_counts.values())
    max_ref: Counter = Counter()
    for ref in references:
        ref_counts = Counter(tuple(ref[i : i + order]) for i in range(len(ref) - order + 1))
        for gram, cnt in ref_counts.items():
            if cnt > max_ref[gram]:
                max_ref[gram] = cnt
    matches = sum(min(cnt, max_ref[gram]) for gram, cnt in cand_counts.items())
    if matches == 0:
        # add-one smoothing for orders with zero matches (also covers
        # candidates shorter than the order, where total == 0)
        return (matches + 1) / (total + 1)
    return matches / total


def _closest_ref_length(cand_len: int, references: list[list[str]]) -> int:
    return min((abs(len(r) - cand_len), len(r)) for r in references)[1]


def bleu(candidate: str, references: Sequence[str], max_order: int = 4) -> float:
    """BLEU in [0, 1] with uniform weights up to ``max_order``, the standard
    brevity penalty, and the smoothing rule documented above."""
    cand = bleu_tokenize(candidate)
    refs = [bleu_tokenize(r) for r in references]
    if not cand:
        return 0.0
    log_sum = math.fsum(
        math.log(_modified_precision(cand, refs, order)) for order in range(1, max_order + 1)
    )
    geo_mean = math.exp(log_sum / max_order)
    r = _closest_ref_length(len(cand), refs)
    bp = 1.0 if len(cand) >= r else math.exp(1.0 - r / len(cand))
    return bp * geo_mean


def self_bleu(texts: Sequence[str]) -> float:
    """Mean leave-one-out BLEU over the set, scaled to [0, 100]."""
    if len(texts) < 2:
        raise ValueError("self-BLEU requires at least 2 texts")
    scores = [
        bleu(texts[i], [t for j, t in enumerate(texts) if j != i])
        for i in range(len(texts))
    ]
    return 100.0 * math.fsum(scores) / len(scores)


def div_self_bleu(texts: Sequence[str]) -> float:
    return 100.0 - self_bleu(texts)


# ---------------------------------------------------------------------------
# Output-diversity report


@dataclass(frozen=True)
class CorrectSolution:
    text: str
    step_vectors: tuple[EmbeddingVector, ...]


@dataclass(frozen=True)
class SolvedProblem:
    problem_id: str
    correct_solutions: tuple[CorrectSolution, ...]

    @property
    def c(self) -> int:
        return len(self.correct_solutions)


@dataclass(frozen=True)
class DiversityReport:
    group: str  # "moderately_solved" | "well_solved"
    problem_count: int
    mean_rpd: float
    div_self_bleu: float

    def to_record(self) -> dict:
        return {
            "group": self.group,
            "problem_count": self.problem_count,
            "mean_rpd": self.mean_rpd,
            "div_self_bleu": self.div_self_bleu,
        }


def mean_pairwise_rpd(solutions: Sequence[CorrectSolution]) -> float:
    k = len(solutions)
    pairs = [
        rpd(solutions[i].step_vectors, solutions[j].step_vectors).score
        for i in range(k)
        for j in range(i + 1, k)
    ]
    return math.fsum(pairs) / len(pairs)


def output_diversity_report(
    per_problem: Sequence[SolvedProblem], n: int = DEFAULT_ATTEMPTS
) -> list[DiversityReport]:
    """Partition problems by correct count (2-12 moderately solved, 13-n well
    solved; anything else excluded) and report, per group, the mean over
    problems of (mean pairwise divergence among correct solutions) and of
    Div-Self-BLEU. Group means average per-problem means, not pooled pairs."""
    groups: dict[str, list[SolvedProblem]] = {"moderately_solved": [], "well_solved": []}
    lo, hi = MODERATE_RANGE
    for p in per_problem:
        if lo <= p.c <= hi:
            groups["moderately_solved"].append(p)
        elif WELL_SOLVED_LOW <= p.c <= n:
            groups["well_solved"].append(p)
    reports = []
    for name in ("moderately_solved", "well_solved"):
        members = groups[name]
        if not members:
            continue
        mean_rpd = math.fsum(mean_pairwise_rpd(p.correct_solutions) for p in members) / len(members)
        mean_dsb = math.fsum(
            div_self_bleu([s.text for s in p.correct_solutions]) for p in members
        ) / len(members)
        reports.append(DiversityReport(name, len(members), mean_rpd, mean_dsb))
    return reports


# ---------------------------------------------------------------------------
# Metric-comparison harness


@dataclass(frozen=True)
class ProblemPayload:
    """Everything a pair selector might need for one problem."""

    problem_id: str
    question: str
    solution_ids: tuple[str, ...]
    texts: Mapping[str, str]
    summaries: Mapping[str, StepSummary]
    step_vectors: Mapping[str, tuple[EmbeddingVector, ...]]
    text_vectors: Mapping[str, EmbeddingVector]
    summary_vectors: Mapping[str, EmbeddingVector]


PairSelector = Callable[[ProblemPayload], tuple[str, str]]
# judge(payload, id_a, id_b) -> True when the pair is strategically diverse
PairJudge = Callable[[ProblemPayload, str, str], bool]


@dataclass(frozen=True)
class ComparisonOutcome:
    method: str
    success_count: int
    trial_count: int
    success_rate: float

    def to_record(self) -> dict:
        return {
            "method": self.method,
            "success_count": self.success_count,
            "trial_count": self.trial_count,
            "success_rate": self.success_rate,
        }


class MethodFailure(RuntimeError):
    """A selector could not nominate a pair for this problem."""


def random_pair_selector(rng: random.Random) -> PairSelector:
    def select(payload: ProblemPayload) -> tuple[str, str]:
        i, j = sorted(rng.sample(range(len(payload.solution_ids)), 2))
        return payload.solution_ids[i], payload.solution_ids[j]

    return select


def _argmax_pair(
    payload: ProblemPayload, distance: Callable[[str, str], float]
) -> tuple[str, str]:
    best: tuple[str, str] | None = None
    best_d = -1.0
    ids = payload.solution_ids
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            d = distance(ids[i], ids[j])
            if d > best_d:
                best_d = d
                best = (ids[i], ids[j])
    if best is None:
        raise MethodFailure(f"{payload.problem_id}: fewer than 2 solutions")
    return best


def raw_embedding_selector(payload: ProblemPayload) -> tuple[str, str]:
    def dist(a: str, b: str) -> float:
        try:
            return cosine_distance(payload.text_vectors[a], payload.text_vectors[b])
        except KeyError as exc:
            raise MethodFailure(f"{payload.problem_id}: missing text embedding {exc}") from exc

    return _argmax_pair(payload, dist)


def summary_embedding_selector(payload: ProblemPayload) -> tuple[str, str]:
    def dist(a: str, b: str) -> float:
        try:
            return cosine_distance(payload.summary_vectors[a], payload.summary_vectors[b])
        except KeyError as exc:
            raise MethodFailure(f"{payload.problem_id}: missing summary embedding {exc}") from exc

    return _argmax_pair(payload, dist)


def rpd_selector(payload: ProblemPayload) -> tuple[str, str]:
    def dist(a: str, b: str) -> float:
        try:
            return rpd(payload.step_vectors[a], payload.step_vectors[b]).score
        except KeyError as exc:
            raise MethodFailure(f"{payload.problem_id}: missing step embeddings {exc}") from exc

    return _argmax_pair(payload, dist)


def llm_pair_selector(backend) -> PairSelector:
    def select(payload: ProblemPayload) -> tuple[str, str]:
        summaries = [payload.summaries[sid] for sid in payload.solution_ids
                     if sid in payload.summaries]
        if len(summaries) < 2:
            raise MethodFailure(f"{payload.problem_id}: fewer than 2 summaries")
        try:
            pair = select_diverse_pair(payload.question, summaries, backend)
        except Exception as exc:
            raise MethodFailure(f"{payload.problem_id}: llm selection failed: {exc}") from exc
        if pair is None:
            raise MethodFailure(f"{payload.problem_id}: llm reported no diverse pair")
        return pair

    return select


METHOD_NAMES = ("random", "raw_embedding", "summary_embedding", "llm_selection", "rpd")


def build_selectors(
    names: Sequence[str], rng: random.Random | None = None, backend=None
) -> dict[str, PairSelector]:
    selectors: dict[str, PairSelector] = {}
    for name in names:
        if name == "random":
            selectors[name] = random_pair_selector(rng or random.Random(0))
        elif name == "raw_embedding":
            selectors[name] = raw_embedding_selector
        elif name == "summary_embedding":
            selectors[name] = summary_embedding_selector
        elif name == "rpd":
            selectors[name] = rpd_selector
        elif name == "llm_selection":
            if backend is None:
                raise ValueError("llm_selection requires a chat backend")
            selectors[name] = llm_pair_selector(backend)
        else:
            raise ValueError(f"unknown method {name!r}")
    return selectors


def planted_cluster_judge(labels: Mapping[tuple[str, str], object]) -> PairJudge:
    """Ground-truth oracle: a pair is diverse iff its planted cluster labels
    differ. Missing labels raise KeyError and fail the trial."""

    def judge(payload: ProblemPayload, id_a: str, id_b: str) -> bool:
        return labels[(payload.problem_id, id_a)] != labels[(payload.problem_id, id_b)]

    return judge


def llm_pair_judge(backend) -> PairJudge:
    from .llm import PairRating, format_step_lines, judge_pair_diversity

    def judge(payload: ProblemPayload, id_a: str, id_b: str) -> bool:
        rating = judge_pair_diversity(
            payload.question,
            payload.texts[id_a],
            format_step_lines(payload.summaries[id_a]),
            payload.texts[id_b],
            format_step_lines(payload.summaries[id_b]),
            backend,
        )
        return rating == PairRating.DIVERSE

    return judge


def compare_metrics(
    payloads: Sequence[ProblemPayload],
    methods: Mapping[str, PairSelector],
    judge: PairJudge,
) -> list[ComparisonOutcome]:
    """Per problem, each method nominates its most-diverse pair and the judge
    scores it; returns one aggregated outcome per method, in method order.
    Selector or judge failures count as failed trials with a warning."""
    outcomes = []
    for name, selector in methods.items():
        successes = 0
        trials = 0
        for payload in payloads:
            trials += 1
            try:
                id_a, id_b = selector(payload)
                if judge(payload, id_a, id_b):
                    successes += 1
            except Exception as exc:
                log.warning("method %s failed on %s: %s", name, payload.problem_id, exc)
        rate = successes / trials if trials else 0.0
        outcomes.append(ComparisonOutcome(name, successes, trials, rate))
    return outcomes


# ---------------------------------------------------------------------------
# Score histograms


def score_histogram(
    scores: Sequence[float], bin_count: int
) -> list[tuple[float, float, int]]:
    """Equal-width bins over [0, max(1, max score)]; rows of
    (bin_low, bin_high, count) whose counts sum to len(scores)."""
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    if any(not math.isfinite(s) for s in scores):
        raise ValueError("scores must be finite")
    hi = max(1.0, max(scores)) if scores else 1.0
    width = hi / bin_count
    counts = [0] * bin_count
    for s in scores:
        idx = min(int(s / width), bin_count - 1) if width > 0 else 0
        counts[max(0, idx)] += 1
    return [(i * width, (i + 1) * width, counts[i]) for i in range(bin_count)]


def write_histogram_csv(rows: Sequence[tuple[float, float, int]], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "count"])
        for low, high, count in rows:
            writer.writerow([f"{low:.6f}", f"{high:.6f}", count])
