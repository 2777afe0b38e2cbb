"""LLM gateway: prompt rendering, chat transport (HTTP and scripted mock),
boxed-output parsing, retries, and the judge/summarizer/selector operations.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from enum import IntEnum
from typing import Mapping, Sequence

import requests

from . import prompts
from .core import Step, StepSummary, content_hash, load_jsonl, save_jsonl
from .curation import JudgeUndecided

log = logging.getLogger(__name__)

Messages = list[dict]

BOX_MARKER = "//boxed"
BOX_JSON_MARKER = "//boxed_json"
NO_PAIR_SENTINEL = [["No"]]


class ParseError(ValueError):
    """Boxed-output parsing failure; ``reason`` is one of
    "no_box", "unbalanced", "kind"."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


class GatewayError(RuntimeError):
    """Transport failure that persisted through retries."""


class SummarizationFailed(RuntimeError):
    def __init__(self, problem_id: str, solution_id: str, cause: Exception):
        super().__init__(f"summarization failed for ({problem_id!r}, {solution_id!r}): {cause}")
        self.problem_id = problem_id
        self.solution_id = solution_id


class ClassificationFailed(RuntimeError):
    pass


class DiversityClass(IntEnum):
    NOT_DIVERSE = 1
    DIVERSE = 2


class PairRating(IntEnum):
    SIMILAR = 1
    DIVERSE = 2


@dataclass(frozen=True)
class BoxedPayload:
    kind: str  # "json" | "integer" | "id_pairs"
    raw_text: str  # normalized inner text of the box
    parsed: object


# ---------------------------------------------------------------------------
# Boxed-output parsing


def _find_last_marker(text: str) -> int:
    # //boxed{ and //boxed_json{ cannot overlap: the char after "boxed"
    # differs. The later start position wins.
    plain = text.rfind(BOX_MARKER + "{")
    boxed_json = text.rfind(BOX_JSON_MARKER + "{")
    return max(plain, boxed_json)


def _balanced_span(text: str, open_idx: int) -> str:
    """The brace-balanced span starting at ``open_idx`` (an opening brace),
    ignoring braces inside double-quoted JSON strings."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(open_idx, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[open_idx : i + 1]
    raise ParseError("unbalanced", "boxed block opened but never balanced")


def _boxed_span(response_text: str) -> str:
    """Raw brace-balanced span of the LAST boxed block, delimiters included."""
    start = _find_last_marker(response_text)
    if start < 0:
        raise ParseError("no_box", "no //boxed{...} or //boxed_json{...} marker found")
    open_idx = response_text.index("{", start)
    return _balanced_span(response_text, open_idx)


def _collapse(text: str) -> str:
    return text.replace("{{", "{").replace("}}", "}")


def extract_boxed_text(response_text: str) -> str:
    """Inner text of the LAST boxed block, with template-doubled braces
    collapsed and the delimiting brace pair stripped."""
    return _collapse(_boxed_span(response_text))[1:-1]


def parse_boxed(response_text: str, expected_kind: str) -> BoxedPayload:
    """Parse the last boxed block as ``expected_kind``:

    - "integer": a bare integer.
    - "json": any JSON value, in single- or template-doubled-brace form; an
      object may appear wrapped in the box delimiters or sharing its braces
      with them.
    - "id_pairs": a list of lists -- one [id_A, id_B] pair, or the [["No"]]
      no-diverse-pair sentinel.
    """
    span = _boxed_span(response_text)
    if expected_kind == "integer":
        inner = _collapse(span)[1:-1]
        try:
            value = int(inner.strip())
        except ValueError as exc:
            raise ParseError("kind", f"expected a bare integer, got {inner!r}") from exc
        return BoxedPayload("integer", inner, value)

    if expected_kind in ("json", "id_pairs"):
        # A single-form span never starts with "{{" (after its opening brace
        # JSON continues with a quote, digit, bracket, or literal), so that
        # prefix marks template-doubled output and collapsing is tried first;
        # otherwise valid unescaped JSON is honored before any collapsing so
        # legitimate adjacent closers ("}}" ending nested objects) survive.
        collapsed = _collapse(span)
        if span.startswith("{{"):
            candidates = (collapsed[1:-1], collapsed, span[1:-1], span)
        else:
            candidates = (span[1:-1], span, collapsed[1:-1], collapsed)
        value = None
        parsed_from = None
        for candidate in candidates:
            try:
                value = json.loads(candidate)
                parsed_from = candidate
                break
            except json.JSONDecodeError:
                continue
        if parsed_from is None:
            raise ParseError("kind", f"boxed content is not valid JSON: {span!r}")
        if expected_kind == "id_pairs":
            if value != NO_PAIR_SENTINEL and not (
                isinstance(value, list)
                and len(value) == 1
                and isinstance(value[0], list)
                and len(value[0]) == 2
            ):
                raise ParseError(
                    "kind", f"expected [[id_A, id_B]] or [[\"No\"]], got {value!r}"
                )
        return BoxedPayload(expected_kind, parsed_from, value)

    raise ValueError(f"unknown expected_kind {expected_kind!r}")


def render_boxed(value: object, kind: str, doubled: bool = True) -> str:
    """Serialize ``value`` into a boxed block the parser reads back
    identically. Used to build scripted-mock fixtures."""
    if kind == "integer":
        body = str(int(value))  # type: ignore[arg-type]
        marker = BOX_MARKER
    elif kind in ("json", "id_pairs"):
        body = json.dumps(value, ensure_ascii=False)
        marker = BOX_JSON_MARKER if kind == "id_pairs" or isinstance(value, list) else BOX_MARKER
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if doubled:
        body = body.replace("{", "{{").replace("}", "}}")
        if body.startswith("{{"):
            return marker + body
        return marker + "{{" + body + "}}"
    if body.startswith("{"):
        return marker + body
    return marker + "{" + body + "}"


# ---------------------------------------------------------------------------
# Prompt rendering


def render(template: str, **fields: str) -> str:
    """Substitute ``{name}`` placeholders literally, leaving every other brace
    in the template untouched."""
    out = template
    for name, value in fields.items():
        out = out.replace("{" + name + "}", str(value))
    return out


def prompt_messages(prompt: str) -> Messages:
    return [{"role": "user", "content": prompt}]


def request_fingerprint(messages: Messages) -> str:
    """Deterministic hash of a request body; keys the scripted mock."""
    return content_hash(json.dumps(messages, sort_keys=True, ensure_ascii=False))


def format_step_lines(summary: StepSummary) -> str:
    return "\n".join(f"{i}. {s.description}" for i, s in enumerate(summary.steps, start=1))


def format_summaries(summaries: Sequence[StepSummary]) -> str:
    """The {summaries_text} serialization: a "Solution <id>:" header and
    numbered step descriptions per solution, blank line between solutions."""
    blocks = [f"Solution {s.solution_id}:\n{format_step_lines(s)}" for s in summaries]
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------------
# Backends


class HttpChatBackend:
    """Chat-completions transport with bounded in-flight requests and retries."""

    kind = "http"

    def __init__(
        self,
        endpoint_url: str,
        model_id: str,
        api_key: str | None = None,
        max_in_flight: int = 4,
        retry_limit: int = 3,
        timeout: float = 120.0,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.endpoint_url = endpoint_url.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.max_in_flight = max_in_flight
        self.retry_limit = retry_limit
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    def complete(self, messages: Messages) -> str:
        body = {"model": self.model_id, "messages": messages, "temperature": 0}
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last: Exception | None = None
        for attempt in range(max(1, self.retry_limit)):
            with self._gate:
                try:
                    resp = requests.post(
                        f"{self.endpoint_url}/chat/completions",
                        json=body,
                        headers=headers,
                        timeout=self.timeout,
                    )
                    resp.raise_for_status()
                    return resp.json()["choices"][0]["message"]["content"]
                except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                    last = exc
                    log.warning("chat request attempt %d failed: %s", attempt + 1, exc)
            time.sleep(min(2.0, 0.2 * (attempt + 1)))
        raise GatewayError(f"chat request failed after {self.retry_limit} attempts: {last}")


class ScriptedChatBackend:
    """Deterministic offline backend: request-fingerprint -> canned response."""

    kind = "scripted_mock"

    def __init__(self, responses: Mapping[str, str], model_id: str = "scripted",
                 retry_limit: int = 3):
        self.responses = dict(responses)
        self.model_id = model_id
        self.max_in_flight = 1
        self.retry_limit = retry_limit
        self.calls = 0

    @classmethod
    def from_jsonl(cls, path) -> "ScriptedChatBackend":
        recs = load_jsonl(path)
        return cls({r["key"]: r["response"] for r in recs})

    @staticmethod
    def save_fixture(responses: Mapping[str, str], path) -> None:
        save_jsonl([{"key": k, "response": v} for k, v in responses.items()], path)

    def complete(self, messages: Messages) -> str:
        self.calls += 1
        key = request_fingerprint(messages)
        if key not in self.responses:
            raise GatewayError(f"scripted backend has no response for request {key}")
        return self.responses[key]


# ---------------------------------------------------------------------------
# Operations


def _attempts(backend) -> int:
    return max(1, getattr(backend, "retry_limit", 3))


def summarize_messages(question: str, solution_text: str) -> Messages:
    return prompt_messages(
        render(prompts.SUMMARIZE, question_text=question, answer_cot=solution_text)
    )


def _steps_from_payload(parsed: object) -> list[Step]:
    if not isinstance(parsed, dict) or "logical_steps" not in parsed:
        raise ParseError("kind", "response JSON lacks a 'logical_steps' key")
    raw_steps = parsed["logical_steps"]
    if not isinstance(raw_steps, list):
        raise ParseError("kind", "'logical_steps' is not a list")
    steps = []
    for item in raw_steps:
        if not isinstance(item, dict) or not item.get("step_description"):
            raise ParseError("kind", f"bad step object: {item!r}")
        title = item.get("step_title")
        steps.append(Step(description=str(item["step_description"]),
                          title=None if title is None else str(title)))
    if not steps:
        raise ParseError("kind", "'logical_steps' is empty")
    return steps


def summarize_solution(question: str, solution, backend, problem_id: str) -> StepSummary:
    """Decompose one solution into an ordered list of method-focused steps."""
    from .core import CorpusError

    messages = summarize_messages(question, solution.text)
    last: Exception | None = None
    for _ in range(_attempts(backend)):
        try:
            payload = parse_boxed(backend.complete(messages), "json")
            steps = _steps_from_payload(payload.parsed)
            return StepSummary.build(problem_id, solution.solution_id, steps)
        except (ParseError, GatewayError, CorpusError) as exc:
            last = exc
    raise SummarizationFailed(problem_id, solution.solution_id, last) from last


def completeness_messages(tail: str) -> Messages:
    return prompt_messages(render(prompts.JUDGE_COMPLETENESS, tail_text=tail))


def judge_completeness(tail: str, backend) -> bool:
    """True iff the judge deems the solution ending complete. Raises
    JudgeUndecided after retries; callers exclude the solution with a warning."""
    if not tail.strip():
        return False
    messages = completeness_messages(tail)
    last: Exception | None = None
    for _ in range(_attempts(backend)):
        try:
            verdict = extract_boxed_text(backend.complete(messages)).strip().upper()
        except (ParseError, GatewayError) as exc:
            last = exc
            continue
        if verdict == "YES":
            return True
        if verdict == "NO":
            return False
        last = ParseError("kind", f"expected YES/NO verdict, got {verdict!r}")
    raise JudgeUndecided(f"completeness judge undecided: {last}")


def classification_messages(question: str, summaries: Sequence[StepSummary]) -> Messages:
    return prompt_messages(
        render(prompts.CLASSIFY_PROBLEM, question=question,
               summaries_text=format_summaries(summaries))
    )


def classify_problem_diversity(
    question: str, summaries: Sequence[StepSummary], backend
) -> DiversityClass:
    """Binary classification of one problem's solution set: 1 uniform, 2 diverse."""
    if len(summaries) < 2:
        raise ValueError("classification requires at least 2 summaries")
    messages = classification_messages(question, summaries)
    try:
        payload = _query_enum(backend, messages)
    except (ParseError, GatewayError) as exc:
        raise ClassificationFailed(str(exc)) from exc
    return DiversityClass(payload)


def _query_enum(backend, messages: Messages) -> int:
    last: Exception | None = None
    for _ in range(_attempts(backend)):
        try:
            payload = parse_boxed(backend.complete(messages), "integer")
            if payload.parsed not in (1, 2):
                raise ParseError("kind", f"rating must be 1 or 2, got {payload.parsed!r}")
            return int(payload.parsed)
        except (ParseError, GatewayError) as exc:
            last = exc
    assert last is not None
    raise last


def pair_selection_messages(question: str, summaries: Sequence[StepSummary]) -> Messages:
    return prompt_messages(
        render(prompts.SELECT_PAIR, question=question,
               summaries_text=format_summaries(summaries))
    )


def select_diverse_pair(
    question: str, summaries: Sequence[StepSummary], backend
) -> tuple[str, str] | None:
    """The most methodologically diverse solution pair per the LLM, or None
    when it reports that no pair qualifies."""
    if len(summaries) < 2:
        raise ValueError("pair selection requires at least 2 summaries")
    candidates = {s.solution_id for s in summaries}
    messages = pair_selection_messages(question, summaries)
    last: Exception | None = None
    for _ in range(_attempts(backend)):
        try:
            payload = parse_boxed(backend.complete(messages), "id_pairs")
            if payload.parsed == NO_PAIR_SENTINEL:
                return None
            id_a, id_b = (str(v) for v in payload.parsed[0])  # type: ignore[index]
            if id_a not in candidates or id_b not in candidates or id_a == id_b:
                raise ParseError("kind", f"pair ({id_a!r}, {id_b!r}) not among candidates")
            return (id_a, id_b)
        except (ParseError, GatewayError) as exc:
            last = exc
    assert last is not None
    raise last


def pair_judge_messages(question: str, answer_a: str, summary_a: str,
                        answer_b: str, summary_b: str) -> Messages:
    return prompt_messages(
        render(prompts.JUDGE_PAIR, question=question, answer_a=answer_a,
               summary_a=summary_a, answer_b=answer_b, summary_b=summary_b)
    )


def judge_pair_diversity(
    question: str, answer_a: str, summary_a: str, answer_b: str, summary_b: str, backend
) -> PairRating:
    """Rate one solution pair: 1 methodologically similar, 2 diverse."""
    messages = pair_judge_messages(question, answer_a, summary_a, answer_b, summary_b)
    try:
        rating = _query_enum(backend, messages)
    except (ParseError, GatewayError) as exc:
        raise ClassificationFailed(str(exc)) from exc
    return PairRating(rating)


def set_selection_messages(question: str, summaries: Sequence[StepSummary],
                           num_to_select: int) -> Messages:
    return prompt_messages(
        render(prompts.SELECT_SET, question=question,
               summaries_text=format_summaries(summaries),
               num_to_select=num_to_select)
    )


def select_diverse_set(
    question: str, summaries: Sequence[StepSummary], num_to_select: int, backend
) -> list[str]:
    """A set of exactly ``num_to_select`` mutually diverse solution ids."""
    candidates = {s.solution_id for s in summaries}
    if num_to_select > len(candidates):
        raise ValueError("num_to_select exceeds candidate count")
    messages = set_selection_messages(question, summaries, num_to_select)
    last: Exception | None = None
    for _ in range(_attempts(backend)):
        try:
            payload = parse_boxed(backend.complete(messages), "json")
            if not isinstance(payload.parsed, list):
                raise ParseError("kind", f"expected a JSON list, got {payload.parsed!r}")
            ids = [str(v) for v in payload.parsed]
            if len(ids) != num_to_select:
                raise ParseError(
                    "kind", f"expected {num_to_select} ids, got {len(ids)}"
                )
            if len(set(ids)) != len(ids):
                raise ParseError("kind", f"duplicate ids in {ids!r}")
            unknown = [i for i in ids if i not in candidates]
            if unknown:
                raise ParseError("kind", f"unknown ids {unknown!r}")
            return ids
        except (ParseError, GatewayError) as exc:
            last = exc
    assert last is not None
    raise last
