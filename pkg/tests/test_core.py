import json
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathdiv.core import (
    NEGATIVE_INFINITY,
    CorpusError,
    CuratedRecord,
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
    load_jsonl,
    save_jsonl,
    score_from_json,
    score_to_json,
)

EMPTY_SHA256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


class TestContentHash:
    def test_empty_string_is_the_standard_digest(self):
        assert content_hash("") == EMPTY_SHA256

    def test_deterministic(self):
        assert content_hash("same text") == content_hash("same text")

    def test_one_char_difference_changes_digest(self):
        for i in range(50):
            base = f"prefix-{i}-suffix"
            assert content_hash(base) != content_hash(base + "x")

    def test_injective_on_large_generated_set(self):
        texts = {f"text number {i} with salt {i * i}" for i in range(10_001)}
        digests = {content_hash(t) for t in texts}
        assert len(digests) == len(texts)


class TestCountTokens:
    def test_whitespace_default(self):
        assert count_tokens("a b c") == 3

    def test_empty(self):
        assert count_tokens("") == 0

    def test_threshold_scale_fixture(self):
        text = " ".join("x" for _ in range(14_001))
        assert count_tokens(text) == 14_001

    def test_pluggable_tokenizer(self):
        assert count_tokens("abc", tokenizer=list) == 3


class TestCorpusIO:
    def test_two_valid_lines_round_trip_in_order(self, tmp_path):
        path = tmp_path / "problems.jsonl"
        records = [
            {"problem_id": "p1", "question": "q1",
             "solutions": [{"solution_id": "s1", "text": "one two"}]},
            {"problem_id": "p2", "question": "q2",
             "solutions": [{"solution_id": "s1", "text": "three"}]},
        ]
        save_jsonl(records, path)
        problems = load_corpus(path)
        assert [p.problem_id for p in problems] == ["p1", "p2"]
        assert problems[0].solutions[0].token_count == 2

    def test_empty_file_gives_empty_list(self, tmp_path):
        path = tmp_path / "problems.jsonl"
        path.write_text("")
        assert load_corpus(path) == []

    def test_truncated_line_reports_line_number(self, tmp_path):
        path = tmp_path / "problems.jsonl"
        good = json.dumps({"problem_id": "p1", "question": "q", "solutions": []})
        path.write_text(good + "\n" + good.replace("p1", "p2") + "\n" + '{"problem_id": "p3", "ques\n')
        with pytest.raises(CorpusError, match="line 3"):
            load_corpus(path)

    def test_duplicate_problem_id_rejected(self, tmp_path):
        path = tmp_path / "problems.jsonl"
        rec = {"problem_id": "dup", "question": "q", "solutions": []}
        save_jsonl([rec, rec], path)
        with pytest.raises(CorpusError, match="dup"):
            load_corpus(path)

    def test_save_to_unwritable_path_raises(self, tmp_path):
        if os.geteuid() == 0:
            # root bypasses permission bits; a missing parent is still an I/O error
            target = tmp_path / "missing-dir" / "out.jsonl"
        else:
            ro = tmp_path / "ro"
            ro.mkdir()
            os.chmod(ro, 0o500)
            target = ro / "out.jsonl"
        with pytest.raises(OSError):
            save_jsonl([{"a": 1}], target)

    def test_trailing_newline_and_one_object_per_line(self, tmp_path):
        path = tmp_path / "out.jsonl"
        save_jsonl([{"a": 1}, {"b": 2}], path)
        raw = path.read_text()
        assert raw.endswith("\n")
        assert len(raw.strip().splitlines()) == 2


# hypothesis strategies for record round-trips

_ids = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters="-_"),
    min_size=1,
    max_size=12,
)
_texts = st.text(min_size=1, max_size=80).filter(lambda t: t.strip())


def _solutions(max_size=4):
    return st.lists(
        st.tuples(_ids, _texts), min_size=0, max_size=max_size,
        unique_by=lambda t: t[0],
    ).map(lambda pairs: tuple(Solution(sid, text, count_tokens(text)) for sid, text in pairs))


_problems = st.builds(Problem, problem_id=_ids, question=_texts, solutions=_solutions())

_steps = st.lists(
    st.builds(Step, description=_texts, title=st.one_of(st.none(), _texts)),
    min_size=1,
    max_size=8,
).map(tuple)

_summaries = st.builds(
    StepSummary,
    problem_id=_ids,
    solution_id=_ids,
    steps=_steps,
    step_count_warning=st.booleans(),
)

_curated = st.builds(
    CuratedRecord,
    problem_id=_ids,
    question=_texts,
    selected_solution_ids=st.lists(_ids, min_size=1, max_size=5, unique=True).map(tuple),
    score_div=st.floats(min_value=0, max_value=1, allow_nan=False),
)


class TestRoundTrips:
    @given(problems=st.lists(_problems, max_size=8, unique_by=lambda p: p.problem_id))
    @settings(max_examples=60, deadline=None)
    def test_problem_round_trip(self, problems, tmp_path_factory):
        path = tmp_path_factory.mktemp("rt") / "c.jsonl"
        save_jsonl(problems, path)
        assert load_corpus(path) == list(problems)

    @given(summaries=st.lists(_summaries, max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_summary_round_trip(self, summaries, tmp_path_factory):
        path = tmp_path_factory.mktemp("rt") / "s.jsonl"
        save_jsonl(summaries, path)
        loaded = [StepSummary.from_record(r) for r in load_jsonl(path)]
        assert loaded == list(summaries)

    @given(records=st.lists(_curated, max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_curated_round_trip_preserves_score_precision(self, records, tmp_path_factory):
        path = tmp_path_factory.mktemp("rt") / "cur.jsonl"
        save_jsonl(records, path)
        loaded = [CuratedRecord.from_record(r) for r in load_jsonl(path)]
        assert loaded == list(records)
        for before, after in zip(records, loaded):
            assert after.score_div == before.score_div

    def test_hundred_random_problems_round_trip(self, tmp_path):
        problems = [
            Problem(
                f"p{i}",
                f"question {i}",
                tuple(
                    Solution(f"s{j}", f"text {i}-{j} answer {i + j}", 4)
                    for j in range(i % 5)
                ),
            )
            for i in range(100)
        ]
        path = tmp_path / "c.jsonl"
        save_jsonl(problems, path)
        assert load_corpus(path) == problems


class TestInvariants:
    def test_solution_requires_text(self):
        with pytest.raises(CorpusError):
            Solution("s1", "", 0)

    def test_problem_rejects_duplicate_solution_ids(self):
        s = Solution("s1", "text", 1)
        with pytest.raises(CorpusError, match="s1"):
            Problem("p", "q", (s, s))

    def test_step_summary_rejects_empty_steps(self):
        with pytest.raises(CorpusError):
            StepSummary("p", "s", ())

    @pytest.mark.parametrize("count,warn", [(1, True), (2, True), (3, False), (5, False), (6, True), (10, True)])
    def test_step_count_warning_band(self, count, warn):
        steps = tuple(Step(f"step {i}") for i in range(count))
        assert StepSummary.build("p", "s", steps).step_count_warning is warn

    def test_step_count_above_ten_rejected(self):
        steps = tuple(Step(f"step {i}") for i in range(11))
        with pytest.raises(CorpusError):
            StepSummary.build("p", "s", steps)

    def test_embedding_vector_rejects_nan(self):
        with pytest.raises(ValueError):
            EmbeddingVector((float("nan"), 1.0))

    def test_embedding_vector_rejects_empty(self):
        with pytest.raises(ValueError):
            EmbeddingVector(())

    def test_matrix_rejects_asymmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            DistanceMatrix(((0.0, 0.5), (0.4, 0.0)))

    def test_matrix_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError, match="diagonal"):
            DistanceMatrix(((0.1,),))

    def test_matrix_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            DistanceMatrix(((0.0, 1.5), (1.5, 0.0)))

    def test_matrix_accepts_valid(self):
        m = DistanceMatrix(((0.0, 0.25), (0.25, 0.0)))
        assert m.n == 2
        assert m.entry(0, 1) == 0.25

    def test_curation_config_validates_thresholds(self):
        with pytest.raises(ValueError):
            CurationConfig(top_n_problems=0, solutions_per_problem=3)
        with pytest.raises(ValueError):
            CurationConfig(top_n_problems=1, solutions_per_problem=1, distance_method="bogus")

    def test_config_fingerprint_tracks_contents(self):
        a = CurationConfig(top_n_problems=10, solutions_per_problem=3)
        b = CurationConfig(top_n_problems=10, solutions_per_problem=3)
        c = CurationConfig(top_n_problems=11, solutions_per_problem=3)
        assert a.fingerprint() == b.fingerprint()
        assert a.fingerprint() != c.fingerprint()


class TestScoreSentinel:
    def test_sentinel_serializes_as_string(self):
        assert score_to_json(NEGATIVE_INFINITY) == "-inf"
        assert score_to_json(0.25) == 0.25

    def test_sentinel_round_trip(self):
        assert score_from_json(score_to_json(NEGATIVE_INFINITY)) == NEGATIVE_INFINITY
        assert score_from_json(0.25) == 0.25
