import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathdiv.core import EmbeddingVector, Step, StepSummary
from pathdiv.distances import (
    DistanceError,
    concat_summary_text,
    cosine_distance,
    directional_divergence,
    pairwise_matrix,
    raw_embedding_distance,
    rpd,
)

# ---------------------------------------------------------------------------
# Independent scalar oracle: plain running sums, explicit loops, no shared
# code with the implementation.


def oracle_cosine(u, v):
    dot = 0.0
    nu = 0.0
    nv = 0.0
    for x, y in zip(u, v):
        dot += x * y
        nu += x * x
        nv += y * y
    d = 1.0 - dot / (math.sqrt(nu) * math.sqrt(nv))
    if d < 0.0:
        return 0.0
    if d > 1.0:
        return 1.0
    return d


def oracle_directional(src, tgt):
    total = 0.0
    for u in src:
        best = None
        for v in tgt:
            d = oracle_cosine(u, v)
            if best is None or d < best:
                best = d
        total += best
    return total / len(src)


def oracle_rpd(a, b):
    if not a or not b:
        return 1.0
    if len(a) < len(b):
        return oracle_directional(a, b)
    if len(b) < len(a):
        return oracle_directional(b, a)
    return 0.5 * (oracle_directional(a, b) + oracle_directional(b, a))


def vec(*values):
    return EmbeddingVector(tuple(float(v) for v in values))


def random_vec(rng, dim):
    return vec(*(rng.uniform(-1.0, 1.0) or 0.1 for _ in range(dim)))


def random_steps(rng, max_len=5, dim=3):
    return [random_vec(rng, dim) for _ in range(rng.randint(1, max_len))]


SQ2 = math.sqrt(2) / 2


class TestCosineDistance:
    def test_identical_direction(self):
        assert cosine_distance(vec(1, 0), vec(1, 0)) == 0.0

    def test_orthogonal(self):
        assert cosine_distance(vec(1, 0), vec(0, 1)) == 1.0

    def test_forty_five_degrees(self):
        d = cosine_distance(vec(1, 0), vec(SQ2, SQ2))
        assert d == pytest.approx(1 - SQ2, abs=1e-12)
        assert d == pytest.approx(oracle_cosine((1, 0), (SQ2, SQ2)), abs=1e-12)

    def test_opposite_clamps_to_one(self):
        assert cosine_distance(vec(1, 0), vec(-1, 0)) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DistanceError, match="dimension"):
            cosine_distance(vec(1, 0), vec(1, 0, 0))

    def test_zero_norm(self):
        with pytest.raises(DistanceError, match="zero-norm"):
            cosine_distance(vec(0, 0), vec(1, 0))

    def test_scale_invariance(self):
        a, b = vec(0.3, -0.7, 0.1), vec(-0.2, 0.5, 0.9)
        big = vec(*(x * 1000 for x in a.values))
        assert cosine_distance(a, b) == pytest.approx(cosine_distance(big, b), abs=1e-12)

    def test_raw_embedding_distance_same_kernel(self):
        a, b = vec(0.3, -0.7, 0.1), vec(-0.2, 0.5, 0.9)
        assert raw_embedding_distance(a, b) == cosine_distance(a, b)
        assert raw_embedding_distance(a, a) == 0.0
        assert raw_embedding_distance(vec(1, 0), vec(0, 1)) == 1.0


class TestDirectionalDivergence:
    def test_single_source_matches_closest(self):
        r = directional_divergence([vec(1, 0)], [vec(1, 0), vec(0, 1)])
        assert r.score == 0.0
        assert r.matches[0].matched_target_index == 0

    def test_two_sources_one_target(self):
        r = directional_divergence([vec(1, 0), vec(0, 1)], [vec(1, 0)])
        assert r.score == pytest.approx(0.5, abs=1e-12)
        assert [m.distance for m in r.matches] == [0.0, 1.0]

    def test_source_equals_target_scores_zero(self):
        steps = [vec(1, 0), vec(0, 1), vec(SQ2, SQ2)]
        assert directional_divergence(steps, steps).score == 0.0

    def test_empty_raises(self):
        with pytest.raises(DistanceError):
            directional_divergence([], [vec(1, 0)])


class TestRpd:
    def test_empty_side_scores_exactly_one(self):
        assert rpd([], [vec(1, 0)]).score == 1.0
        assert rpd([vec(1, 0)], []).score == 1.0
        assert rpd([], []).score == 1.0

    def test_equal_lists_score_zero(self):
        steps = [vec(1, 0), vec(0, 1)]
        assert rpd(steps, list(steps)).score == 0.0

    def test_shorter_list_is_source(self):
        a = [vec(1, 0), vec(0, 1)]
        b = [vec(1, 0), vec(0, 1), vec(SQ2, SQ2)]
        r = rpd(a, b)
        assert r.score == 0.0
        assert r.direction == "a_to_b"
        assert rpd(b, a).direction == "b_to_a"

    def test_equal_length_averages_both_directions(self):
        a = [vec(1, 0), vec(0, 1)]
        b = [vec(1, 0), vec(SQ2, SQ2)]
        r = rpd(a, b)
        assert r.direction == "averaged"
        assert r.score == pytest.approx(oracle_rpd([v.values for v in a], [v.values for v in b]), abs=1e-12)
        # averaged matches carry both directions
        assert len(r.matches) == 4

    def test_score_is_mean_of_matches(self):
        rng = random.Random(5)
        for _ in range(25):
            a = random_steps(rng)
            b = random_steps(rng)
            r = rpd(a, b)
            assert r.score == pytest.approx(
                sum(m.distance for m in r.matches) / len(r.matches), abs=1e-12
            )

    def test_oracle_equivalence_seeded(self):
        rng = random.Random(42)
        for _ in range(300):
            dim = rng.randint(2, 4)
            a = [random_vec(rng, dim) for _ in range(rng.randint(1, 5))]
            b = [random_vec(rng, dim) for _ in range(rng.randint(1, 5))]
            got = rpd(a, b).score
            want = oracle_rpd([v.values for v in a], [v.values for v in b])
            assert got == pytest.approx(want, abs=1e-9)

    def test_symmetry_randomized(self):
        rng = random.Random(7)
        for _ in range(200):
            a = random_steps(rng)
            b = random_steps(rng)
            assert rpd(a, b).score == pytest.approx(rpd(b, a).score, abs=1e-12)

    def test_identity_randomized(self):
        rng = random.Random(8)
        for _ in range(100):
            a = random_steps(rng)
            assert rpd(a, list(a)).score == 0.0

    def test_subsumption_monotonicity(self):
        # extending the target never increases the directional score
        rng = random.Random(9)
        for _ in range(200):
            src = random_steps(rng, max_len=4)
            tgt = random_steps(rng, max_len=4)
            extra = random_steps(rng, max_len=3)
            base = directional_divergence(src, tgt).score
            extended = directional_divergence(src, tgt + extra).score
            assert extended <= base + 1e-12

    def test_range_over_many_random_inputs(self):
        rng = random.Random(10)
        for _ in range(10_000):
            a = [random_vec(rng, 3) for _ in range(rng.randint(1, 3))]
            b = [random_vec(rng, 3) for _ in range(rng.randint(1, 3))]
            assert 0.0 <= rpd(a, b).score <= 1.0


@st.composite
def step_lists(draw, max_len=4, dim=3):
    n = draw(st.integers(1, max_len))
    finite = st.floats(min_value=-5, max_value=5, allow_nan=False)
    out = []
    for _ in range(n):
        values = draw(
            st.lists(finite, min_size=dim, max_size=dim).filter(
                lambda vs: sum(v * v for v in vs) > 1e-6
            )
        )
        out.append(EmbeddingVector(tuple(values)))
    return out


class TestRpdProperties:
    @given(step_lists(), step_lists())
    @settings(max_examples=150, deadline=None)
    def test_symmetry_and_range(self, a, b):
        fwd = rpd(a, b).score
        rev = rpd(b, a).score
        assert 0.0 <= fwd <= 1.0
        assert fwd == pytest.approx(rev, abs=1e-12)

    @given(step_lists(), step_lists())
    @settings(max_examples=150, deadline=None)
    def test_matches_oracle(self, a, b):
        got = rpd(a, b).score
        want = oracle_rpd([v.values for v in a], [v.values for v in b])
        assert got == pytest.approx(want, abs=1e-9)


class TestConcatSummaryText:
    def test_two_steps_newline_joined(self):
        s = StepSummary.build("p", "s", (Step("X"), Step("Y"), Step("Z")))
        assert concat_summary_text(s) == "X\nY\nZ"

    def test_single_step(self):
        s = StepSummary("p", "s", (Step("X"),))
        assert concat_summary_text(s) == "X"

    def test_titles_omitted(self):
        s = StepSummary("p", "s", (Step("desc", title="Title"),))
        assert concat_summary_text(s) == "desc"


class TestPairwiseMatrix:
    def test_single_item_gives_zero_matrix(self):
        m = pairwise_matrix([[vec(1, 0)]], "rpd")
        assert m.n == 1
        assert m.entry(0, 0) == 0.0

    def test_three_solutions_match_bruteforce(self):
        rng = random.Random(11)
        payloads = [random_steps(rng, max_len=4, dim=2) for _ in range(3)]
        m = pairwise_matrix(payloads, "rpd")
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                want = oracle_rpd(
                    [v.values for v in payloads[i]], [v.values for v in payloads[j]]
                )
                assert m.entry(i, j) == pytest.approx(want, abs=1e-9)

    def test_symmetric_even_with_equal_length_lists(self):
        rng = random.Random(12)
        for _ in range(30):
            payloads = [[random_vec(rng, 3) for _ in range(3)] for _ in range(4)]
            m = pairwise_matrix(payloads, "rpd")
            for i in range(4):
                for j in range(4):
                    assert m.entry(i, j) == m.entry(j, i)

    def test_vector_methods(self):
        vs = [vec(1, 0), vec(0, 1), vec(SQ2, SQ2)]
        m = pairwise_matrix(vs, "raw_embedding")
        assert m.entry(0, 1) == 1.0
        assert m.entry(0, 2) == pytest.approx(1 - SQ2, abs=1e-12)

    def test_payload_method_mismatch(self):
        with pytest.raises(DistanceError, match="payload"):
            pairwise_matrix([vec(1, 0)], "rpd")
        with pytest.raises(DistanceError, match="payload"):
            pairwise_matrix([[vec(1, 0)]], "raw_embedding")

    def test_unknown_method(self):
        with pytest.raises(DistanceError, match="unknown"):
            pairwise_matrix([vec(1, 0)], "bogus")
