import math
import random
from collections import Counter, defaultdict

import numpy as np
import pytest

from pipebench.dsl import ALL_KINDS, OperatorKind, serialize_program
from pipebench.interpreter import execute_program
from pipebench.propagation import schema_covers
from pipebench.synthesis import (
    Difficulty,
    LengthDistribution,
    SynthesisError,
    TransitionMatrix,
    build_transition_matrix,
    choose_task_tables,
    classify_difficulty,
    sample_length,
    synthesize_chain,
)
from pipebench.tables import ColumnType, Table, TableSet

from test_propagation import sample_corpus


class TestTransitionMatrix:
    def test_single_count_smoothing(self):
        # one observed a->b transition: (1 + 0.5) / (1 + 16 * 0.5)
        pairs = [(OperatorKind.FILTER, OperatorKind.SORT, 1)]
        m = build_transition_matrix(pairs, alpha=0.5)
        assert m.prob(OperatorKind.FILTER, OperatorKind.SORT) == pytest.approx(1.5 / 9)
        assert m.prob(OperatorKind.FILTER, OperatorKind.TOPK) == pytest.approx(0.5 / 9)

    def test_zero_counts_gives_uniform(self):
        m = TransitionMatrix(np.zeros((16, 16)))
        assert np.allclose(m.probs, 1 / 16)

    def test_large_alpha_approaches_uniform(self):
        counts = np.zeros((16, 16))
        counts[0, 1] = 1000
        m = TransitionMatrix(counts, alpha=1e9)
        assert np.allclose(m.probs, 1 / 16, atol=1e-4)

    def test_rows_stochastic(self):
        m = TransitionMatrix.default()
        assert np.allclose(m.probs.sum(axis=1), 1.0, atol=1e-12)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            build_transition_matrix([(OperatorKind.SORT, OperatorKind.TOPK, -1)])

    def test_json_round_trip(self, tmp_path):
        m = TransitionMatrix.default()
        path = tmp_path / "transitions.json"
        path.write_text(__import__("json").dumps(m.to_json_obj()))
        again = TransitionMatrix.load(str(path))
        assert np.array_equal(again.counts, m.counts)
        assert again.alpha == m.alpha

    def test_sample_next_matches_row_within_3_sigma(self):
        m = TransitionMatrix.default()
        rng = random.Random(31)
        n = 20000
        seen = Counter(m.sample_next(OperatorKind.GROUPBY, rng) for _ in range(n))
        for j, kind in enumerate(ALL_KINDS):
            p = m.prob(OperatorKind.GROUPBY, kind)
            sigma = math.sqrt(n * p * (1 - p))
            assert abs(seen[kind] - n * p) <= 3 * sigma


class TestLengthDistribution:
    def test_support_is_1_to_8(self):
        d = LengthDistribution(0.05)
        rng = random.Random(1)
        draws = [sample_length(d, rng) for _ in range(20000)]
        assert min(draws) >= 1 and max(draws) <= 8

    def test_mass_at_1_matches_normalization(self):
        d = LengthDistribution(0.3)
        rng = random.Random(2)
        n = 50000
        draws = [sample_length(d, rng) for _ in range(n)]
        p1 = d.pmf()[0]
        sigma = math.sqrt(n * p1 * (1 - p1))
        assert abs(draws.count(1) - n * p1) <= 3 * sigma

    def test_fit_mean_hits_target(self):
        d = LengthDistribution.fit_mean(4.24)
        assert d.mean() == pytest.approx(4.24, abs=1e-6)

    def test_empirical_mean_near_analytic(self):
        d = LengthDistribution.fit_mean(4.24)
        rng = random.Random(3)
        draws = [sample_length(d, rng) for _ in range(20000)]
        assert abs(sum(draws) / len(draws) - d.mean()) < 0.1

    def test_invalid_p_rejected(self):
        with pytest.raises(ValueError):
            LengthDistribution(0.0)
        with pytest.raises(ValueError):
            LengthDistribution(1.0)


class TestDifficulty:
    @pytest.mark.parametrize(
        "k,expected",
        [
            (1, Difficulty.EASY),
            (3, Difficulty.EASY),
            (4, Difficulty.MEDIUM),
            (6, Difficulty.MEDIUM),
            (7, Difficulty.HARD),
            (8, Difficulty.HARD),
        ],
    )
    def test_thresholds(self, k, expected):
        assert classify_difficulty(k) is expected

    def test_program_overload(self, m001_program):
        assert classify_difficulty(m001_program) is Difficulty.MEDIUM


class TestSynthesizeChain:
    def test_deterministic_for_fixed_seed(self):
        data = sample_corpus(random.Random(10), n=3)
        m = TransitionMatrix.default()
        d = LengthDistribution.fit_mean(4.24)
        a = synthesize_chain(data, m, d, random.Random(55))
        b = synthesize_chain(data, m, d, random.Random(55))
        assert serialize_program(a.program) == serialize_program(b.program)
        assert a.output == b.output

    def test_chains_execute_and_match_schemas(self):
        rng = random.Random(4)
        m = TransitionMatrix.default()
        d = LengthDistribution.fit_mean(4.24)
        for trial in range(60):
            data = sample_corpus(rng, n=rng.randint(1, 3))
            result = synthesize_chain(data, m, d, rng)
            assert 1 <= len(result.program) <= 8
            replay, _ = execute_program(data, result.program)
            assert replay == result.output
            # predicted schema after the last op covers the realized one
            final_state = result.schemas[-1]
            name = result.output.name
            assert schema_covers(final_state[name], result.output.schema())

    def test_single_table_never_yields_join_or_union(self):
        rng = random.Random(8)
        m = TransitionMatrix.default()
        d = LengthDistribution.fit_mean(4.24)
        kinds = set()
        for _ in range(40):
            data = sample_corpus(rng, n=1)
            result = synthesize_chain(data, m, d, rng)
            kinds |= result.program.kind_set()
        assert OperatorKind.JOIN not in kinds
        assert OperatorKind.UNION not in kinds

    def test_unusable_tables_raise(self):
        empty = Table("t", [("a", ColumnType.TEXT)], [])
        # a single empty text-only table cannot bind every kind, but sort
        # still binds; build a truly unusable state instead: zero columns
        # is impossible, so check the error path via a matrix that is
        # irrelevant -- only first-op redraws matter.
        data = TableSet.of(empty)
        m = TransitionMatrix.default()
        d = LengthDistribution.fit_mean(4.24)
        result = synthesize_chain(data, m, d, random.Random(0))
        assert len(result.program) >= 1  # sort/select/topk still bindable

    def test_first_op_uniform_within_3_sigma(self):
        rng = random.Random(12)
        m = TransitionMatrix.default()
        d = LengthDistribution.fit_mean(4.24)
        proposals = Counter()

        def observer(event, payload):
            if event == "first_proposal":
                proposals[payload[0]] += 1

        for _ in range(400):
            data = sample_corpus(rng, n=rng.randint(1, 3))
            synthesize_chain(data, m, d, rng, observer=observer)
        n = sum(proposals.values())
        p = 1 / 16
        sigma = math.sqrt(n * p * (1 - p))
        for kind in ALL_KINDS:
            assert abs(proposals[kind] - n * p) <= 3 * sigma, kind

    def test_proposals_follow_transition_rows(self):
        rng = random.Random(13)
        m = TransitionMatrix.default()
        d = LengthDistribution(0.02)  # long chains -> many proposals
        by_prev = defaultdict(Counter)

        def observer(event, payload):
            if event == "proposal":
                prev, kind = payload
                by_prev[prev][kind] += 1

        for _ in range(1500):
            data = sample_corpus(rng, n=rng.randint(1, 2))
            synthesize_chain(data, m, d, rng, observer=observer)
        checked = 0
        for prev, seen in by_prev.items():
            n = sum(seen.values())
            if n < 300:
                continue
            for kind in ALL_KINDS:
                p = m.prob(prev, kind)
                sigma = math.sqrt(n * p * (1 - p))
                assert abs(seen[kind] - n * p) <= 3 * sigma, (prev, kind)
            checked += 1
        assert checked >= 3


class TestChooseTaskTables:
    def test_multi_table_rate_tracks_join_union_mass(self):
        rng = random.Random(21)
        corpus = list(sample_corpus(rng, n=6))
        m = TransitionMatrix.default()
        n = 4000
        multi = sum(1 for _ in range(n) if len(choose_task_tables(corpus, m, rng)) == 2)
        mass = m.kind_mass([OperatorKind.JOIN, OperatorKind.UNION])
        sigma = math.sqrt(n * mass * (1 - mass))
        assert abs(multi - n * mass) <= 3 * sigma

    def test_single_when_no_compatible_pairs(self):
        rng = random.Random(22)
        a = Table("a", [("x", ColumnType.INTEGER)], [(1,)])
        b = Table("b", [("y", ColumnType.TEXT)], [("q",)])
        m = TransitionMatrix.default()
        for _ in range(200):
            assert len(choose_task_tables([a, b], m, rng)) == 1
