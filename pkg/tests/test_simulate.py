import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intermittence import (
    InvalidModel, NotErgodic, ScenarioSpec, TestCaseKey, TransitionModel, Verdict,
    bundled_scenarios, classify_all, expected_q, generate_dataset, generate_scenario,
    generate_sequence, stationary_distribution,
)
from intermittence.simulate import (
    ALWAYS_FAIL, ALWAYS_PASS, FLIP, RNG_ALGORITHM, scenarios_from_config,
)
from intermittence.verdicts import to_letters

from oracles import naive_classify, naive_counts

KEY = TestCaseKey("sim", "t", "p")
SKEWED = TransitionModel.two_state(0.9, 0.5)


def counts_q(seq):
    n = naive_counts(list(seq))
    total = sum(map(sum, n))
    return 1 - sum(n[i][i] for i in range(3)) / total


class TestModel:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(InvalidModel):
            TransitionModel([[0.5, 0.4, 0], [1, 0, 0], [1, 0, 0]])

    def test_negative(self):
        with pytest.raises(InvalidModel):
            TransitionModel([[1.5, -0.5, 0], [1, 0, 0], [1, 0, 0]])

    def test_shape(self):
        with pytest.raises(InvalidModel):
            TransitionModel([[1, 0], [0, 1]])

    def test_tolerance(self):
        TransitionModel([[1 - 1e-12, 0, 0], [1, 0, 0], [1, 0, 0]])


class TestGenerateSequence:
    def test_absorbing_pass(self):
        assert to_letters(generate_sequence(ALWAYS_PASS, 5, 0)) == "PPPPP"

    def test_flip(self):
        assert to_letters(generate_sequence(FLIP, 4, 0)) == "PFPF"

    def test_starts_at_initial_state(self):
        m = SKEWED.with_initial(Verdict.INVALID)
        assert generate_sequence(m, 10, 3)[0] == Verdict.INVALID

    @given(st.integers(0, 2**63 - 1))
    def test_deterministic(self, seed):
        a = generate_sequence(SKEWED, 200, seed)
        b = generate_sequence(SKEWED, 200, seed)
        assert np.array_equal(a, b)

    def test_seeds_differ(self):
        assert not np.array_equal(generate_sequence(SKEWED, 200, 1), generate_sequence(SKEWED, 200, 2))

    def test_zero_probability_never_taken(self):
        m = TransitionModel([[0.5, 0.5, 0], [0.5, 0.5, 0], [1, 0, 0]])
        assert Verdict.INVALID not in generate_sequence(m, 10_000, 0)

    def test_length(self):
        with pytest.raises(ValueError):
            generate_sequence(SKEWED, 0, 0)

    def test_empirical_rows(self):
        m = TransitionModel([[0.7, 0.2, 0.1], [0.3, 0.5, 0.2], [0.4, 0.4, 0.2]])
        seq = generate_sequence(m, 100_000, 11)
        n = np.array(naive_counts(seq.tolist()), dtype=float)
        freq = n / n.sum(axis=1, keepdims=True)
        assert np.abs(freq - m.m).max() < 0.01


class TestStationary:
    def test_absorbing(self):
        assert stationary_distribution(ALWAYS_PASS) == pytest.approx([1, 0, 0], abs=1e-10)

    def test_skewed(self):
        # 0.1 * pi_p = 0.5 * pi_f
        assert stationary_distribution(SKEWED) == pytest.approx([5 / 6, 1 / 6, 0], abs=1e-10)

    def test_periodic_flip(self):
        assert stationary_distribution(FLIP) == pytest.approx([0.5, 0.5, 0], abs=1e-10)

    def test_reducible(self):
        # fail is absorbing, but pass can leave for fail: reachable part not irreducible
        m = TransitionModel([[0.5, 0.5, 0], [0, 1, 0], [1, 0, 0]])
        with pytest.raises(NotErgodic):
            stationary_distribution(m)

    def test_fixed_point(self):
        m = TransitionModel([[0.7, 0.2, 0.1], [0.3, 0.5, 0.2], [0.4, 0.4, 0.2]])
        pi = stationary_distribution(m)
        assert pi @ m.m == pytest.approx(pi, abs=1e-10)
        assert pi.sum() == pytest.approx(1, abs=1e-12)


class TestExpectedQ:
    def test_absorbing(self):
        assert expected_q(ALWAYS_PASS) == 0.0

    def test_flip(self):
        assert expected_q(FLIP) == pytest.approx(1.0)

    def test_skewed(self):
        assert expected_q(SKEWED) == pytest.approx(1 / 6, abs=1e-12)

    def test_skewed_by_simulation(self):
        seq = generate_sequence(SKEWED, 1_000_000, 2024)
        assert counts_q(seq) == pytest.approx(1 / 6, abs=0.005)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(0.05, 1), min_size=9, max_size=9), st.integers(0, 2**32))
    def test_converges(self, raw, seed):
        m = np.array(raw).reshape(3, 3)
        model = TransitionModel(m / m.sum(axis=1, keepdims=True))
        assert counts_q(generate_sequence(model, 100_000, seed)) == pytest.approx(
            expected_q(model), abs=0.01)


class TestScenarios:
    def test_phase_chaining(self):
        spec = ScenarioSpec("x", ((3, ALWAYS_FAIL), (3, FLIP)))
        # flip continues from the last fail, so its first verdict is a pass
        assert to_letters(generate_scenario(spec, KEY, 0).codes) == "FFFPFP"

    def test_nights_consecutive(self):
        h = generate_scenario(ScenarioSpec("x", ((5, ALWAYS_PASS),)), KEY, 0)
        assert [(b - a).days for a, b in zip(h.nights, h.nights[1:])] == [1] * 4

    def test_flip_then_pass(self):
        h = generate_scenario(ScenarioSpec("x", ((12, FLIP), (30, ALWAYS_PASS))), KEY, 0)
        assert {"A6"} <= set(classify_all([h])[0].groups)

    def test_fail_then_pass(self):
        h = generate_scenario(ScenarioSpec("x", ((10, ALWAYS_FAIL), (30, ALWAYS_PASS))), KEY, 0)
        assert set(classify_all([h])[0].groups) == {"B6"}

    def test_all_pass(self):
        h = generate_scenario(ScenarioSpec("x", ((50, ALWAYS_PASS),)), KEY, 0)
        assert classify_all([h]) == []

    def test_invalid_specs(self):
        with pytest.raises(InvalidModel):
            ScenarioSpec("x", ((0, ALWAYS_PASS),))
        with pytest.raises(InvalidModel):
            ScenarioSpec("x", ((1, ALWAYS_PASS),))

    def test_bundled_suite_covers_required_shapes(self):
        suite = bundled_scenarios()
        assert len(suite) >= 12
        shapes = {frozenset(s.expected_groups) for s in suite}
        for needed in [{"A6"}, {"A13"}, {"A6", "A13"}, {"B6"}, {"B6", "B13"}, {"A6", "B13"}, set()]:
            assert frozenset(needed) in shapes
        assert any(s.length < 6 for s in suite)
        assert any(6 <= s.length < 13 for s in suite)

    def test_bundled_labels_agree_with_oracle(self):
        for spec in bundled_scenarios():
            h = generate_scenario(spec, spec.key(), 0)
            assert naive_classify(h.codes.tolist()) == spec.expected_groups, spec.name

    def test_dataset_determinism(self):
        a = generate_dataset([ScenarioSpec("s", ((40, SKEWED),))], seed=5, copies=3)
        b = generate_dataset([ScenarioSpec("s", ((40, SKEWED),))], seed=5, copies=3)
        assert a.algorithm == RNG_ALGORITHM
        assert a.histories == b.histories

    def test_histories_independent_per_key(self):
        d = generate_dataset([ScenarioSpec("s", ((200, SKEWED),))], seed=5, copies=2)
        h0, h1 = d.histories.values()
        assert not np.array_equal(h0.codes, h1.codes)

    def test_config_parsing(self):
        doc = {"scenario": [{"name": "m", "expected_groups": ["B6"], "phase": [
            {"length": 10, "model": "fail"},
            {"length": 5, "model": {"matrix": [[1, 0, 0], [1, 0, 0], [1, 0, 0]], "initial": "fail"}},
        ]}]}
        (spec,) = scenarios_from_config(doc)
        assert spec.expected_groups == {"B6"} and spec.length == 15

    def test_config_rejects_unknown_model(self):
        with pytest.raises(InvalidModel):
            scenarios_from_config({"scenario": [{"name": "m", "phase": [{"length": 3, "model": "zz"}]}]})
