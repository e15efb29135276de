
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intermittence import (
    A6, A13, B6, B13, DEFAULT_SPECS, GroupSpec, MissingExclusionPartner, TestCaseKey,
    VerdictHistory, WindowTooSmall, classify_all, classify_one, group_overlap, population_summary,
)
from intermittence.classify import GroupAssignment, classifiable_counts
from intermittence.errors import ConfigError

from oracles import naive_classify, naive_population

FLIP_THEN_PASS = "PF" * 6 + "P" * 30
FAIL_THEN_PASS = "F" * 10 + "P" * 30


def hist(letters, name="t", system="ts"):
    return VerdictHistory.from_verdicts((system, name, "default"), letters)


def histories(min_len=0, max_len=40, max_size=10):
    seqs = st.lists(st.lists(st.integers(0, 2), min_size=min_len, max_size=max_len),
                    max_size=max_size)
    return seqs.map(lambda ss: [VerdictHistory.from_verdicts(("ts", f"t{i}", "p"), s)
                                for i, s in enumerate(ss)])


class TestGroupSpec:
    def test_defaults(self):
        assert (A6.window_size, A6.q_min, A6.p_final_min) == (6, 0.5, 0.96)
        assert (A13.window_size, A13.q_min) == (13, 0.35)
        assert (B6.p_dip_max, B13.p_dip_max, B13.window_size) == (0.2, 0.2, 13)

    def test_kind_fields_are_exclusive(self):
        with pytest.raises(ConfigError):
            GroupSpec("X", "intermittent", 6, q_min=0.5, p_dip_max=0.2)
        with pytest.raises(ConfigError):
            GroupSpec("X", "consistent", 6, q_min=0.5)

    def test_threshold_range(self):
        with pytest.raises(ConfigError):
            GroupSpec.intermittent("X", 6, q_min=1.5)

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmall):
            GroupSpec.intermittent("X", 1, q_min=0.5)

    def test_dict_round_trip(self):
        for spec in DEFAULT_SPECS:
            assert GroupSpec.from_dict(spec.to_dict()) == spec


class TestClassifyOne:
    def test_flip_then_pass_is_a6(self):
        m = classify_one(hist(FLIP_THEN_PASS), A6)
        assert m.member
        assert m.evidence.trigger_score == 1.0 and m.evidence.final_p == 1.0
        assert m.evidence.trigger_index == 5

    def test_fail_then_pass_is_b6(self):
        h = hist(FAIL_THEN_PASS)
        assert not classify_one(h, A6)
        m = classify_one(h, B6, [A6])
        assert m.member and m.evidence.trigger_score == 0.0

    def test_fail_then_pass_max_q(self):
        from intermittence import windowed_scores
        assert windowed_scores(hist(FAIL_THEN_PASS), 6).q.max() == pytest.approx(0.2)

    def test_ten_fails_too_few_for_b13(self):
        # the lowest 13-window holds 10 fails and 3 passes: p = 3/13 >= 0.2
        m = classify_one(hist(FAIL_THEN_PASS), B13, [A13])
        assert not m.member and m.reason == "no_trigger"

    def test_all_pass_never_member(self):
        h = hist("P" * 270)
        for spec in DEFAULT_SPECS:
            assert not classify_one(h, spec, DEFAULT_SPECS)

    def test_short_history(self):
        m = classify_one(hist("PFPF"), A6)
        assert not m.member and m.reason == "insufficient_data"

    def test_exclusion_reason(self):
        h = hist("F" * 8 + "PFP" + "P" * 30)
        assert classify_one(h, A6).member
        m = classify_one(h, B6, [A6])
        assert not m.member and m.reason == "excluded_by_A6"

    def test_consistent_without_partner(self):
        with pytest.raises(MissingExclusionPartner):
            classify_one(hist(FAIL_THEN_PASS), B6)
        with pytest.raises(MissingExclusionPartner):
            classify_one(hist(FAIL_THEN_PASS), B6, [A13])

    def test_final_p_too_low(self):
        m = classify_one(hist("PF" * 10), A6)
        assert not m.member and m.reason == "final_p_too_low"
        assert m.evidence is not None

    def test_thresholds_are_inclusive_and_strict(self):
        # q = 1/2 exactly meets q_min = 0.5; p = 1/5 exactly does not go below 0.2
        a = GroupSpec.intermittent("A", 3, q_min=0.5, p_final_min=1.0)
        assert classify_one(hist("PPFFFPPP"), a).member
        b = GroupSpec.consistent("B", 5, p_dip_max=0.2, p_final_min=1.0)
        dip = hist("PFFFF" + "P" * 5)
        assert classify_one(dip, b, [GroupSpec.intermittent("A", 5, q_min=1.0)]).reason == "no_trigger"
        final = GroupSpec.intermittent("C", 4, q_min=0.0, p_final_min=0.75)
        assert classify_one(hist("FPPPFPPP"), final).member


class TestClassifyAll:
    def test_spec_example_dataset(self):
        data = [hist(FLIP_THEN_PASS, "flip"), hist(FAIL_THEN_PASS, "fail"), hist("P" * 50, "pass")]
        got = {a.key.test_script: set(a.groups) for a in classify_all(data)}
        # 13 alternating verdicts fit in the first 13-window, so A13 also fires
        assert got == {"flip": {"A6", "A13"}, "fail": {"B6"}}

    def test_empty(self):
        assert classify_all([]) == []

    def test_sorted_by_key(self):
        data = [hist(FLIP_THEN_PASS, n) for n in ("c", "a", "b")]
        assert [a.key.test_script for a in classify_all(data)] == ["a", "b", "c"]

    def test_labels_follow_spec_order(self):
        (a,) = classify_all([hist(FLIP_THEN_PASS)], [A13, A6])
        assert a.groups == ("A13", "A6")

    def test_missing_partner(self):
        with pytest.raises(MissingExclusionPartner):
            classify_all([hist(FAIL_THEN_PASS)], [A6, B13])

    def test_duplicate_labels(self):
        with pytest.raises(ConfigError):
            classify_all([], [A6, A6])

    def test_only_intermittent_specs(self):
        out = classify_all([hist(FLIP_THEN_PASS, "x"), hist(FAIL_THEN_PASS, "y")], [A6, A13])
        assert [set(a.groups) for a in out] == [{"A6", "A13"}]

    @settings(max_examples=200, deadline=None)
    @given(histories(max_len=10))
    def test_matches_brute_force_short(self, data):
        self._check_oracle(data)

    @settings(max_examples=200, deadline=None)
    @given(histories(min_len=5, max_len=45))
    def test_matches_brute_force_long(self, data):
        self._check_oracle(data)

    @staticmethod
    def _check_oracle(data):
        got = {a.key: set(a.groups) for a in classify_all(data)}
        for h in data:
            assert got.get(h.key, set()) == naive_classify([int(c) for c in h.codes])

    @settings(max_examples=300, deadline=None)
    @given(histories(min_len=1, max_len=60, max_size=5))
    def test_exclusion(self, data):
        for a in classify_all(data):
            assert not {"A6", "B6"} <= set(a.groups)
            assert not {"A13", "B13"} <= set(a.groups)

    @settings(max_examples=300, deadline=None)
    @given(histories(min_len=1, max_len=60, max_size=5))
    def test_b13_implies_a6_or_b6(self, data):
        for a in classify_all(data):
            if "B13" in a.groups:
                assert "A6" in a.groups or "B6" in a.groups

    @settings(max_examples=100, deadline=None)
    @given(histories(max_len=40, max_size=6), st.floats(0, 1), st.floats(0, 1))
    def test_lower_q_min_never_shrinks(self, data, q1, q2):
        lo, hi = sorted((q1, q2))
        strict = {a.key for a in classify_all(data, [GroupSpec.intermittent("A", 6, hi)])}
        loose = {a.key for a in classify_all(data, [GroupSpec.intermittent("A", 6, lo)])}
        assert strict <= loose

    @settings(max_examples=100, deadline=None)
    @given(histories(max_len=40, max_size=6), st.floats(0, 1), st.floats(0, 1))
    def test_higher_dip_never_shrinks(self, data, d1, d2):
        lo, hi = sorted((d1, d2))
        a = GroupSpec.intermittent("A", 6, 0.5)

        def members(dip):
            return {x.key for x in classify_all(data, [a, GroupSpec.consistent("B", 6, dip)])
                    if "B" in x.groups}

        assert members(lo) <= members(hi)

    @settings(max_examples=100, deadline=None)
    @given(histories(max_len=40, max_size=6))
    def test_flat_histories_never_intermittent(self, data):
        from intermittence import windowed_scores
        for a in classify_all(data):
            h = next(h for h in data if h.key == a.key)
            for label in a.groups:
                if label.startswith("A"):
                    assert windowed_scores(h, int(label[1:])).q.max() > 0
                else:
                    assert windowed_scores(h, int(label[1:])).p.min() < 0.2

    @given(histories(max_len=30))
    def test_deterministic(self, data):
        first = [a.to_dict() for a in classify_all(data)]
        assert first == [a.to_dict() for a in classify_all(list(reversed(data)))]


class TestOverlap:
    def test_a6_b13(self):
        o = group_overlap([GroupAssignment(TestCaseKey("s", "t", "p"), ("A6", "B13"), {})],
                          ["A6", "A13", "B6", "B13"])
        assert o["A6", "B13"] == o["B13", "A6"] == 1
        assert o["A6", "A6"] == 1 and o["A6", "B6"] == 0
        assert o.exactly_k == {1: 0, 2: 1, 3: 0, 4: 0}

    def test_disjoint(self):
        a = [GroupAssignment(TestCaseKey("s", str(i), "p"), (g,), {})
             for i, g in enumerate(["A6", "A13", "B6"])]
        o = group_overlap(a)
        assert np.array_equal(o.counts, np.eye(3, dtype=int))
        assert o.exactly_k == {1: 3, 2: 0, 3: 0}

    def test_symmetric_from_classification(self):
        data = [hist(s, str(i)) for i, s in enumerate(
            [FLIP_THEN_PASS, FAIL_THEN_PASS, "F" * 12 + "P" * 20, "P" * 30])]
        o = group_overlap(classify_all(data), [s.label for s in DEFAULT_SPECS])
        assert np.array_equal(o.counts, o.counts.T)
        assert o["A6", "A13"] == 1 and o["B6", "B13"] == 1


class TestPopulationSummary:
    def test_three_tests(self):
        s = population_summary([hist("PPPP", "a"), hist("PFPF", "b"), hist("FFFF", "c")])
        assert s.p.mean == pytest.approx(0.5) and s.q.mean == pytest.approx(1 / 3)
        assert s.fraction_nonzero_q == pytest.approx(1 / 3)
        assert s.n_tests == 3 and not s.empty

    def test_single_all_pass(self):
        s = population_summary([hist("P" * 20)])
        assert s.p.min == s.p.max == s.p.mean == s.p.median == 1.0
        assert s.p.std == 0.0

    def test_excludes_single_execution(self):
        s = population_summary([hist("F", "one"), hist("PP", "two")])
        assert s.excluded_single_execution_tests == 1
        assert s.n_tests == 1 and s.p.mean == 1.0
        # verdict distribution counts every verdict, including the excluded test's
        assert s.verdict_counts == {"pass": 2, "fail": 1, "invalid": 0}

    def test_empty(self):
        s = population_summary([])
        assert s.empty and s.n_tests == 0
        assert sum(s.verdict_counts.values()) == 0

    def test_fractions_sum_to_one(self):
        s = population_summary([hist("PFIPPF", "a"), hist("IIP", "b")])
        assert sum(s.verdict_fractions.values()) == pytest.approx(1.0)
        assert s.verdict_fractions["invalid"] == pytest.approx(3 / 9)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.lists(st.integers(0, 2), min_size=1, max_size=30), min_size=1, max_size=15))
    def test_matches_naive(self, seqs):
        data = [VerdictHistory.from_verdicts(("s", str(i), "p"), x) for i, x in enumerate(seqs)]
        s = population_summary(data)
        if all(len(x) < 2 for x in seqs):
            assert s.empty
            return
        ref = naive_population(seqs)
        for name in ("mean", "median", "std", "min", "max"):
            assert getattr(s.p, name) == pytest.approx(ref[f"p_{name}"], abs=1e-12)
            assert getattr(s.q, name) == pytest.approx(ref[f"q_{name}"], abs=1e-12)
        assert s.fraction_nonzero_q == pytest.approx(ref["nonzero_q"])
        assert s.excluded_single_execution_tests == ref["excluded"]

    def test_classifiable_counts(self):
        data = [hist("P" * 5, "a"), hist("P" * 6, "b"), hist("P" * 13, "c")]
        assert classifiable_counts(data) == {"A6": 2, "A13": 1, "B6": 2, "B13": 1}
