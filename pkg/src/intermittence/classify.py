"""Selection of intermittently failing (A) and consistently failing (B) test cases.

Both kinds require the test to end up passing: p of the last full window must
reach ``p_final_min``.  An intermittent group additionally needs some window
with ``q >= q_min``; a consistent group needs some window with ``p < p_dip_max``
and excludes tests already in an intermittent group of the same window size.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, MissingExclusionPartner, WindowTooSmall
from .verdicts import TestCaseKey, Verdict, VerdictHistory, windowed_scores


class GroupKind(str, enum.Enum):
    INTERMITTENT = "intermittent"
    CONSISTENT = "consistent"


@dataclass(frozen=True)
class GroupSpec:
    label: str
    kind: GroupKind
    window_size: int
    p_final_min: float = 0.96
    q_min: float | None = None
    p_dip_max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GroupKind(self.kind))
        if self.window_size < 2:
            raise WindowTooSmall(f"{self.label}: window size must be at least 2")
        if self.kind is GroupKind.INTERMITTENT:
            if self.q_min is None or self.p_dip_max is not None:
                raise ConfigError(f"{self.label}: intermittent groups take q_min and no p_dip_max")
        elif self.p_dip_max is None or self.q_min is not None:
            raise ConfigError(f"{self.label}: consistent groups take p_dip_max and no q_min")
        for name in ("q_min", "p_dip_max", "p_final_min"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ConfigError(f"{self.label}: {name}={value} outside [0, 1]")

    @classmethod
    def intermittent(cls, label, window_size, q_min, p_final_min=0.96):
        return cls(label, GroupKind.INTERMITTENT, window_size, p_final_min, q_min=q_min)

    @classmethod
    def consistent(cls, label, window_size, p_dip_max, p_final_min=0.96):
        return cls(label, GroupKind.CONSISTENT, window_size, p_final_min, p_dip_max=p_dip_max)

    def to_dict(self) -> dict:
        d = {"label": self.label, "kind": self.kind.value, "window": self.window_size}
        if self.q_min is not None:
            d["q_min"] = self.q_min
        if self.p_dip_max is not None:
            d["p_dip_max"] = self.p_dip_max
        d["p_final_min"] = self.p_final_min
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "GroupSpec":
        unknown = set(d) - {"label", "kind", "window", "q_min", "p_dip_max", "p_final_min"}
        if unknown:
            raise ConfigError(f"unknown group keys: {sorted(unknown)}")
        try:
            return cls(str(d["label"]), GroupKind(d["kind"]), int(d["window"]),
                       float(d.get("p_final_min", 0.96)),
                       q_min=None if d.get("q_min") is None else float(d["q_min"]),
                       p_dip_max=None if d.get("p_dip_max") is None else float(d["p_dip_max"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad group spec {dict(d)!r}: {exc}") from None


A6 = GroupSpec.intermittent("A6", 6, q_min=0.5)
A13 = GroupSpec.intermittent("A13", 13, q_min=0.35)
B6 = GroupSpec.consistent("B6", 6, p_dip_max=0.2)
B13 = GroupSpec.consistent("B13", 13, p_dip_max=0.2)
DEFAULT_SPECS = (A6, A13, B6, B13)


@dataclass(frozen=True)
class Evidence:
    """First window meeting the dip/spike condition, and the final-window p."""

    trigger_index: int
    trigger_score: float
    final_p: float


@dataclass(frozen=True)
class Membership:
    member: bool
    reason: str
    evidence: Evidence | None = None

    def __bool__(self) -> bool:
        return self.member


def classify_one(history: VerdictHistory, spec: GroupSpec,
                 partners: Sequence[GroupSpec] = ()) -> Membership:
    """Decide membership of one history in one group.

    ``partners`` are the intermittent specs of the same window size a consistent
    spec is excluded against; at least one is required for a consistent spec.
    """
    if spec.kind is GroupKind.CONSISTENT:
        partners = [s for s in partners
                    if s.kind is GroupKind.INTERMITTENT and s.window_size == spec.window_size]
        if not partners:
            raise MissingExclusionPartner(
                f"{spec.label} needs an intermittent group with window {spec.window_size}")
    series = windowed_scores(history, spec.window_size)
    return _decide(series, spec, partners)


def _decide(series, spec: GroupSpec, partners=()) -> Membership:
    if len(series) == 0:
        return Membership(False, "insufficient_data")
    final_p = float(series.p[-1])
    if spec.kind is GroupKind.INTERMITTENT:
        hits = np.flatnonzero(series.q >= spec.q_min)
        score = series.q
    else:
        for partner in partners:
            if _decide(series, partner).member:
                return Membership(False, f"excluded_by_{partner.label}")
        hits = np.flatnonzero(series.p < spec.p_dip_max)
        score = series.p
    if hits.size == 0:
        return Membership(False, "no_trigger")
    evidence = Evidence(int(series.end_index[hits[0]]), float(score[hits[0]]), final_p)
    if final_p < spec.p_final_min:
        return Membership(False, "final_p_too_low", evidence)
    return Membership(True, "member", evidence)


@dataclass(frozen=True)
class GroupAssignment:
    key: TestCaseKey
    groups: tuple[str, ...]
    evidence: dict[str, Evidence] = field(compare=False)

    def to_dict(self) -> dict:
        return {
            "system": self.key.test_system,
            "script": self.key.test_script,
            "params": self.key.parameter_setting,
            "groups": list(self.groups),
            "evidence": {label: {"window_end_index": e.trigger_index,
                                 "trigger_score": e.trigger_score,
                                 "final_p": e.final_p}
                         for label, e in self.evidence.items()},
        }


def validate_specs(specs: Sequence[GroupSpec]) -> dict[str, list[GroupSpec]]:
    """Check labels are distinct and every consistent spec has an exclusion partner.

    Returns the partners of each consistent spec, keyed by label.
    """
    labels = [s.label for s in specs]
    dupes = sorted(label for label, n in Counter(labels).items() if n > 1)
    if dupes:
        raise ConfigError(f"duplicate group labels: {dupes}")
    partners = {}
    for spec in specs:
        if spec.kind is GroupKind.CONSISTENT:
            found = [s for s in specs if s.kind is GroupKind.INTERMITTENT
                     and s.window_size == spec.window_size]
            if not found:
                raise MissingExclusionPartner(
                    f"{spec.label} needs an intermittent group with window {spec.window_size}")
            partners[spec.label] = found
    return partners


def _histories(dataset) -> Iterable[VerdictHistory]:
    return dataset.histories.values() if hasattr(dataset, "histories") else dataset


def classify_all(dataset, specs: Sequence[GroupSpec] = DEFAULT_SPECS) -> list[GroupAssignment]:
    """Classify every history; returns assignments for tests in at least one group, sorted by key."""
    specs = list(specs)
    partners = validate_specs(specs)
    windows = sorted({s.window_size for s in specs})
    # intermittent before consistent within a window size
    ordered = sorted(specs, key=lambda s: (s.window_size, s.kind is GroupKind.CONSISTENT))
    out = []
    for history in sorted(_histories(dataset), key=lambda h: h.key):
        series = {w: windowed_scores(history, w) for w in windows}
        member = {}
        for spec in ordered:
            m = _decide(series[spec.window_size], spec, partners.get(spec.label, ()))
            if m.member:
                member[spec.label] = m.evidence
        if member:
            labels = tuple(s.label for s in specs if s.label in member)
            out.append(GroupAssignment(history.key, labels, {k: member[k] for k in labels}))
    return out


def classifiable_counts(dataset, specs: Sequence[GroupSpec] = DEFAULT_SPECS) -> dict[str, int]:
    """Number of histories long enough to hold one full window, per group label."""
    lengths = np.array([len(h) for h in _histories(dataset)], dtype=np.int64)
    return {s.label: int((lengths >= s.window_size).sum()) for s in specs}


@dataclass(frozen=True)
class GroupOverlap:
    labels: tuple[str, ...]
    counts: np.ndarray      # symmetric; diagonal holds group sizes
    exactly_k: dict[int, int]

    def __getitem__(self, pair) -> int:
        a, b = pair
        return int(self.counts[self.labels.index(a), self.labels.index(b)])

    def to_dict(self) -> dict:
        return {"labels": list(self.labels),
                "counts": self.counts.tolist(),
                "exactly_k": {str(k): v for k, v in self.exactly_k.items()}}


def group_overlap(assignments: Iterable[GroupAssignment],
                  labels: Sequence[str] | None = None) -> GroupOverlap:
    assignments = list(assignments)
    if labels is None:
        seen = {}
        for a in assignments:
            for g in a.groups:
                seen.setdefault(g)
        labels = list(seen)
    labels = tuple(labels)
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    exactly_k = {k: 0 for k in range(1, len(labels) + 1)}
    for a in assignments:
        idx = [index[g] for g in a.groups]
        for i in idx:
            for j in idx:
                counts[i, j] += 1
        if idx:
            exactly_k[len(idx)] += 1
    return GroupOverlap(labels, counts, exactly_k)


@dataclass(frozen=True)
class Stats:
    min: float
    max: float
    mean: float
    median: float
    std: float          # population (divide by n)
    std_sample: float   # divide by n - 1; nan for a single value

    def to_dict(self) -> dict:
        """Plain dict with NaN mapped to None for JSON output."""
        return {k: (None if v != v else v) for k, v in vars(self).items()}

    @classmethod
    def of(cls, values) -> "Stats":
        x = np.asarray(values, dtype=float)
        if x.size == 0:
            nan = float("nan")
            return cls(nan, nan, nan, nan, nan, nan)
        return cls(float(x.min()), float(x.max()), float(x.mean()), float(np.median(x)),
                   float(x.std()), float(x.std(ddof=1)) if x.size > 1 else float("nan"))


@dataclass(frozen=True)
class PopulationSummary:
    empty: bool
    n_tests: int                    # tests scored (two or more executions)
    excluded_single_execution_tests: int
    p: Stats
    q: Stats
    executions_per_test: Stats
    fraction_nonzero_q: float
    verdict_counts: dict[str, int]
    verdict_fractions: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "empty": self.empty,
            "n_tests": self.n_tests,
            "excluded_single_execution_tests": self.excluded_single_execution_tests,
            "p": self.p.to_dict(), "q": self.q.to_dict(),
            "executions_per_test": self.executions_per_test.to_dict(),
            "fraction_nonzero_q": self.fraction_nonzero_q,
            "verdict_counts": self.verdict_counts,
            "verdict_fractions": self.verdict_fractions,
        }


def population_summary(dataset) -> PopulationSummary:
    ps, qs, lengths = [], [], []
    verdicts = np.zeros(len(Verdict), dtype=np.int64)
    excluded = 0
    for h in _histories(dataset):
        n = len(h)
        if n == 0:
            continue
        verdicts += np.bincount(h.codes, minlength=len(Verdict))
        if n < 2:
            excluded += 1
            continue
        c = h.codes
        qs.append(np.count_nonzero(c[1:] != c[:-1]) / (n - 1))
        ps.append(np.count_nonzero(c == Verdict.PASS) / n)
        lengths.append(n)
    total = int(verdicts.sum())
    counts = {v.token: int(verdicts[v]) for v in Verdict}
    fractions = {v.token: (int(verdicts[v]) / total if total else 0.0) for v in Verdict}
    qs_arr = np.asarray(qs)
    return PopulationSummary(
        empty=not ps,
        n_tests=len(ps),
        excluded_single_execution_tests=excluded,
        p=Stats.of(ps), q=Stats.of(qs), executions_per_test=Stats.of(lengths),
        fraction_nonzero_q=float(np.count_nonzero(qs_arr) / qs_arr.size) if qs else 0.0,
        verdict_counts=counts, verdict_fractions=fractions,
    )
