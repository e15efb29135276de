"""Verdict sequences and the transition-counting scores computed over them.

A test case history is treated as the observation stream of a three-state
Markov chain (pass, fail, invalid).  Transitions are counted between
consecutive *executions*; calendar gaps between nights are ignored.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import EmptyWindow, NoTransitions, WindowTooSmall

N_STATES = 3
DEFAULT_START = dt.date(2020, 1, 1)


class Verdict(enum.IntEnum):
    """Outcome of one execution. The integer value is the state index."""

    PASS = 0
    FAIL = 1
    INVALID = 2

    @property
    def token(self) -> str:
        return self.name.lower()

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def parse(cls, token: str) -> "Verdict":
        try:
            return _TOKENS[token]
        except KeyError:
            raise ValueError(f"unknown verdict {token!r}") from None


_TOKENS = {v.token: v for v in Verdict}
_LETTERS = {v.letter: v for v in Verdict}


def parse_letters(text: str) -> list[Verdict]:
    """``"FPPF"`` -> ``[FAIL, PASS, PASS, FAIL]``. Whitespace and commas are ignored."""
    out = []
    for ch in text.upper():
        if ch in " ,":
            continue
        try:
            out.append(_LETTERS[ch])
        except KeyError:
            raise ValueError(f"unknown verdict letter {ch!r}") from None
    return out


def to_letters(verdicts: Iterable[int]) -> str:
    return "".join(Verdict(int(v)).letter for v in verdicts)


class TestCaseKey(NamedTuple):
    """Identity of a test case: one script, with one parameter setting, on one test system."""

    test_system: str
    test_script: str
    parameter_setting: str

    def __str__(self) -> str:
        return f"{self.test_system}/{self.test_script}/{self.parameter_setting}"


# keep pytest from collecting the NamedTuple
TestCaseKey.__test__ = False


class VerdictRecord(NamedTuple):
    key: TestCaseKey
    night: dt.date
    verdict: Verdict


def _as_codes(verdicts: Sequence[int] | np.ndarray) -> np.ndarray:
    codes = np.asarray(verdicts, dtype=np.int8)
    if codes.ndim != 1:
        raise ValueError("verdict sequence must be one-dimensional")
    if codes.size and (codes.min() < 0 or codes.max() >= N_STATES):
        raise ValueError("verdict codes must be 0 (pass), 1 (fail) or 2 (invalid)")
    return codes


@dataclass(frozen=True, eq=False)
class VerdictHistory:
    """Ordered verdicts of one test case, one per night it was executed."""

    key: TestCaseKey
    nights: tuple[dt.date, ...]
    codes: np.ndarray = field(repr=False)

    def __post_init__(self):
        codes = _as_codes(self.codes)
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "nights", tuple(self.nights))
        if len(self.nights) != codes.size:
            raise ValueError("nights and verdicts differ in length")
        for a, b in zip(self.nights, self.nights[1:]):
            if not a < b:
                raise ValueError(f"nights of {self.key} are not strictly ascending: {a} >= {b}")

    @classmethod
    def from_verdicts(cls, key, verdicts, start: dt.date = DEFAULT_START) -> "VerdictHistory":
        """History with one execution per consecutive night beginning at ``start``."""
        if isinstance(verdicts, str):
            verdicts = parse_letters(verdicts)
        codes = _as_codes(verdicts)
        nights = tuple(start + dt.timedelta(days=i) for i in range(codes.size))
        return cls(TestCaseKey(*key), nights, codes)

    @classmethod
    def empty(cls, key) -> "VerdictHistory":
        return cls(TestCaseKey(*key), (), np.zeros(0, dtype=np.int8))

    def __len__(self) -> int:
        return self.codes.size

    def __eq__(self, other):
        if not isinstance(other, VerdictHistory):
            return NotImplemented
        return (self.key == other.key and self.nights == other.nights
                and np.array_equal(self.codes, other.codes))

    __hash__ = None

    @property
    def verdicts(self) -> tuple[Verdict, ...]:
        return tuple(Verdict(int(c)) for c in self.codes)

    @property
    def entries(self) -> list[tuple[dt.date, Verdict]]:
        return list(zip(self.nights, self.verdicts))

    def records(self) -> Iterator[VerdictRecord]:
        for night, v in zip(self.nights, self.codes):
            yield VerdictRecord(self.key, night, Verdict(int(v)))


@dataclass(frozen=True, eq=False)
class TransitionCounts:
    """Observed transition counts; ``n[i, j]`` counts adjacent pairs (i, j).

    Row and column order is (pass, fail, invalid).
    """

    n: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n, dtype=np.int64).reshape(N_STATES, N_STATES)
        if (n < 0).any():
            raise ValueError("transition counts must be non-negative")
        n.flags.writeable = False
        object.__setattr__(self, "n", n)

    def __eq__(self, other):
        if not isinstance(other, TransitionCounts):
            return NotImplemented
        return np.array_equal(self.n, other.n)

    __hash__ = None

    @property
    def total(self) -> int:
        return int(self.n.sum())

    @property
    def repeats(self) -> int:
        """Transitions that stay in the same state (the diagonal)."""
        return int(np.trace(self.n))

    @property
    def changes(self) -> int:
        return self.total - self.repeats

    def __getitem__(self, ij):
        i, j = ij
        return int(self.n[int(i), int(j)])


def count_transitions(window: Sequence[int] | np.ndarray) -> TransitionCounts:
    codes = _as_codes(window)
    if codes.size == 0:
        raise EmptyWindow("cannot count transitions in an empty window")
    flat = codes[:-1].astype(np.int64) * N_STATES + codes[1:]
    n = np.bincount(flat, minlength=N_STATES * N_STATES)
    return TransitionCounts(n)


def q_score(counts: TransitionCounts) -> Fraction:
    """Fraction of observed transitions that change state, as an exact rational."""
    total = counts.total
    if total == 0:
        raise NoTransitions("q-score is undefined for fewer than two verdicts")
    return 1 - Fraction(counts.repeats, total)


def p_score(window: Sequence[int] | np.ndarray) -> Fraction:
    """Fraction of pass verdicts; invalid counts as non-pass."""
    codes = _as_codes(window)
    if codes.size == 0:
        raise EmptyWindow("p-score of an empty window")
    return Fraction(int((codes == Verdict.PASS).sum()), int(codes.size))


class FullScores(NamedTuple):
    q: Fraction | None  # None when the history holds a single verdict
    p: Fraction


def full_sequence_scores(history: VerdictHistory | Sequence[int]) -> FullScores:
    codes = history.codes if isinstance(history, VerdictHistory) else _as_codes(history)
    p = p_score(codes)
    counts = count_transitions(codes)
    q = q_score(counts) if counts.total else None
    return FullScores(q, p)


@dataclass(frozen=True, eq=False)
class ScoreSeries:
    """Floating q- and p-scores, one point per full window sliding by one execution.

    Scores are stored as integer numerators: ``q = changes / (w - 1)`` and
    ``p = passes / w``, so exact values are always recoverable.
    """

    window_size: int
    history_length: int
    end_index: np.ndarray
    changes: np.ndarray
    passes: np.ndarray

    def __len__(self) -> int:
        return self.end_index.size

    @property
    def q(self) -> np.ndarray:
        return self.changes / (self.window_size - 1)

    @property
    def p(self) -> np.ndarray:
        return self.passes / self.window_size

    def exact(self, i: int) -> tuple[Fraction, Fraction]:
        return (Fraction(int(self.changes[i]), self.window_size - 1),
                Fraction(int(self.passes[i]), self.window_size))

    def points(self) -> Iterator[tuple[int, float, float]]:
        """Yield ``(window_end_index, q, p)`` in ascending order."""
        q, p = self.q, self.p
        for i in range(len(self)):
            yield int(self.end_index[i]), float(q[i]), float(p[i])


def windowed_scores(history: VerdictHistory | Sequence[int], w: int) -> ScoreSeries:
    if w < 2:
        raise WindowTooSmall(f"window size must be at least 2, got {w}")
    codes = history.codes if isinstance(history, VerdictHistory) else _as_codes(history)
    n = codes.size
    if n < w:
        empty = np.zeros(0, dtype=np.int64)
        return ScoreSeries(w, n, empty, empty, empty)
    changed = np.zeros(n, dtype=np.int64)
    changed[1:] = np.cumsum(codes[1:] != codes[:-1])
    passed = np.zeros(n + 1, dtype=np.int64)
    passed[1:] = np.cumsum(codes == Verdict.PASS)
    end = np.arange(w - 1, n)
    start = end - (w - 1)
    return ScoreSeries(w, n, end, changed[end] - changed[start], passed[end + 1] - passed[start])
