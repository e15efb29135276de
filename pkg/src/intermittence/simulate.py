"""Synthetic verdict histories drawn from known transition matrices.

Sampling uses numpy's PCG64 bit generator and inverse-CDF lookup over the
fixed state order (pass, fail, invalid).  Each history gets its own generator
seeded from ``(seed, key)``, so datasets are reproducible per implementation.
"""

from __future__ import annotations

import datetime as dt
import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidModel, NotErgodic
from .verdicts import DEFAULT_START, N_STATES, TestCaseKey, Verdict, VerdictHistory

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"
ROW_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Row-stochastic matrix ``m[i, j] = P(next = j | current = i)`` plus a start state."""

    m: np.ndarray
    initial_state: Verdict = Verdict.PASS

    def __post_init__(self):
        try:
            m = np.array(self.m, dtype=float).reshape(N_STATES, N_STATES)
        except ValueError:
            raise InvalidModel("transition matrix must be 3x3") from None
        if not np.isfinite(m).all() or (m < 0).any() or (m > 1).any():
            raise InvalidModel("transition probabilities must lie in [0, 1]")
        if not np.allclose(m.sum(axis=1), 1.0, rtol=0, atol=ROW_TOLERANCE):
            raise InvalidModel(f"rows must sum to 1, got {m.sum(axis=1).tolist()}")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "initial_state", Verdict(self.initial_state))

    def __eq__(self, other):
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return self.initial_state == other.initial_state and np.array_equal(self.m, other.m)

    __hash__ = None

    @classmethod
    def two_state(cls, stay_pass: float, stay_fail: float, initial=Verdict.PASS):
        """Pass/fail chain with the invalid state unreachable (invalid returns to pass)."""
        return cls([[stay_pass, 1 - stay_pass, 0],
                    [1 - stay_fail, stay_fail, 0],
                    [1, 0, 0]], initial)

    def with_initial(self, state) -> "TransitionModel":
        return TransitionModel(self.m, Verdict(state))

    def to_dict(self) -> dict:
        return {"matrix": self.m.tolist(), "initial": self.initial_state.token}


def _row(target: int) -> list[float]:
    row = [0.0] * N_STATES
    row[target] = 1.0
    return row


ALWAYS_PASS = TransitionModel([_row(0)] * 3, Verdict.PASS)
ALWAYS_FAIL = TransitionModel([_row(1)] * 3, Verdict.FAIL)
ALWAYS_INVALID = TransitionModel([_row(2)] * 3, Verdict.INVALID)
# pass <-> fail, invalid falls back to pass
FLIP = TransitionModel([_row(1), _row(0), _row(0)], Verdict.PASS)
# pass <-> invalid, fail falls back to pass
FLIP_INVALID = TransitionModel([_row(2), _row(0), _row(0)], Verdict.PASS)
# pass -> fail -> invalid -> pass
CYCLE = TransitionModel([_row(1), _row(2), _row(0)], Verdict.PASS)

NAMED_MODELS = {
    "pass": ALWAYS_PASS,
    "fail": ALWAYS_FAIL,
    "invalid": ALWAYS_INVALID,
    "flip": FLIP,
    "flip_invalid": FLIP_INVALID,
    "cycle": CYCLE,
}


def make_rng(seed, key: TestCaseKey | None = None) -> np.random.Generator:
    """Generator seeded by ``seed`` alone, or by ``(seed, key)`` for per-history streams."""
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    if key is not None:
        digest = hashlib.sha256("\x1f".join(key).encode("utf-8")).digest()
        entropy += [int.from_bytes(digest[i:i + 8], "little") for i in range(0, 32, 8)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _walk(model: TransitionModel, first: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """``first`` followed by ``length - 1`` sampled steps."""
    cdf = np.cumsum(model.m, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(length - 1)
    # successor of every state for each uniform draw; then follow the chain
    nxt = [np.searchsorted(cdf[s], u, side="right").tolist() for s in range(N_STATES)]
    out = [first] * length
    state = first
    for k in range(length - 1):
        state = nxt[state][k]
        out[k + 1] = state
    return np.array(out, dtype=np.int8)


def generate_sequence(model: TransitionModel, length: int, seed) -> np.ndarray:
    """Verdict codes of one forward run starting at ``model.initial_state``."""
    if length < 1:
        raise ValueError("length must be at least 1")
    return _walk(model, int(model.initial_state), length, make_rng(seed))


def _reachable(m: np.ndarray, start: int) -> list[int]:
    seen, stack = {start}, [start]
    while stack:
        s = stack.pop()
        for t in np.flatnonzero(m[s] > 0):
            if int(t) not in seen:
                seen.add(int(t))
                stack.append(int(t))
    return sorted(seen)


def stationary_distribution(model: TransitionModel) -> np.ndarray:
    """Stationary vector of the chain restricted to states reachable from the start.

    Periodic chains are accepted as long as the reachable part is irreducible.
    """
    m = model.m
    states = _reachable(m, int(model.initial_state))
    for s in states:
        if set(_reachable(m, s)) != set(states):
            raise NotErgodic(f"state {Verdict(s).token} cannot reach every reachable state")
    sub = m[np.ix_(states, states)]
    k = len(states)
    a = np.vstack([sub.T - np.eye(k), np.ones(k)])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi_sub, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.zeros(N_STATES)
    pi[states] = np.clip(pi_sub, 0.0, None)
    return pi / pi.sum()


def expected_q(model: TransitionModel) -> float:
    """Long-run fraction of transitions that change state."""
    pi = stationary_distribution(model)
    return float(1.0 - pi @ np.diag(model.m))


@dataclass(frozen=True)
class ScenarioSpec:
    """Piecewise-stationary history: consecutive phases, each with its own model."""

    name: str
    phases: tuple[tuple[int, TransitionModel], ...]
    expected_groups: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple((int(n), m) for n, m in self.phases))
        object.__setattr__(self, "expected_groups", frozenset(self.expected_groups))
        if not self.phases or any(n < 1 for n, _ in self.phases):
            raise InvalidModel(f"{self.name}: phases need positive lengths")
        if self.length < 2:
            raise InvalidModel(f"{self.name}: total length must be at least 2")

    @property
    def length(self) -> int:
        return sum(n for n, _ in self.phases)

    def key(self, system: str = "sim") -> TestCaseKey:
        return TestCaseKey(system, self.name, "default")


def generate_scenario(spec: ScenarioSpec, key: TestCaseKey, seed,
                      start: dt.date = DEFAULT_START) -> VerdictHistory:
    """One history, phase after phase; a new phase continues from the previous last state."""
    rng = make_rng(seed)
    parts = []
    for i, (length, model) in enumerate(spec.phases):
        if i == 0:
            parts.append(_walk(model, int(model.initial_state), length, rng))
        else:
            last = int(parts[-1][-1])
            parts.append(_walk(model, last, length + 1, rng)[1:])
    return VerdictHistory.from_verdicts(key, np.concatenate(parts), start)


@dataclass(frozen=True)
class SyntheticDataset:
    seed: int
    algorithm: str
    histories: dict[TestCaseKey, VerdictHistory]
    ground_truth: dict[TestCaseKey, frozenset[str]] = field(default_factory=dict)


def generate_dataset(scenarios: Sequence[ScenarioSpec], seed: int, copies: int = 1,
                     systems: Sequence[str] | None = None,
                     start: dt.date = DEFAULT_START) -> SyntheticDataset:
    """Realize every scenario ``copies`` times, each on its own test system key."""
    if systems is None:
        systems = [f"sys{i:02d}" for i in range(copies)]
    histories, truth = {}, {}
    for system in systems:
        for spec in scenarios:
            key = spec.key(system)
            if key in histories:
                raise InvalidModel(f"duplicate scenario name {spec.name!r}")
            histories[key] = generate_scenario(spec, key, make_rng(seed, key), start)
            truth[key] = spec.expected_groups
    return SyntheticDataset(int(seed), RNG_ALGORITHM, histories, truth)


def model_from_config(d) -> TransitionModel:
    if isinstance(d, str):
        try:
            return NAMED_MODELS[d]
        except KeyError:
            raise InvalidModel(f"unknown model name {d!r}") from None
    if not isinstance(d, Mapping) or "matrix" not in d:
        raise InvalidModel(f"model must be a name or a table with 'matrix', got {d!r}")
    try:
        initial = Verdict.parse(d.get("initial", "pass"))
    except ValueError as exc:
        raise InvalidModel(str(exc)) from None
    return TransitionModel(d["matrix"], initial)


def scenarios_from_config(doc: Mapping) -> list[ScenarioSpec]:
    """Parse ``[[scenario]]`` tables: name, expected_groups, and ``[[scenario.phase]]`` entries."""
    out = []
    for entry in doc.get("scenario", []):
        try:
            phases = [(int(p["length"]), model_from_config(p["model"])) for p in entry["phase"]]
            out.append(ScenarioSpec(str(entry["name"]), tuple(phases),
                                    frozenset(entry.get("expected_groups", []))))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidModel(f"bad scenario entry {entry.get('name', '?')!r}: {exc}") from None
    return out


def bundled_scenarios() -> list[ScenarioSpec]:
    """The scenario suite shipped with the package, with planted ground-truth groups."""
    from importlib import resources

    from .config import load_toml_text

    text = resources.files("intermittence").joinpath("data/scenarios.toml").read_text("utf-8")
    return scenarios_from_config(load_toml_text(text))
