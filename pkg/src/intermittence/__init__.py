"""Intermittence metrics for nightly test verdict histories.

Transition counting over verdict sequences gives the q-score (fraction of
executions where the verdict changes) and the p-score (fraction of passes),
both over sliding windows.  On top of these sit group classification,
a seeded Markov simulator, file ingestion and SVG/table reports.
"""

from .classify import (
    A6, A13, B6, B13, DEFAULT_SPECS, GroupAssignment, GroupKind, GroupSpec, PopulationSummary,
    classify_all, classify_one, group_overlap, population_summary,
)
from .errors import (
    ConfigError, ConflictingVerdict, DataError, EmptyLog, EmptyWindow, IntermittenceError,
    InvalidModel, MissingExclusionPartner, NoTransitions, NotErgodic, ParseError, SeriesMismatch,
    UnknownCategory, WindowTooSmall,
)
from .simulate import (
    ScenarioSpec, TransitionModel, bundled_scenarios, expected_q, generate_dataset,
    generate_scenario, generate_sequence, stationary_distribution,
)
from .store import Dataset, RevisionLog, export, ingest, query_history, query_night, run_length_stats
from .verdicts import (
    ScoreSeries, TestCaseKey, TransitionCounts, Verdict, VerdictHistory, VerdictRecord,
    count_transitions, full_sequence_scores, p_score, q_score, windowed_scores,
)

__version__ = "0.1.0"

__all__ = sorted(
    name for name, obj in globals().items()
    if not name.startswith("_") and getattr(obj, "__module__", "").startswith(__name__ + ".")
)
