"""Verdict-record files: parsing, export, simple queries, and revision run lengths.

Two line formats are supported, both UTF-8 with LF line endings:

* ``jsonl``: one object per line with keys night, system, script, params, verdict
* ``csv``: header ``night,system,script,params,verdict`` followed by rows

Revision logs use the same two formats with columns night, sw_revision, tw_revision.
"""

from __future__ import annotations

import bisect
import csv
import datetime as dt
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

from .errors import ConflictingVerdict, EmptyLog, ParseError
from .verdicts import TestCaseKey, Verdict, VerdictHistory, VerdictRecord

RECORD_FIELDS = ("night", "system", "script", "params", "verdict")
REVISION_FIELDS = ("night", "sw_revision", "tw_revision")
FORMATS = ("jsonl", "csv")


@dataclass(frozen=True)
class Dataset:
    histories: dict[TestCaseKey, VerdictHistory]
    nights: tuple[dt.date, ...]
    provenance: str = ""

    @classmethod
    def from_histories(cls, histories: Iterable[VerdictHistory], provenance: str = "") -> "Dataset":
        by_key = {}
        for h in histories:
            if h.key in by_key:
                raise ValueError(f"duplicate history for {h.key}")
            by_key[h.key] = h
        ordered = {k: by_key[k] for k in sorted(by_key)}
        nights = sorted({n for h in ordered.values() for n in h.nights})
        return cls(ordered, tuple(nights), provenance)

    def __len__(self) -> int:
        return len(self.histories)

    @property
    def n_verdicts(self) -> int:
        return sum(len(h) for h in self.histories.values())

    def records(self) -> Iterator[VerdictRecord]:
        """All records, sorted by key then night."""
        for h in self.histories.values():
            yield from h.records()


def _decode_lines(source) -> Iterator[tuple[int, str]]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    for lineno, raw in enumerate(source, 1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise ParseError(lineno, "not valid UTF-8") from None
        line = raw.rstrip("\n").rstrip("\r")
        if lineno == 1:
            line = line.lstrip("\ufeff")
        yield lineno, line


def _rows(source, fmt: str, fields: tuple[str, ...]) -> Iterator[tuple[int, dict]]:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    lines = _decode_lines(source)
    if fmt == "jsonl":
        for lineno, line in lines:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(lineno, "record is not a JSON object")
            missing = [f for f in fields if f not in obj]
            if missing:
                raise ParseError(lineno, f"missing fields {missing}")
            if any(not isinstance(obj[f], str) for f in fields):
                raise ParseError(lineno, "field values must be strings")
            yield lineno, obj
        return
    header_seen = False
    for lineno, line in lines:
        if not line.strip():
            continue
        try:
            (row,) = csv.reader([line])
        except (csv.Error, ValueError) as exc:
            raise ParseError(lineno, f"malformed CSV: {exc}") from None
        if not header_seen:
            if tuple(row) != fields:
                raise ParseError(lineno, f"expected header {','.join(fields)}")
            header_seen = True
            continue
        if len(row) != len(fields):
            raise ParseError(lineno, f"expected {len(fields)} columns, got {len(row)}")
        yield lineno, dict(zip(fields, row))


def _night(lineno: int, text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ParseError(lineno, f"bad ISO-8601 date {text!r}") from None


def ingest(source: IO | bytes, format: str = "jsonl", provenance: str = "") -> Dataset:
    """Load verdict records; identical duplicates collapse, contradictory ones raise."""
    table: dict[TestCaseKey, dict[dt.date, int]] = {}
    for lineno, row in _rows(source, format, RECORD_FIELDS):
        night = _night(lineno, row["night"])
        try:
            verdict = Verdict.parse(row["verdict"])
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        key = TestCaseKey(row["system"], row["script"], row["params"])
        nights = table.setdefault(key, {})
        prior = nights.setdefault(night, int(verdict))
        if prior != verdict:
            raise ConflictingVerdict(key, night)
    histories = []
    for key, nights in table.items():
        ordered = sorted(nights)
        histories.append(VerdictHistory(key, tuple(ordered),
                                        np.array([nights[n] for n in ordered], dtype=np.int8)))
    return Dataset.from_histories(histories, provenance)


def guess_format(path) -> str:
    suffix = Path(path).suffix.lower()
    return "csv" if suffix == ".csv" else "jsonl"


def ingest_path(path, format: str | None = None) -> Dataset:
    with open(path, "rb") as fh:
        return ingest(fh, format or guess_format(path), provenance=str(path))


def merge(datasets: Iterable[Dataset]) -> Dataset:
    """Union of datasets with the same conflict rules as ingesting one concatenated file."""
    buf = io.BytesIO()
    provenance = []
    for d in datasets:
        buf.write(export(d, "jsonl"))
        provenance.append(d.provenance)
    buf.seek(0)
    return ingest(buf, "jsonl", provenance="+".join(p for p in provenance if p))


def _record_row(r: VerdictRecord) -> tuple[str, ...]:
    return (r.night.isoformat(), r.key.test_system, r.key.test_script,
            r.key.parameter_setting, r.verdict.token)


def _dump(rows: Iterable[tuple[str, ...]], fields: tuple[str, ...], format: str) -> bytes:
    if format == "jsonl":
        out = io.StringIO()
        for row in rows:
            out.write(json.dumps(dict(zip(fields, row)), ensure_ascii=False))
            out.write("\n")
    elif format == "csv":
        out = io.StringIO(newline="")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(fields)
        writer.writerows(rows)
    else:
        raise ValueError(f"unknown format {format!r}")
    return out.getvalue().encode("utf-8")


def export(dataset: Dataset, format: str = "jsonl") -> bytes:
    """Serialize all records sorted by key then night."""
    return _dump((_record_row(r) for r in dataset.records()), RECORD_FIELDS, format)


def write_dataset(dataset: Dataset, path, format: str | None = None) -> None:
    Path(path).write_bytes(export(dataset, format or guess_format(path)))


def query_history(dataset: Dataset, key) -> VerdictHistory:
    key = TestCaseKey(*key)
    found = dataset.histories.get(key)
    return VerdictHistory.empty(key) if found is None else found


def query_night(dataset: Dataset, night: dt.date) -> list[VerdictRecord]:
    """Records executed on ``night``, sorted by key."""
    out = []
    for h in dataset.histories.values():
        i = bisect.bisect_left(h.nights, night)
        if i < len(h.nights) and h.nights[i] == night:
            out.append(VerdictRecord(h.key, night, Verdict(int(h.codes[i]))))
    return out


class Revision(NamedTuple):
    night: dt.date
    sw_revision: str
    tw_revision: str


@dataclass(frozen=True)
class RevisionLog:
    entries: tuple[Revision, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(Revision(*e) for e in self.entries))
        for a, b in zip(self.entries, self.entries[1:]):
            if not a.night < b.night:
                raise ValueError(f"revision log nights not strictly ascending at {b.night}")

    def __len__(self) -> int:
        return len(self.entries)


def ingest_revisions(source: IO | bytes, format: str = "jsonl") -> RevisionLog:
    entries = {}
    for lineno, row in _rows(source, format, REVISION_FIELDS):
        night = _night(lineno, row["night"])
        if night in entries:
            raise ParseError(lineno, f"night {night} appears twice in the revision log")
        entries[night] = Revision(night, row["sw_revision"], row["tw_revision"])
    return RevisionLog(tuple(entries[n] for n in sorted(entries)))


def export_revisions(log: RevisionLog, format: str = "jsonl") -> bytes:
    return _dump(((e.night.isoformat(), e.sw_revision, e.tw_revision) for e in log.entries),
                 REVISION_FIELDS, format)


def run_lengths(values: Iterable) -> list[int]:
    """Lengths of maximal blocks of equal consecutive values."""
    runs: list[int] = []
    prev = object()
    for v in values:
        if runs and v == prev:
            runs[-1] += 1
        else:
            runs.append(1)
        prev = v
    return runs


@dataclass(frozen=True)
class RunStats:
    runs: tuple[int, ...]
    min: int
    max: int
    mean: float
    median: float      # mean of the two central values for an even count
    std: float         # population
    std_sample: float  # nan for a single run

    @classmethod
    def of(cls, runs: list[int]) -> "RunStats":
        x = np.asarray(runs, dtype=float)
        return cls(tuple(runs), int(x.min()), int(x.max()), float(x.mean()), float(np.median(x)),
                   float(x.std()), float(x.std(ddof=1)) if x.size > 1 else float("nan"))


@dataclass(frozen=True)
class RunLengthStats:
    sw: RunStats
    tw: RunStats
    both: RunStats


def run_length_stats(log: RevisionLog) -> RunLengthStats:
    """Nights in a row with the same SW, the same TW, and the same (SW, TW) pair.

    Runs follow consecutive log entries; nights absent from the log do not break a run.
    """
    if not log.entries:
        raise EmptyLog("run-length statistics need at least one night")
    sw = [e.sw_revision for e in log.entries]
    tw = [e.tw_revision for e in log.entries]
    return RunLengthStats(RunStats.of(run_lengths(sw)), RunStats.of(run_lengths(tw)),
                          RunStats.of(run_lengths(zip(sw, tw))))
