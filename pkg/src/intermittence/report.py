"""Timelines, heatmaps, population/group tables and root-cause ledgers.

Graphics are standalone SVG documents built as text, so output is byte-stable
for a given input.  Every graphic comes with a sidecar of line-delimited JSON
records holding the exact numbers drawn; the same numbers are attached to the
SVG elements as ``data-*`` attributes.

Palette (Okabe-Ito, distinguishable under common colour-vision deficiencies):
pass = bluish green circle, fail = vermillion cross, invalid = orange
triangle, not run = white cell with a grey diagonal.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

from .classify import GroupAssignment, GroupOverlap, PopulationSummary, Stats
from .errors import SeriesMismatch, UnknownCategory
from .verdicts import ScoreSeries, TestCaseKey, Verdict, VerdictHistory

VERDICT_COLOURS = {Verdict.PASS: "#009E73", Verdict.FAIL: "#D55E00", Verdict.INVALID: "#E69F00"}
CURVE_COLOURS = ("#0072B2", "#CC79A7", "#000000", "#56B4E9")
Q_DASH = "6,3"
P_DASH = "1.5,2.5"


def _num(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".") if x != int(x) else str(int(x))


class _Svg:
    def __init__(self, width: float, height: float, title: str):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" '
            f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}" '
            'font-family="sans-serif" font-size="10">',
            f"<title>{escape(title)}</title>",
            f'<rect x="0" y="0" width="{_num(width)}" height="{_num(height)}" fill="#FFFFFF"/>',
        ]

    def add(self, tag: str, text: str | None = None, **attrs) -> None:
        attr = "".join(f" {k.rstrip('_').replace('_', '-')}={quoteattr(str(v))}"
                       for k, v in attrs.items() if v is not None)
        if text is None:
            self.parts.append(f"<{tag}{attr}/>")
        else:
            self.parts.append(f"<{tag}{attr}>{escape(text)}</{tag}>")

    def raw(self, s: str) -> None:
        self.parts.append(s)

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>", ""])


def _mark(svg: _Svg, v: Verdict, cx: float, cy: float, r: float, **data) -> None:
    colour = VERDICT_COLOURS[v]
    if v is Verdict.PASS:
        svg.add("circle", cx=_num(cx), cy=_num(cy), r=_num(r), fill=colour, **data)
    elif v is Verdict.FAIL:
        d = (f"M{_num(cx - r)},{_num(cy - r)} L{_num(cx + r)},{_num(cy + r)} "
             f"M{_num(cx - r)},{_num(cy + r)} L{_num(cx + r)},{_num(cy - r)}")
        svg.add("path", d=d, stroke=colour, stroke_width="2", fill="none", **data)
    else:
        pts = f"{_num(cx)},{_num(cy - r)} {_num(cx + r)},{_num(cy + r)} {_num(cx - r)},{_num(cy + r)}"
        svg.add("polygon", points=pts, fill=colour, **data)


def _jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


@dataclass(frozen=True)
class Graphic:
    svg: str
    records: list[dict] = field(repr=False)

    @property
    def sidecar(self) -> str:
        return _jsonl(self.records)

    def write(self, svg_path, sidecar_path) -> None:
        with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.svg)
        with open(sidecar_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.sidecar)


def timeline_report(history: VerdictHistory, series: Sequence[ScoreSeries]) -> Graphic:
    """Verdict marks along the execution axis with dashed q and dotted p curves per window size."""
    n = len(history)
    for s in series:
        if s.history_length != n or (len(s) and int(s.end_index[-1]) >= n):
            raise SeriesMismatch(
                f"series for w={s.window_size} covers {s.history_length} verdicts, history has {n}")
    step, left, top, plot_h = 10.0, 48.0, 30.0, 120.0
    marks_y = top + plot_h + 22
    width = left + max(n, 1) * step + 20
    height = marks_y + 60 + 14 * len(series)
    svg = _Svg(width, height, f"Verdict timeline for {history.key}")
    svg.add("text", str(history.key), x=_num(left), y="16", font_size="12")

    def x_of(i: int) -> float:
        return left + (i + 0.5) * step

    def y_of(v: float) -> float:
        return top + (1.0 - v) * plot_h

    # score axis
    svg.add("line", x1=_num(left), y1=_num(top), x2=_num(left), y2=_num(top + plot_h), stroke="#555555")
    for v in (0.0, 0.5, 1.0):
        svg.add("line", x1=_num(left), y1=_num(y_of(v)), x2=_num(width - 20), y2=_num(y_of(v)),
                stroke="#DDDDDD")
        svg.add("text", _num(v), x=_num(left - 6), y=_num(y_of(v) + 3), text_anchor="end")
    svg.add("text", "score", x="12", y=_num(top + plot_h / 2),
            transform=f"rotate(-90 12 {_num(top + plot_h / 2)})", text_anchor="middle")

    records = []
    for i, (night, v) in enumerate(zip(history.nights, history.codes)):
        v = Verdict(int(v))
        _mark(svg, v, x_of(i), marks_y, 3.5, data_index=i, data_night=night.isoformat(),
              data_verdict=v.token)
        records.append({"kind": "verdict", "index": i, "night": night.isoformat(), "verdict": v.token})

    # execution index and date ticks
    tick = 5 if n <= 60 else 10 if n <= 150 else 25
    for i in range(0, n, tick):
        svg.add("line", x1=_num(x_of(i)), y1=_num(marks_y + 8), x2=_num(x_of(i)), y2=_num(marks_y + 12),
                stroke="#555555")
        svg.add("text", str(i), x=_num(x_of(i)), y=_num(marks_y + 22), text_anchor="middle")
        svg.add("text", history.nights[i].isoformat(), x=_num(x_of(i)), y=_num(marks_y + 34),
                text_anchor="middle", font_size="7")
    svg.add("text", "execution index / night", x=_num(left), y=_num(marks_y + 46))

    legend_y = marks_y + 60
    for k, s in enumerate(series):
        colour = CURVE_COLOURS[k % len(CURVE_COLOURS)]
        ly = legend_y + 14 * k
        if len(s) == 0:
            svg.add("text", f"w={s.window_size}: history shorter than window, no curves",
                    x=_num(left), y=_num(ly), fill=colour)
            continue
        for name, values, dash in (("q", s.q, Q_DASH), ("p", s.p, P_DASH)):
            pts = " ".join(f"{_num(x_of(int(e)))},{_num(y_of(float(val)))}"
                           for e, val in zip(s.end_index, values))
            svg.add("polyline", points=pts, fill="none", stroke=colour, stroke_width="1.5",
                    stroke_dasharray=dash, data_series=f"{name}{s.window_size}")
        for e, q, p in s.points():
            svg.add("circle", cx=_num(x_of(e)), cy=_num(y_of(q)), r="1", fill=colour,
                    data_window=s.window_size, data_end_index=e, data_q=repr(q), data_p=repr(p))
            records.append({"kind": "score", "window": s.window_size, "end_index": e, "q": q, "p": p})
        svg.add("text", f"w={s.window_size}: q dashed, p dotted", x=_num(left), y=_num(ly), fill=colour)
    return Graphic(svg.render(), records)


def heatmap_matrix(dataset, start=None, end=None):
    """``(nights, keys, cells)``; ``cells[r][c]`` is a Verdict or None when not run."""
    nights = [n for n in dataset.nights
              if (start is None or n >= start) and (end is None or n <= end)]
    col = {n: j for j, n in enumerate(nights)}
    keys, cells = [], []
    for key in sorted(dataset.histories):
        h = dataset.histories[key]
        row = [None] * len(nights)
        for night, v in zip(h.nights, h.codes):
            if night in col:
                row[col[night]] = Verdict(int(v))
        keys.append(key)
        cells.append(row)
    return nights, keys, cells


def heatmap_report(dataset, start=None, end=None) -> Graphic:
    """Rows are test cases sorted by key, columns are nights with at least one execution."""
    nights, keys, cells = heatmap_matrix(dataset, start, end)
    cw, ch, left, top = 8.0, 10.0, 220.0, 60.0
    width = left + cw * max(len(nights), 1) + 20
    height = top + ch * max(len(keys), 1) + 40
    svg = _Svg(width, height, "Verdict heatmap")
    svg.raw('<defs><pattern id="notrun" width="4" height="4" patternUnits="userSpaceOnUse">'
            '<path d="M0,4 L4,0" stroke="#AAAAAA" stroke-width="0.6"/></pattern></defs>')
    for j, night in enumerate(nights):
        if j % 7 == 0:
            x = left + (j + 0.5) * cw
            svg.add("text", night.isoformat(), x=_num(x), y=_num(top - 6), font_size="7",
                    transform=f"rotate(-60 {_num(x)} {_num(top - 6)})")
    records = [{"kind": "columns", "nights": [n.isoformat() for n in nights]}]
    for r, (key, row) in enumerate(zip(keys, cells)):
        y = top + r * ch
        svg.add("text", str(key), x=_num(left - 4), y=_num(y + ch - 2), text_anchor="end", font_size="8")
        for j, v in enumerate(row):
            x = left + j * cw
            token = "not_run" if v is None else v.token
            fill = "url(#notrun)" if v is None else VERDICT_COLOURS[v]
            svg.add("rect", x=_num(x), y=_num(y), width=_num(cw), height=_num(ch), fill=fill,
                    stroke="#FFFFFF", stroke_width="0.5", data_row=r, data_col=j, data_verdict=token)
        records.append({"kind": "row", "system": key.test_system, "script": key.test_script,
                        "params": key.parameter_setting,
                        "cells": [None if v is None else v.token for v in row]})
    ly = top + ch * max(len(keys), 1) + 20
    for k, (label, fill) in enumerate([(v.token, VERDICT_COLOURS[v]) for v in Verdict]
                                      + [("not run", "url(#notrun)")]):
        x = left + 70 * k
        svg.add("rect", x=_num(x), y=_num(ly - 8), width="8", height="8", fill=fill, stroke="#AAAAAA")
        svg.add("text", label, x=_num(x + 11), y=_num(ly))
    return Graphic(svg.render(), records)


# ---------------------------------------------------------------- ledgers


class Status(str, enum.Enum):
    FIXED = "fixed"
    MULTIPLE_ROOT_CAUSES = "multiple_root_causes"
    UNDER_INVESTIGATION = "under_investigation"
    UNKNOWN_FIX = "unknown_fix"


SEP = " / "


@dataclass(frozen=True)
class Taxonomy:
    """Category tree; ``children`` maps a name to its subtree, in display order."""

    children: Mapping[str, "Taxonomy"] = field(default_factory=dict)

    @classmethod
    def from_obj(cls, obj) -> "Taxonomy":
        """Build from nested dicts, or lists of names / single-key dicts."""
        if obj is None:
            return cls({})
        if isinstance(obj, Mapping):
            items = list(obj.items())
        else:
            items = []
            for entry in obj:
                if isinstance(entry, str):
                    items.append((entry, None))
                elif isinstance(entry, Mapping) and len(entry) == 1:
                    items.extend(entry.items())
                else:
                    raise ValueError(f"bad taxonomy entry {entry!r}")
        names = [name for name, _ in items]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate category names at one level: {names}")
        return cls({name: cls.from_obj(sub) for name, sub in items})

    def paths(self, prefix: tuple[str, ...] = ()) -> list[tuple[str, ...]]:
        out = []
        for name, sub in self.children.items():
            out.append(prefix + (name,))
            out.extend(sub.paths(prefix + (name,)))
        return out

    def __contains__(self, path) -> bool:
        node = self
        for name in split_path(path):
            if name not in node.children:
                return False
            node = node.children[name]
        return True


def split_path(path) -> tuple[str, ...]:
    if isinstance(path, str):
        return tuple(p.strip() for p in path.split(SEP) if p.strip())
    return tuple(path)


ROOT_CAUSE_TAXONOMY = Taxonomy.from_obj({
    "HW Allocation": ["link breaker", "switch core", "empty port"],
    "TC Assumptions": ["timing", "test system layout", "temperature", "log file", "lib. version"],
    "Test System Issues": ["replace device", "console junk", "I/O relay", "USB sticks",
                           "FTP server", "license"],
    "SW or HW Faults": ["SW impact on HW", "SW timing"],
    "Code Maintenance": ["unclear", "broken renaming", "traffic generator", "forgotten patch"],
    "Multiple Root Causes": None,
    "Under Investigation": None,
    "Unknown Fix": None,
})

FACTOR_TAXONOMY = Taxonomy.from_obj([
    "Test Case Assumptions", "Complexity of Testing", "Software or Hardware Faults",
    "Test Case Dependencies", "Resource Leaks", "Network Issues", "Random Number Issues",
    "Test System Issues", "Code Maintenance",
])


@dataclass(frozen=True)
class Annotation:
    key: TestCaseKey
    category: tuple[str, ...]
    status: Status = Status.FIXED
    fix_id: str | None = None
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "key", TestCaseKey(*self.key))
        object.__setattr__(self, "category", split_path(self.category))
        object.__setattr__(self, "status", Status(self.status))
        if self.status is Status.FIXED and not self.fix_id:
            raise ValueError(f"{self.key}: fixed annotations need a fix_id")

    @classmethod
    def from_dict(cls, d: Mapping) -> "Annotation":
        return cls(TestCaseKey(d["system"], d["script"], d["params"]), d["category"],
                   d.get("status", "fixed"), d.get("fix_id"), d.get("note", ""))


def load_annotations(lines: Iterable[str]) -> list[Annotation]:
    out = []
    for line in lines:
        if line.strip():
            out.append(Annotation.from_dict(json.loads(line)))
    return out


@dataclass(frozen=True)
class LedgerRow:
    path: tuple[str, ...]
    counts: dict[str, int]
    total: int            # distinct test cases
    distinct_fixes: int   # distinct fix ids for fixed tests plus distinct unfixed tests

    @property
    def depth(self) -> int:
        return len(self.path) - 1


@dataclass(frozen=True)
class Ledger:
    labels: tuple[str, ...]
    rows: list[LedgerRow]
    annotated_tests: int
    distinct_fixes: int
    duplicates: int       # fixed tests whose fix is shared with another test, minus one per fix

    def row(self, path) -> LedgerRow:
        path = split_path(path)
        for r in self.rows:
            if r.path == path:
                return r
        raise KeyError(path)

    def to_records(self) -> list[dict]:
        recs = [{"category": SEP.join(r.path), "depth": r.depth, **r.counts,
                 "total": r.total, "distinct_fixes": r.distinct_fixes} for r in self.rows]
        recs.append({"summary": True, "annotated_tests": self.annotated_tests,
                     "distinct_fixes": self.distinct_fixes, "duplicates": self.duplicates})
        return recs

    def render_text(self) -> str:
        head = ["Root Cause/Fix", *self.labels, "Tot.", "Fixes"]
        body = [[("  " * r.depth + ("- " if r.depth else "")) + r.path[-1],
                 *(str(r.counts[g]) for g in self.labels), str(r.total), str(r.distinct_fixes)]
                for r in self.rows]
        lines = _text_table(head, body)
        lines.append(f"annotated tests: {self.annotated_tests}  distinct fixes: "
                     f"{self.distinct_fixes}  duplicates: {self.duplicates}")
        return "\n".join(lines) + "\n"

    def render_markdown(self) -> str:
        head = ["Root Cause/Fix", *self.labels, "Tot.", "Fixes"]
        body = [[("- *" + r.path[-1] + "*") if r.depth else r.path[-1],
                 *(str(r.counts[g]) for g in self.labels), str(r.total), str(r.distinct_fixes)]
                for r in self.rows]
        out = _md_table(head, body)
        out.append("")
        out.append(f"Annotated tests: {self.annotated_tests}; distinct fixes: "
                   f"{self.distinct_fixes}; duplicates: {self.duplicates}.")
        return "\n".join(out) + "\n"


def ledger_report(assignments: Iterable[GroupAssignment], annotations: Iterable[Annotation],
                  taxonomy: Taxonomy = ROOT_CAUSE_TAXONOMY,
                  labels: Sequence[str] = ("A6", "A13", "B6", "B13")) -> Ledger:
    """Count annotated group members per category; parents roll up their subcategories."""
    groups = {a.key: set(a.groups) for a in assignments}
    annotations = list(annotations)
    seen = set()
    for ann in annotations:
        if ann.category not in taxonomy:
            raise UnknownCategory(f"{SEP.join(ann.category)!r} is not in the taxonomy")
        if ann.key in seen:
            raise ValueError(f"{ann.key} is annotated twice")
        seen.add(ann.key)

    def fix_token(ann: Annotation):
        return ("fix", ann.fix_id) if ann.status is Status.FIXED else ("test", ann.key)

    rows = []
    for path in taxonomy.paths():
        under = [a for a in annotations if a.category[:len(path)] == path]
        if not under:
            continue
        counts = {g: sum(1 for a in under if g in groups.get(a.key, ())) for g in labels}
        rows.append(LedgerRow(path, counts, len({a.key for a in under}),
                              len({fix_token(a) for a in under})))
    fixed = [a for a in annotations if a.status is Status.FIXED]
    n_fixes = len({a.fix_id for a in fixed})
    return Ledger(tuple(labels), rows, len(annotations),
                  len({fix_token(a) for a in annotations}), len(fixed) - n_fixes)


# ---------------------------------------------------------------- tables


def _text_table(head: list[str], body: list[list[str]]) -> list[str]:
    widths = [max(len(row[i]) for row in [head, *body]) for i in range(len(head))]

    def fmt(row):
        first = row[0].ljust(widths[0])
        return "  ".join([first] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]).rstrip()

    return [fmt(head), "  ".join("-" * w for w in widths), *(fmt(r) for r in body)]


def _md_table(head: list[str], body: list[list[str]]) -> list[str]:
    out = ["| " + " | ".join(head) + " |",
           "|" + "|".join(["---"] + ["---:"] * (len(head) - 1)) + "|"]
    out += ["| " + " | ".join(r) + " |" for r in body]
    return out


def _f(x: float, digits: int = 3) -> str:
    return "nan" if x != x else f"{x:.{digits}f}"


def _stats_row(name: str, s: Stats) -> list[str]:
    return [name, _f(s.min), _f(s.max), _f(s.mean), _f(s.median), _f(s.std)]


@dataclass(frozen=True)
class SummaryReport:
    text: str
    markdown: str


def summary_report(summary: PopulationSummary, group_sizes: Mapping[str, int],
                   classifiable: Mapping[str, int] | None = None,
                   overlap: GroupOverlap | None = None) -> SummaryReport:
    """Render population statistics, group sizes and overlaps; computes nothing itself."""
    sections: list[tuple[str, list[str], list[list[str]]]] = []
    head = ["Score", "Min", "Max", "Avg.", "Med.", "Std.d."]
    sections.append(("Scores over full sequences", head,
                     [_stats_row("p-score", summary.p), _stats_row("q-score", summary.q),
                      _stats_row("executions", summary.executions_per_test)]))
    sections.append(("Verdicts", ["Verdict", "Count", "Fraction"],
                     [[v, str(summary.verdict_counts[v]), _f(summary.verdict_fractions[v], 4)]
                      for v in summary.verdict_counts]))
    group_rows = []
    for label, size in group_sizes.items():
        base = (classifiable or {}).get(label, 0)
        group_rows.append([label, str(size), str(base), _f(size / base, 4) if base else "nan"])
    sections.append(("Groups", ["Group", "Tests", "Classifiable", "Fraction"], group_rows))
    if overlap is not None and overlap.labels:
        sections.append(("Group overlap", ["", *overlap.labels],
                         [[a, *(str(int(c)) for c in overlap.counts[i])]
                          for i, a in enumerate(overlap.labels)]))
        sections.append(("Tests in exactly k groups", ["k", "Tests"],
                         [[str(k), str(v)] for k, v in overlap.exactly_k.items()]))

    preamble = []
    if summary.empty:
        preamble.append("empty: no test case was executed more than once")
    preamble.append(f"tests scored: {summary.n_tests}; excluded single-execution tests: "
                    f"{summary.excluded_single_execution_tests}; non-zero q-score: "
                    f"{_f(summary.fraction_nonzero_q, 4)}")
    text, md = list(preamble), [f"*{line}*" if summary.empty and i == 0 else line
                                for i, line in enumerate(preamble)]
    for title, h, body in sections:
        text += ["", title, *_text_table(h, body)]
        md += ["", f"### {title}", "", *_md_table(h, body)]
    return SummaryReport("\n".join(text) + "\n", "\n".join(md) + "\n")
