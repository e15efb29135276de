"""Command-line front end: ``intermittence {ingest,score,classify,simulate,report}``.

Each command computes all of its outputs in memory and writes them only once
everything succeeded.  Exit codes: 0 success, 1 usage or configuration error,
2 data error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import report, simulate, store
from .classify import (classifiable_counts, classify_all, group_overlap,
                       population_summary)
from .config import (OUTPUT_DIR_ENV, RunConfig, load_toml, run_config_from_toml,
                     specs_from_config)
from .errors import ConfigError, DataError
from .verdicts import TestCaseKey, full_sequence_scores, windowed_scores

log = logging.getLogger("intermittence")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def _jsonl(records) -> bytes:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records).encode("utf-8")


def _key_fields(key: TestCaseKey) -> dict:
    return {"system": key.test_system, "script": key.test_script, "params": key.parameter_setting}


def _slug(key: TestCaseKey) -> str:
    return re.sub(r"[^A-Za-z0-9.-]+", "_", str(key)).strip("_")


def parse_key(text: str) -> TestCaseKey:
    parts = text.split("/")
    if len(parts) != 3:
        raise UsageError(f"test key must look like system/script/params, got {text!r}")
    return TestCaseKey(*parts)


# ------------------------------------------------------------------ config


def build_config(args) -> RunConfig:
    """Config file first, then command-line flags on top."""
    cfg = run_config_from_toml(load_toml(args.config)) if args.config else RunConfig()
    if getattr(args, "inputs", None):
        cfg.inputs = [Path(p) for p in args.inputs]
    if getattr(args, "format", None):
        cfg.format = args.format
    if getattr(args, "window", None):
        cfg.windows = tuple(args.window)
    if getattr(args, "spec_file", None):
        cfg.specs = specs_from_config(load_toml(args.spec_file))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output_dir = Path(args.out)
    return cfg.validate()


def load_inputs(cfg: RunConfig) -> store.Dataset:
    for path in cfg.inputs:
        if not Path(path).is_file():
            raise UsageError(f"input file not found: {path}")
    datasets = [store.ingest_path(p, cfg.format) for p in cfg.inputs]
    if not datasets:
        raise UsageError("no input files given")
    dataset = datasets[0] if len(datasets) == 1 else store.merge(datasets)
    if not dataset.histories:
        log.warning("input holds no verdict records")
    return dataset


def write_outputs(out_dir: Path, files: dict[str, bytes]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        (out_dir / name).write_bytes(data)
        log.info("wrote %s", out_dir / name)


# ------------------------------------------------------------------ commands


def cmd_ingest(args, cfg: RunConfig) -> dict[str, bytes]:
    dataset = load_inputs(cfg)
    export_format = args.export_format or "jsonl"
    files = {f"verdicts.{export_format}": store.export(dataset, export_format)}
    files["dataset.json"] = _json({
        "tests": len(dataset),
        "verdicts": dataset.n_verdicts,
        "nights": len(dataset.nights),
        "first_night": dataset.nights[0].isoformat() if dataset.nights else None,
        "last_night": dataset.nights[-1].isoformat() if dataset.nights else None,
        "provenance": dataset.provenance,
    })
    if args.revisions:
        path = Path(args.revisions)
        if not path.is_file():
            raise UsageError(f"revision log not found: {path}")
        with open(path, "rb") as fh:
            rlog = store.ingest_revisions(fh, store.guess_format(path))
        stats = store.run_length_stats(rlog)
        files["run_lengths.json"] = _json({
            name: {k: (None if v != v else v)
                   for k, v in vars(getattr(stats, name)).items() if k != "runs"}
            for name in ("sw", "tw", "both")})
    return files


def _exact(x: Fraction | None):
    return None if x is None else f"{x.numerator}/{x.denominator}"


def cmd_score(args, cfg: RunConfig) -> dict[str, bytes]:
    dataset = load_inputs(cfg)
    series_recs, full_recs = [], []
    for key, h in dataset.histories.items():
        full = full_sequence_scores(h)
        full_recs.append({**_key_fields(key), "executions": len(h),
                          "q": None if full.q is None else float(full.q), "p": float(full.p),
                          "q_exact": _exact(full.q), "p_exact": _exact(full.p)})
        for w in cfg.windows:
            s = windowed_scores(h, w)
            for e, q, p in s.points():
                series_recs.append({**_key_fields(key), "window": w, "end_index": e,
                                    "night": h.nights[e].isoformat(), "q": q, "p": p})
    return {"scores.jsonl": _jsonl(series_recs), "full_scores.jsonl": _jsonl(full_recs)}


def _classification(dataset, cfg: RunConfig):
    assignments = classify_all(dataset, cfg.specs)
    labels = [s.label for s in cfg.specs]
    overlap = group_overlap(assignments, labels)
    sizes = {label: int(overlap.counts[i, i]) for i, label in enumerate(labels)}
    return assignments, overlap, sizes, classifiable_counts(dataset, cfg.specs)


def cmd_classify(args, cfg: RunConfig) -> dict[str, bytes]:
    dataset = load_inputs(cfg)
    assignments, overlap, sizes, base = _classification(dataset, cfg)
    summary = population_summary(dataset)
    rendered = report.summary_report(summary, sizes, base, overlap)
    return {
        "assignments.jsonl": _jsonl(a.to_dict() for a in assignments),
        "population.json": _json(summary.to_dict()),
        "groups.json": _json({"specs": [s.to_dict() for s in cfg.specs],
                              "sizes": sizes, "classifiable": base}),
        "overlap.json": _json(overlap.to_dict()),
        "summary.txt": rendered.text.encode("utf-8"),
        "summary.md": rendered.markdown.encode("utf-8"),
    }


def cmd_simulate(args, cfg: RunConfig) -> dict[str, bytes]:
    if args.scenarios:
        scenarios = simulate.scenarios_from_config(load_toml(args.scenarios))
    else:
        scenarios = simulate.bundled_scenarios()
    if not scenarios:
        raise ConfigError("scenario suite is empty")
    if args.copies < 1:
        raise UsageError("--copies must be at least 1")
    synth = simulate.generate_dataset(scenarios, cfg.seed, copies=args.copies)
    dataset = store.Dataset.from_histories(synth.histories.values(),
                                           provenance=f"simulate seed={cfg.seed}")
    fmt = cfg.format or "jsonl"
    return {
        f"verdicts.{fmt}": store.export(dataset, fmt),
        "ground_truth.jsonl": _jsonl({**_key_fields(k), "groups": sorted(g)}
                                     for k, g in sorted(synth.ground_truth.items())),
        "simulation.json": _json({"seed": synth.seed, "algorithm": synth.algorithm,
                                  "scenarios": [s.name for s in scenarios],
                                  "copies": args.copies, "tests": len(dataset)}),
    }


def cmd_report(args, cfg: RunConfig) -> dict[str, bytes]:
    dataset = load_inputs(cfg)
    assignments, overlap, sizes, base = _classification(dataset, cfg)
    files = {}
    summary = report.summary_report(population_summary(dataset), sizes, base, overlap)
    files["summary.txt"] = summary.text.encode("utf-8")
    files["summary.md"] = summary.markdown.encode("utf-8")

    timeline = args.timeline or cfg.reports.get("timeline")
    if timeline:
        keys = [parse_key(k) for k in timeline]
    else:
        keys = [a.key for a in assignments]
    for key in keys:
        h = store.query_history(dataset, key)
        if len(h) == 0:
            raise UsageError(f"no history for {key}")
        g = report.timeline_report(h, [windowed_scores(h, w) for w in cfg.windows])
        files[f"timeline_{_slug(key)}.svg"] = g.svg.encode("utf-8")
        files[f"timeline_{_slug(key)}.jsonl"] = g.sidecar.encode("utf-8")

    if not args.no_heatmap and cfg.reports.get("heatmap", True):
        g = report.heatmap_report(dataset, args.start, args.end)
        files["heatmap.svg"] = g.svg.encode("utf-8")
        files["heatmap.jsonl"] = g.sidecar.encode("utf-8")

    if args.annotations:
        taxonomy = report.ROOT_CAUSE_TAXONOMY
        if args.taxonomy:
            taxonomy = report.Taxonomy.from_obj(load_toml(args.taxonomy).get("taxonomy"))
        try:
            with open(args.annotations, encoding="utf-8") as fh:
                annotations = report.load_annotations(fh)
        except FileNotFoundError:
            raise UsageError(f"annotation file not found: {args.annotations}") from None
        except (KeyError, ValueError) as exc:
            raise DataError(f"bad annotation file: {exc}") from None
        ledger = report.ledger_report(assignments, annotations, taxonomy,
                                      [s.label for s in cfg.specs])
        files["ledger.txt"] = ledger.render_text().encode("utf-8")
        files["ledger.md"] = ledger.render_markdown().encode("utf-8")
        files["ledger.jsonl"] = _jsonl(ledger.to_records())
    return files


COMMANDS = {
    "ingest": cmd_ingest,
    "score": cmd_score,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration; flags override it")
    common.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or ./out)")
    common.add_argument("-v", "--verbose", action="store_true")

    data_in = argparse.ArgumentParser(add_help=False)
    data_in.add_argument("inputs", nargs="*", help="verdict record files (.jsonl or .csv)")
    data_in.add_argument("--format", choices=store.FORMATS,
                         help="input format (default: from file suffix)")

    windows = argparse.ArgumentParser(add_help=False)
    windows.add_argument("--window", type=int, action="append",
                         help="window size, repeatable (default 6 and 13)")

    specs = argparse.ArgumentParser(add_help=False)
    specs.add_argument("--spec-file", help="TOML file with [[group]] tables")

    parser = _Parser(prog="intermittence",
                     description="Intermittence metrics for nightly test verdict histories.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common, data_in], help="validate and normalize records")
    p.add_argument("--export-format", choices=store.FORMATS)
    p.add_argument("--revisions", help="revision log for run-length statistics")

    sub.add_parser("score", parents=[common, data_in, windows], help="windowed and full q/p scores")
    sub.add_parser("classify", parents=[common, data_in, specs], help="group assignment")

    p = sub.add_parser("simulate", parents=[common], help="synthetic dataset from scenarios")
    p.add_argument("--scenarios", help="TOML scenario suite (default: bundled suite)")
    p.add_argument("--seed", type=int)
    p.add_argument("--copies", type=int, default=1, help="test systems per scenario")
    p.add_argument("--format", choices=store.FORMATS)

    p = sub.add_parser("report", parents=[common, data_in, windows, specs],
                       help="timelines, heatmap, summary and ledger")
    p.add_argument("--timeline", action="append", metavar="SYSTEM/SCRIPT/PARAMS",
                   help="test to plot (default: every grouped test)")
    p.add_argument("--no-heatmap", action="store_true")
    p.add_argument("--start", type=_date, help="first night of the heatmap")
    p.add_argument("--end", type=_date, help="last night of the heatmap")
    p.add_argument("--annotations", help="root-cause annotations (.jsonl)")
    p.add_argument("--taxonomy", help="TOML file with a [taxonomy] tree")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        cfg = build_config(args)
        files = COMMANDS[args.command](args, cfg)
        write_outputs(cfg.out, files)
    except (UsageError, ConfigError) as exc:
        print(f"intermittence: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"intermittence: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
