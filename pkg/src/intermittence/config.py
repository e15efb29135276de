"""TOML configuration: group specs, scenario suites and run settings."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .classify import DEFAULT_SPECS, GroupSpec, validate_specs
from .errors import ConfigError, WindowTooSmall

OUTPUT_DIR_ENV = "INTERMITTENCE_OUTPUT_DIR"
DEFAULT_WINDOWS = (6, 13)


def load_toml_text(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None


def load_toml(path) -> dict:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return load_toml_text(text)


def specs_from_config(doc: dict) -> list[GroupSpec]:
    """``[[group]]`` tables -> specs; absent tables mean the default four groups."""
    if "group" not in doc:
        return list(DEFAULT_SPECS)
    specs = [GroupSpec.from_dict(g) for g in doc["group"]]
    if not specs:
        raise ConfigError("no groups configured")
    return specs


@dataclass
class RunConfig:
    inputs: list[Path] = field(default_factory=list)
    format: str | None = None
    windows: tuple[int, ...] = DEFAULT_WINDOWS
    specs: list[GroupSpec] = field(default_factory=lambda: list(DEFAULT_SPECS))
    seed: int = 0
    output_dir: Path | None = None
    reports: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        for w in self.windows:
            if w < 2:
                raise WindowTooSmall(f"window size must be at least 2, got {w}")
        validate_specs(self.specs)
        if self.format not in (None, "jsonl", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        return self

    @property
    def out(self) -> Path:
        if self.output_dir is not None:
            return Path(self.output_dir)
        env = os.environ.get(OUTPUT_DIR_ENV)
        return Path(env) if env else Path("out")


def run_config_from_toml(doc: dict) -> RunConfig:
    """Top-level keys: input, format, windows, seed, output_dir, ``[report]``, ``[[group]]``."""
    known = {"input", "format", "windows", "seed", "output_dir", "report", "group"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig()
    if "input" in doc:
        inputs = doc["input"]
        cfg.inputs = [Path(p) for p in ([inputs] if isinstance(inputs, str) else inputs)]
    cfg.format = doc.get("format")
    if "windows" in doc:
        cfg.windows = tuple(int(w) for w in doc["windows"])
    cfg.seed = int(doc.get("seed", 0))
    if "output_dir" in doc:
        cfg.output_dir = Path(doc["output_dir"])
    cfg.reports = dict(doc.get("report", {}))
    unknown = set(cfg.reports) - {"timeline", "heatmap"}
    if unknown:
        raise ConfigError(f"unknown [report] keys: {sorted(unknown)}")
    cfg.specs = specs_from_config(doc)
    return cfg
