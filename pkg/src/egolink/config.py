"""Pipeline configuration: defaults, INI file, and command-line overrides.

The config file is INI with a ``[pipeline]`` section (and an optional
``[synth]`` section for the generator). Every key has a command-line flag
of the same name, with dashes for underscores: ``window_start`` becomes
``--window-start``. Flags win over the file, the file wins over defaults.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping

from egolink.aggregation import DEFAULT_G_GRID
from egolink.ego import DEFAULT_PROPORTIONS, POOL_DEGREE
from egolink.features import (
    DEFAULT_D_GRID,
    F_MIN,
    LocalClock,
    ScoreParams,
    catalogue,
    format_duration,
    parse_duration,
    parse_score_id,
)
from egolink.pipeline import AGGREGATORS, ExperimentConfig
from egolink.synth import SynthConfig


class ConfigError(ValueError):
    """Bad configuration value or unknown key."""


def _list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text: str) -> list[int]:
    return [int(x) for x in _list(text)]


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in _list(text))


def _durations(text: str) -> list[int]:
    return [parse_duration(x) for x in _list(text)]


def _degrees(text: str) -> dict[int, int]:
    out = {}
    for item in _list(text):
        k, _, count = item.partition(":")
        out[int(k)] = int(count)
    return out


def _opt(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    return lambda text: None if text.strip().lower() in ("", "none") else parse(text)


def _meta(parse: Callable[[str], Any], help: str, fmt: Callable[[Any], str] = str) -> dict:
    return {"parse": parse, "help": help, "format": fmt}


def _join(values) -> str:
    return ",".join(str(v) for v in values)


@dataclass
class PipelineConfig:
    input: str | None = field(default=None, metadata=_meta(_opt(str), "raw interaction log"))
    workspace: str = field(default="workspace", metadata=_meta(str, "workspace directory"))
    truth: str | None = field(
        default=None, metadata=_meta(_opt(str), "truth file (ego,i,j) replacing observed links as ground truth")
    )
    window_start: int | None = field(default=None, metadata=_meta(_opt(int), "first timestamp kept"))
    window_end: int | None = field(default=None, metadata=_meta(_opt(int), "first timestamp dropped"))
    strict: bool = field(default=False, metadata=_meta(_bool, "fail on the first malformed line"))
    seed: int = field(default=0, metadata=_meta(int, "seed for splits and sampling"))
    min_class_size: int = field(default=5, metadata=_meta(int, "smaller classes go entirely to learning"))
    split: tuple[float, ...] = field(
        default=DEFAULT_PROPORTIONS, metadata=_meta(_floats, "learn,valid,test proportions", _join)
    )
    pool_degree: int = field(default=POOL_DEGREE, metadata=_meta(int, "degrees at or above this are pooled"))
    classes: list[str] | None = field(
        default=None, metadata=_meta(_opt(_list), "only process these degree classes", lambda v: _join(v or []))
    )
    sample: int | None = field(default=None, metadata=_meta(_opt(int), "at most this many egos per class"))
    scores: list[str] | None = field(
        default=None, metadata=_meta(_opt(_list), "score ids fed to the aggregators", lambda v: _join(v or []))
    )
    extra_scores: list[str] = field(
        default_factory=lambda: ["s1", "s2", "s3", "s4"],
        metadata=_meta(_list, "score ids evaluated but not aggregated", _join),
    )
    d_grid: list[int] = field(
        default_factory=lambda: list(DEFAULT_D_GRID),
        metadata=_meta(_durations, "elapsed-time windows", lambda v: _join(format_duration(d) for d in v)),
    )
    tz: str = field(default="UTC", metadata=_meta(str, "timezone for profile partitions"))
    f_min: float = field(default=F_MIN, metadata=_meta(float, "Fano factor floor"))
    aggregators: list[str] = field(
        default_factory=lambda: list(AGGREGATORS), metadata=_meta(_list, "aggregators to run", _join)
    )
    g_grid: list[int] = field(
        default_factory=lambda: list(DEFAULT_G_GRID), metadata=_meta(_ints, "merge window sizes to try", _join)
    )
    output: str | None = field(default=None, metadata=_meta(_opt(str), "report directory (default WORKSPACE/reports)"))

    def validate(self) -> None:
        if len(self.split) != 3 or not math.isclose(sum(self.split), 1.0) or min(self.split) < 0:
            raise ConfigError(f"split must be three non-negative proportions summing to 1, got {self.split}")
        if (self.window_start is None) != (self.window_end is None):
            raise ConfigError("window_start and window_end go together")
        if self.window_start is not None and self.window_start >= self.window_end:
            raise ConfigError("window_start must precede window_end")
        unknown = set(self.aggregators) - set(AGGREGATORS)
        if unknown:
            raise ConfigError(f"unknown aggregators {sorted(unknown)}")
        if not self.g_grid or min(self.g_grid) < 1:
            raise ConfigError("g_grid needs positive values")
        if not self.d_grid:
            raise ConfigError("d_grid is empty")
        if self.sample is not None and self.sample < 1:
            raise ConfigError("sample must be positive")
        if self.min_class_size < 1 or self.pool_degree < 2:
            raise ConfigError("min_class_size must be >= 1 and pool_degree >= 2")
        for sid in self.score_ids + self.extra_scores:
            try:
                parse_score_id(sid)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if "s5" not in self.score_ids + self.extra_scores:
            raise ConfigError("s5 is the benchmark and must be scored")
        try:
            LocalClock(self.tz)
        except Exception:
            raise ConfigError(f"unknown timezone {self.tz!r}") from None

    @property
    def score_ids(self) -> list[str]:
        return list(self.scores) if self.scores else catalogue(self.d_grid)

    @property
    def window(self) -> tuple[int, int] | None:
        return None if self.window_start is None else (self.window_start, self.window_end)

    @property
    def reports_dir(self) -> Path:
        return Path(self.output) if self.output else Path(self.workspace) / "reports"

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(
            scores=self.score_ids,
            extra_scores=[s for s in self.extra_scores if s not in self.score_ids],
            aggregators=list(self.aggregators),
            g_grid=list(self.g_grid),
            score_params=ScoreParams(tz=self.tz, f_min=self.f_min),
        )

    def as_strings(self, keys: list[str] | None = None) -> dict[str, str]:
        """Canonical text form of the chosen keys, used for stage fingerprints."""
        out = {}
        for f in fields(self):
            if keys is None or f.name in keys:
                value = getattr(self, f.name)
                out[f.name] = "" if value is None else f.metadata["format"](value)
        return out


SYNTH_HELP = {
    "degrees": "ego counts per degree, e.g. 8:200,12:50",
    "circles": "circles per ego",
    "p_in": "link probability inside a circle",
    "p_out": "link probability across circles",
    "base_rate": "events per leg per day",
    "cascade_prob": "chance an event triggers a same-circle follow-up",
    "cascade_window": "follow-up delay bound in seconds",
    "profiles": "distinct or uniform",
}


def synth_parsers() -> dict[str, Callable[[str], Any]]:
    parsers: dict[str, Callable[[str], Any]] = {}
    for f in fields(SynthConfig):
        if f.name == "degrees":
            parsers[f.name] = _degrees
        elif f.name == "profiles":
            parsers[f.name] = str
        elif f.type in ("int", int):
            parsers[f.name] = int
        else:
            parsers[f.name] = float
    return parsers


def pipeline_parsers() -> dict[str, Callable[[str], Any]]:
    return {f.name: f.metadata["parse"] for f in fields(PipelineConfig)}


def read_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from None
    unknown = set(parser.sections()) - {"pipeline", "synth"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    return {section: dict(parser[section]) for section in parser.sections()}


def _apply(target: Any, parsers: Mapping[str, Callable[[str], Any]], values: Mapping[str, str], origin: str) -> None:
    for key, text in values.items():
        name = key.replace("-", "_")
        if name not in parsers:
            raise ConfigError(f"unknown {origin} key {key!r}")
        try:
            setattr(target, name, parsers[name](text))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None


def build_pipeline_config(file_values: Mapping[str, str], overrides: Mapping[str, str]) -> PipelineConfig:
    cfg = PipelineConfig()
    _apply(cfg, pipeline_parsers(), file_values, "pipeline")
    _apply(cfg, pipeline_parsers(), overrides, "pipeline")
    cfg.validate()
    return cfg


def build_synth_config(file_values: Mapping[str, str], overrides: Mapping[str, str]) -> SynthConfig:
    cfg = SynthConfig()
    _apply(cfg, synth_parsers(), file_values, "synth")
    _apply(cfg, synth_parsers(), overrides, "synth")
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg
