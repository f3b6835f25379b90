"""Experiment configuration files.

The format is line-oriented ``key = value`` text grouped under ``[section]``
headers, read with :mod:`configparser` (``#`` and ``;`` start comments).
Sections and keys::

    [scenario]   name = two_qubit | spin_bath | oscillator, plus physical parameters
    [noise]      gamma = <float>  or  gamma_t = <list>;  B = <operator spec>
    [scheme]     pulses = <comma-separated pulse specs in application order>
    [sweep]      N = <list>;  gamma_t = <list>;  refinement settings
    [run]        trials, master_seed, out, threads

Lists are comma separated (``2, 4, 8``) or ``start:stop:count`` for evenly
spaced values including both ends.  ``pi`` is accepted wherever a number is.
See ``configs/README.md`` for the full key reference.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError

__all__ = ["ExperimentConfig", "Section", "load_config", "parse_config"]

SCENARIOS = ("two_qubit", "spin_bath", "oscillator")
_SECTIONS = ("scenario", "noise", "scheme", "sweep", "run")


def _number(text: str) -> float:
    text = text.strip()
    if text.lower() in ("pi", "+pi"):
        return math.pi
    if text.lower() == "-pi":
        return -math.pi
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


@dataclass
class Section:
    """Typed read access to one config section with field-level diagnostics."""

    name: str
    values: dict
    used: set = field(default_factory=set)

    def _where(self, key: str) -> str:
        return f"[{self.name}] {key}"

    def has(self, key: str) -> bool:
        return key in self.values

    def raw(self, key: str, default=None):
        self.used.add(key)
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self._where(key)}: missing required value")
            return default
        return self.values[key]

    def float(self, key: str, default=None, minimum=None) -> float:
        text = self.raw(key, None if default is None else str(default))
        try:
            value = _number(text)
        except ValueError:
            raise ConfigError(f"{self._where(key)}: expected a number, got {text!r}") from None
        if minimum is not None and value < minimum:
            raise ConfigError(f"{self._where(key)}: must be >= {minimum}, got {value}")
        return value

    def int(self, key: str, default=None, minimum=None) -> int:
        text = self.raw(key, None if default is None else str(default))
        try:
            value = int(text.strip())
        except ValueError:
            raise ConfigError(f"{self._where(key)}: expected an integer, got {text!r}") from None
        if minimum is not None and value < minimum:
            raise ConfigError(f"{self._where(key)}: must be >= {minimum}, got {value}")
        return value

    def str(self, key: str, default=None, choices=None) -> str:
        value = self.raw(key, default).strip()
        if choices is not None and value not in choices:
            raise ConfigError(f"{self._where(key)}: expected one of {', '.join(choices)}, got {value!r}")
        return value

    def floats(self, key: str, default=None, minimum=None) -> list[float]:
        text = self.raw(key, default).strip()
        try:
            if ":" in text:
                start, stop, count = text.split(":")
                n = int(count)
                if n < 1:
                    raise ValueError
                values = [float(v) for v in np.linspace(_number(start), _number(stop), n)]
            else:
                values = [_number(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"{self._where(key)}: expected a list of numbers, got {text!r}") from None
        if not values:
            raise ConfigError(f"{self._where(key)}: empty list")
        if minimum is not None and min(values) < minimum:
            raise ConfigError(f"{self._where(key)}: every value must be >= {minimum}")
        return values

    def ints(self, key: str, default=None, minimum=None) -> list[int]:
        text = self.raw(key, default).strip()
        try:
            values = [int(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"{self._where(key)}: expected a list of integers, got {text!r}") from None
        if not values:
            raise ConfigError(f"{self._where(key)}: empty list")
        if minimum is not None and min(values) < minimum:
            raise ConfigError(f"{self._where(key)}: every value must be >= {minimum}")
        return values


@dataclass
class ExperimentConfig:
    """Parsed configuration plus the run settings that CLI flags may override."""

    scenario_name: str
    scenario: Section
    noise: Section
    scheme: Section
    sweep: Section
    trials: int
    master_seed: int
    out: str | None
    threads: int
    sha256: str

    def with_overrides(self, seed=None, trials=None, out=None, threads=None) -> "ExperimentConfig":
        if trials is not None and trials < 1:
            raise ConfigError("--trials: must be >= 1")
        if threads is not None and threads < 1:
            raise ConfigError("--threads: must be >= 1")
        if seed is not None and not 0 <= seed < 2**64:
            raise ConfigError("--seed: must be a 64-bit unsigned integer")
        return ExperimentConfig(
            self.scenario_name,
            self.scenario,
            self.noise,
            self.scheme,
            self.sweep,
            self.trials if trials is None else trials,
            self.master_seed if seed is None else seed,
            self.out if out is None else out,
            self.threads if threads is None else threads,
            self.sha256,
        )


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (K, N, B)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = [s for s in parser.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    sections = {name: Section(name, dict(parser[name]) if parser.has_section(name) else {}) for name in _SECTIONS}
    scenario = sections["scenario"]
    name = scenario.str("name", choices=SCENARIOS)
    run = sections["run"]
    trials = run.int("trials", default=1, minimum=1)
    seed = run.int("master_seed", default=0, minimum=0)
    if seed >= 2**64:
        raise ConfigError("[run] master_seed: must fit in 64 bits")
    out = run.values.get("out")
    threads = run.int("threads", default=1, minimum=1)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return ExperimentConfig(
        name, scenario, sections["noise"], sections["scheme"], sections["sweep"],
        trials, seed, out.strip() if out else None, threads, digest,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
