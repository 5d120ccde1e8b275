"""Experiment configuration: one INI file with an ``[experiment]`` section.

Every default used by the command-line driver lives in ``ExperimentConfig``.
Keys not listed there are rejected.  ``q`` may be given directly or as
``q_angle`` (in units of pi), meaning q = sin^2(q_angle * pi).
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Optional

SECTION = "experiment"


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass
class ExperimentConfig:
    # problem
    graph_kind: str = "paw"
    graph_file: Optional[str] = None
    edges: Optional[int] = None
    columns: Optional[int] = None
    vertices: Optional[int] = None
    degree: float = 2.5
    graph_seed: int = 0
    q: Optional[float] = None
    q_angle: Optional[float] = None
    # algorithm
    algorithm: str = "aqo"
    engine: str = "subspace"
    eta2: float = 0.5
    dt: float = 0.1
    total_time: Optional[float] = None
    steps: Optional[int] = None
    schedule: str = "linear"
    refine: bool = True
    per_state: bool = False
    grid: int = 64
    sweeps: int = 3
    alpha: Optional[float] = None
    beta: Optional[float] = None
    # statistics
    epsilon: float = 0.05
    delta: float = 0.05
    M: int = 16
    S: int = 8
    statistic: str = "pairs"
    source: str = "exact"
    trials: int = 1
    seed: int = 0
    # caps
    exhaustive_limit: int = 24
    qaoa_cap: int = 2000
    aqo_max_doublings: int = 30
    measurement_budget: int = 10_000_000
    omcs_budget: int = 100_000_000
    # spectra and scans
    max_moment: int = 2
    resolution: int = 1024
    # cost model
    ancilla_policy: str = "with_ancillas"
    c1: float = 16.0
    c2: float = 8.0
    # studies
    study: str = "aqo-family"
    family: str = "linear"
    sizes: str = "4:12"
    instances: int = 30
    grover_time_min: float = 10.0
    grover_time_max: float = 500.0
    depth_limit: int = 1000
    P_max: float = 0.1
    P_min: float = 1e-4

    @property
    def eta(self) -> float:
        return math.sqrt(self.eta2)

    @property
    def weight_q(self) -> float:
        if self.q is not None:
            return self.q
        if self.q_angle is not None:
            return math.sin(self.q_angle * math.pi) ** 2
        return 0.5

    def size_list(self) -> list[int]:
        return parse_sizes(self.sizes)

    def validate(self) -> "ExperimentConfig":
        checks = [
            (self.q is None or self.q_angle is None, "give q or q_angle, not both"),
            (0.0 <= self.weight_q <= 1.0, "q must lie in [0, 1]"),
            (0.0 < self.eta2 < 1.0, "eta2 must lie in (0, 1)"),
            (self.dt > 0, "dt must be positive"),
            (0.0 < self.epsilon < 1.0, "epsilon must lie in (0, 1)"),
            (0.0 < self.delta < 1.0, "delta must lie in (0, 1)"),
            (self.M >= 2 and self.S >= 1, "need M >= 2 and S >= 1"),
            (self.grid >= 2 and self.sweeps >= 0, "need grid >= 2 and sweeps >= 0"),
            (self.algorithm in ("grover", "aqo", "qaoa-greedy", "qaoa-constant", "omcs"), f"unknown algorithm {self.algorithm!r}"),
            (self.engine in ("full", "subspace"), f"unknown engine {self.engine!r}"),
            (self.schedule in ("linear", "alt_scaled"), f"unknown schedule {self.schedule!r}"),
            (self.statistic in ("pairs", "distinct"), f"unknown statistic {self.statistic!r}"),
            (self.source in ("exact", "evolved"), f"unknown source {self.source!r}"),
            (self.ancilla_policy in ("with_ancillas", "without_ancillas"), f"unknown ancilla policy {self.ancilla_policy!r}"),
            (self.trials >= 1, "trials must be >= 1"),
            (self.resolution >= 2, "resolution must be >= 2"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        try:
            self.size_list()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self


def parse_sizes(text: str) -> list[int]:
    """``"4:12"`` (inclusive), ``"4:20:2"`` or ``"7,10,13"``."""
    text = str(text).strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise ValueError(f"bad size range {text!r}")
        step = parts[2] if len(parts) == 3 else 1
        return list(range(parts[0], parts[1] + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


def _convert(field: dataclasses.Field, raw: str):
    kind = field.type if isinstance(field.type, str) else getattr(field.type, "__name__", str(field.type))
    if raw.strip().lower() in ("", "none") and "Optional" in kind:
        return None
    try:
        if "bool" in kind:
            return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{field.name}: cannot parse {raw!r} as {kind}") from exc
    return raw.strip()


def load_config(path: Optional[str] = None, overrides: Optional[list[str]] = None) -> ExperimentConfig:
    """Read the INI file (if any) and apply ``key=value`` overrides."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        extra = [s for s in parser.sections() if s != SECTION]
        if extra:
            raise ConfigError(f"unknown sections {extra}; use [{SECTION}]")
    values = dict(parser[SECTION]) if parser.has_section(SECTION) else {}
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        values[key.strip()] = value
    known = {f.name: f for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")
    kwargs = {k: _convert(known[k], v) for k, v in values.items()}
    return ExperimentConfig(**kwargs).validate()


def dump_config(cfg: ExperimentConfig) -> str:
    lines = [f"[{SECTION}]"]
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"
