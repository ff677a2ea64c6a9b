"""Scenario configuration: dataclasses, validation and TOML round-trip."""
from __future__ import annotations

import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .signal_model import code_capacity

__all__ = [
    "ConfigError",
    "AlgorithmConfig",
    "Event",
    "ScenarioConfig",
    "ALGORITHM_KINDS",
    "load_config",
    "dump_config",
    "config_from_dict",
]

ALGORITHM_KINDS = ("ctvff", "gvff", "fixed", "sg", "rake")

# parameters read by each receiver kind
_KIND_PARAMS = {
    "ctvff": ("lambda_minus", "lambda_plus", "delta1", "delta2", "delta3", "error_mode"),
    "gvff": ("lambda_minus", "lambda_plus", "lambda0", "mu"),
    "fixed": ("lam",),
    "sg": ("step",),
    "rake": (),
}
_LABELS = {"ctvff": "CTVFF", "gvff": "GVFF", "fixed": "fixed", "sg": "SG", "rake": "Rake"}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class AlgorithmConfig:
    kind: str
    name: str = ""
    lam: float = 0.997
    step: float = 0.025
    mu: float = 0.0025
    lambda0: float = 0.998
    lambda_minus: float = 0.98
    lambda_plus: float = 0.99998
    delta1: float = 0.934
    delta2: float = 0.005
    delta3: float = 0.99
    error_mode: str = "a_priori"

    @property
    def label(self) -> str:
        return self.name or _LABELS.get(self.kind, self.kind)

    def problems(self) -> list[str]:
        where = f"algorithm {self.label!r}"
        if self.kind not in ALGORITHM_KINDS:
            return [f"{where}: kind must be one of {ALGORITHM_KINDS}, got {self.kind!r}"]
        out = []
        if self.kind == "ctvff":
            if not 0 < self.delta1 < 1:
                out.append(f"{where}: delta1 must lie in (0,1), got {self.delta1}")
            if not self.delta2 > 0:
                out.append(f"{where}: delta2 must be > 0, got {self.delta2}")
            if not 0 < self.delta3 < 1:
                out.append(f"{where}: delta3 must lie in (0,1), got {self.delta3}")
            if self.error_mode not in ("a_priori", "a_posteriori"):
                out.append(f"{where}: error_mode must be a_priori or a_posteriori")
        if self.kind in ("ctvff", "gvff"):
            if not 0 < self.lambda_minus <= self.lambda_plus <= 1:
                out.append(f"{where}: need 0 < lambda_minus <= lambda_plus <= 1")
        if self.kind == "gvff":
            if not self.lambda_minus <= self.lambda0 <= self.lambda_plus:
                out.append(f"{where}: lambda0 must lie in [lambda_minus, lambda_plus]")
            if self.mu < 0:
                out.append(f"{where}: mu must be >= 0")
        if self.kind == "fixed" and not 0 < self.lam <= 1:
            out.append(f"{where}: lam must lie in (0,1], got {self.lam}")
        if self.kind == "sg" and not self.step > 0:
            out.append(f"{where}: step must be > 0, got {self.step}")
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.name:
            d["name"] = self.name
        for key in _KIND_PARAMS.get(self.kind, ()):
            d[key] = getattr(self, key)
        return d


@dataclass(frozen=True)
class Event:
    """Users joining after ``symbol_index`` symbols, with their power offsets in dB."""

    symbol_index: int
    power_offsets_db: tuple = ()

    @property
    def users_added(self) -> int:
        return len(self.power_offsets_db)


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one experiment.

    Power offsets are in dB relative to the desired user (user 0, unit power).
    Symbols are numbered from 1; an event at ``symbol_index = s`` means the new
    users transmit from symbol ``s + 1`` onwards.
    """

    N: int = 15
    L_p: int = 3
    profile_db: tuple = (0.0, -6.0, -10.0)
    K_initial: int = 6
    power_offsets_db: tuple = (0.0, 3.0, 3.0, 6.0, 0.0, 0.0)
    snr_db: float = 15.0
    f_dT: float = 1e-5
    algorithms: tuple = (AlgorithmConfig("ctvff"),)
    training_symbols: int = 250
    total_symbols: int = 1500
    events: tuple = ()
    runs: int = 200
    seed: int = 0
    code_file: str | None = None

    @property
    def M(self) -> int:
        return self.N + self.L_p - 1

    @property
    def K_total(self) -> int:
        return self.K_initial + sum(ev.users_added for ev in self.events)

    def all_power_offsets_db(self) -> list[float]:
        out = list(self.power_offsets_db)
        for ev in self.events:
            out.extend(ev.power_offsets_db)
        return out

    def entry_symbols(self) -> list[int]:
        """First symbol at which each user transmits."""
        out = [1] * self.K_initial
        for ev in self.events:
            out.extend([ev.symbol_index + 1] * ev.users_added)
        return out

    def problems(self) -> list[str]:
        out = []
        if self.N < 2:
            out.append(f"N must be >= 2, got {self.N}")
        if self.L_p < 1:
            out.append(f"L_p must be >= 1, got {self.L_p}")
        if len(self.profile_db) != self.L_p:
            out.append(f"profile_db needs L_p={self.L_p} entries, got {len(self.profile_db)}")
        if self.K_initial < 1:
            out.append(f"K_initial must be >= 1, got {self.K_initial}")
        if len(self.power_offsets_db) != self.K_initial:
            out.append(f"power_offsets_db needs K_initial={self.K_initial} entries, "
                       f"got {len(self.power_offsets_db)}")
        elif self.power_offsets_db and self.power_offsets_db[0] != 0:
            out.append("power_offsets_db[0] (desired user) must be 0 dB")
        if self.f_dT < 0:
            out.append(f"f_dT must be >= 0, got {self.f_dT}")
        if self.total_symbols < 1:
            out.append("total_symbols must be >= 1")
        if not 0 <= self.training_symbols <= self.total_symbols:
            out.append(f"training_symbols ({self.training_symbols}) must not exceed "
                       f"total_symbols ({self.total_symbols})")
        if self.runs < 1:
            out.append(f"runs must be >= 1, got {self.runs}")
        prev = 0
        for ev in self.events:
            if ev.symbol_index <= prev:
                out.append("event symbol indices must be positive and strictly increasing")
            if ev.symbol_index >= self.total_symbols:
                out.append(f"event at symbol {ev.symbol_index} is past total_symbols")
            if ev.users_added < 1:
                out.append(f"event at symbol {ev.symbol_index} adds no users")
            prev = ev.symbol_index
        if self.code_file is None and self.N >= 2 and self.K_total > code_capacity(self.N):
            out.append(f"K after all events ({self.K_total}) exceeds the code family "
                       f"capacity {code_capacity(self.N)} for N={self.N}")
        if not self.algorithms:
            out.append("at least one algorithm is required")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            out.append(f"algorithm names must be unique, got {labels}")
        for alg in self.algorithms:
            out.extend(alg.problems())
        return out

    def validate(self) -> "ScenarioConfig":
        probs = self.problems()
        if probs:
            raise ConfigError(probs)
        return self

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "algorithms":
                v = [a.to_dict() for a in v]
            elif f.name == "events":
                v = [{"symbol_index": e.symbol_index, "power_offsets_db": list(e.power_offsets_db)}
                     for e in v]
            elif isinstance(v, tuple):
                v = list(v)
            if v is None:
                continue
            d[f.name] = v
        return d

    def with_changes(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def config_from_dict(d: dict) -> ScenarioConfig:
    """Build and validate a :class:`ScenarioConfig`, reporting every bad field."""
    d = dict(d)
    problems = []
    known = {f.name for f in fields(ScenarioConfig)}
    for key in sorted(set(d) - known):
        problems.append(f"unknown field {key!r}")
    algs = []
    alg_known = {f.name for f in fields(AlgorithmConfig)}
    for j, a in enumerate(d.pop("algorithms", [{"kind": "ctvff"}])):
        extra = set(a) - alg_known
        if extra:
            problems.append(f"algorithms[{j}]: unknown field(s) {sorted(extra)}")
        if "kind" not in a:
            problems.append(f"algorithms[{j}]: missing 'kind'")
            continue
        algs.append(AlgorithmConfig(**{k: v for k, v in a.items() if k in alg_known}))
    events = []
    for j, e in enumerate(d.pop("events", [])):
        try:
            events.append(Event(int(e["symbol_index"]), tuple(float(x) for x in e["power_offsets_db"])))
        except (KeyError, TypeError, ValueError):
            problems.append(f"events[{j}]: need symbol_index and power_offsets_db")
    kw = {k: v for k, v in d.items() if k in known}
    for key in ("profile_db", "power_offsets_db"):
        if key in kw:
            kw[key] = tuple(float(x) for x in kw[key])
    cfg = ScenarioConfig(**kw, algorithms=tuple(algs), events=tuple(events))
    problems.extend(cfg.problems())
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> ScenarioConfig:
    """Read a TOML scenario file. Raises ``FileNotFoundError`` or :class:`ConfigError`."""
    path = Path(path)
    with path.open("rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"{path}: {exc}"]) from exc
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())
