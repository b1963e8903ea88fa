"""Flat ``key = value`` configuration files.

One assignment per line; ``#`` starts a comment.  Values may carry a unit
suffix, e.g. ``P = 30 dBm``, ``B = 200 kHz``, ``K = -10 dB``.  Unknown keys and
malformed values raise :class:`ConfigError` naming the key and line.

Documented keys (defaults in parentheses):

    R_D (60 m), d_PH (3 m), q_hit (0.7), P (30 dBm), B (200 kHz),
    f_c (2.1 GHz), lambda_w (0.03), sigma_c2 (-70 dBm), noise_figure (10 dB),
    zeta (0.8), rho (0.99), n_r (2), n_t (4), beta (2.5), K (-10 dB),
    W_max (6), xi (1e-28), k (20), N (600), M (32), f_max (1 GHz),
    level (0.75), trials (100000), seed (0)
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field

from .scenario import ComputeProfile, NetworkScenario, dbm_to_watt


class ConfigError(ValueError):
    pass


_POWER = {"dbm": dbm_to_watt, "w": lambda v: v,
          "mw": lambda v: v * 1e-3, "uw": lambda v: v * 1e-6}
_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_RATIO = {"db": lambda v: 10.0 ** (v / 10.0)}

# key -> (target field, kind)
_KEYS = {
    "R_D": ("scenario", "length"),
    "d_PH": ("scenario", "length"),
    "q_hit": ("scenario", "plain"),
    "P": ("scenario", "power"),
    "B": ("scenario", "freq"),
    "f_c": ("scenario", "freq"),
    "lambda_w": ("scenario", "plain"),
    "sigma_c2": ("scenario", "power"),
    "noise_figure": ("scenario", "db_value"),
    "zeta": ("scenario", "plain"),
    "rho": ("scenario", "plain"),
    "n_r": ("scenario", "int"),
    "n_t": ("scenario", "int"),
    "beta": ("scenario", "plain"),
    "K": ("scenario", "ratio"),
    "W_max": ("scenario", "int"),
    "xi": ("profile", "plain"),
    "k": ("profile", "plain"),
    "N": ("profile", "plain"),
    "M": ("profile", "plain"),
    "f_max": ("profile", "freq"),
    "level": ("solver", "plain"),
    "trials": ("solver", "int"),
    "seed": ("solver", "int"),
}
_SCENARIO_FIELD = {"noise_figure": "noise_figure_db"}

_VALUE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)$")


@dataclass(frozen=True)
class SolverSettings:
    level: float = 0.75
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: NetworkScenario = field(default_factory=NetworkScenario)
    profile: ComputeProfile = field(default_factory=ComputeProfile)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def as_dict(self) -> dict:
        prof = asdict(self.profile)
        prof.pop("k_tasks")
        return {"scenario": asdict(self.scenario), "profile": prof,
                "solver": asdict(self.solver)}

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _convert(key, kind, number, unit, where):
    u = unit.lower()
    if kind == "power":
        if u not in _POWER:
            raise ConfigError(f"{where}: {key} needs a power unit (dBm, W, mW, uW), got {unit!r}")
        return _POWER[u](number)
    if kind == "freq":
        if u == "":
            return number
        if u not in _FREQ:
            raise ConfigError(f"{where}: {key} has unknown frequency unit {unit!r}")
        return number * _FREQ[u]
    if kind == "ratio":
        if u == "":
            return number
        if u not in _RATIO:
            raise ConfigError(f"{where}: {key} has unknown ratio unit {unit!r}")
        return _RATIO[u](number)
    if kind == "db_value":
        if u not in ("", "db"):
            raise ConfigError(f"{where}: {key} is given in dB, got unit {unit!r}")
        return number
    if kind == "length":
        if u not in ("", "m"):
            raise ConfigError(f"{where}: {key} is a length in m, got unit {unit!r}")
        return number
    if u:
        raise ConfigError(f"{where}: {key} takes no unit, got {unit!r}")
    if kind == "int":
        if number != int(number):
            raise ConfigError(f"{where}: {key} must be an integer")
        return int(number)
    return number


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    groups: dict = {"scenario": {}, "profile": {}, "solver": {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        m = _VALUE.match(value)
        if not m:
            raise ConfigError(f"{where}: {key} has malformed value {value!r}")
        group, kind = _KEYS[key]
        groups[group][_SCENARIO_FIELD.get(key, key)] = _convert(
            key, kind, float(m.group(1)), m.group(2), where)
    try:
        return ScenarioConfig(scenario=NetworkScenario(**groups["scenario"]),
                              profile=ComputeProfile(**groups["profile"]),
                              solver=SolverSettings(**groups["solver"]))
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def documented_keys() -> list:
    return list(_KEYS)


