"""Scenario documents and environment settings.

A config document is flat `key = value` text with `#` comments, read with
python-dotenv's parser so every binding keeps its line number:

    N = 128
    P_dBm = 20          # 100 mW
    kappa_db = 10
    scheme = codebook
    l = 9
    d = 1

Table values given in dB/dBm use suffixed keys (beta_r_db, P_dBm); giving both
forms of one quantity is an error.
"""
import io
import math
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv
from dotenv.parser import parse_stream
from pydantic import ValidationError

from ris_feedback.analysis import rician_factor_3gpp
from ris_feedback.montecarlo import Scenario
from ris_feedback.utils import dbm_to_watts, from_db

root_dir = Path(__file__).resolve().parent.parent


class ConfigError(ValueError):
    """Invalid scenario document; carries the offending line and field when known."""

    def __init__(self, reason: str, line: int | None = None, field: str | None = None):
        self.reason = reason
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + reason)


def _integer(text: str) -> int:
    return int(text.strip())


def _number(text: str) -> float:
    return float(text.strip())


def _milliwatts(text: str) -> float:
    return _number(text) / 1000.0


# Scenario field -> accepted document keys and their converters to linear units.
FIELD_SOURCES = {
    "K": {"K": _integer},
    "N": {"N": _integer},
    "trials": {"trials": _integer},
    "master_seed": {"seed": _integer},
    "P": {"P": _number, "P_dBm": lambda v: dbm_to_watts(_number(v)), "P_mW": _milliwatts},
    "sigma2": {"sigma2": _number, "sigma2_dBm": lambda v: dbm_to_watts(_number(v))},
    "beta_r": {"beta_r": _number, "beta_r_db": lambda v: from_db(_number(v))},
    "beta_t": {"beta_t": _number, "beta_t_db": lambda v: from_db(_number(v))},
    "rho": {"rho": _number, "rho_db": lambda v: from_db(_number(v))},
    "kappa": {
        "kappa": _number,
        "kappa_db": lambda v: from_db(_number(v)),
        "ue_ris_distance_m": lambda v: rician_factor_3gpp(_number(v)),
    },
    "theta1": {"theta1": _number},
    "theta2": {"theta2": _number},
    "varphi": {"varphi": _number},
}
SCHEME_KEYS = {"scheme": str.strip, "l": _integer, "d": _integer, "b": _integer}
SCHEME_FIELDS = {"ideal": set(), "codebook": {"l", "d"}, "elementwise": {"b"}}

_KEY_LOOKUP = {key.lower(): (target, key) for target, keys in FIELD_SOURCES.items() for key in keys}
_KEY_LOOKUP.update({key: ("scheme", key) for key in SCHEME_KEYS})


def _read_bindings(text: str) -> dict[str, tuple[str, int]]:
    """Canonical key -> (raw value, line)."""
    bindings = {}
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigError(f"cannot parse '{binding.original.string.strip()}'", line=line)
        if binding.key is None:
            continue
        match = _KEY_LOOKUP.get(binding.key.lower())
        if match is None:
            raise ConfigError("unknown key", line=line, field=binding.key)
        key = match[1]
        if binding.value is None or not binding.value.strip():
            raise ConfigError("missing value", line=line, field=key)
        if key in bindings:
            raise ConfigError(f"duplicate key, first given on line {bindings[key][1]}", line=line, field=key)
        bindings[key] = (binding.value, line)
    return bindings


def _convert(key: str, converter, raw: str, line: int):
    try:
        return converter(raw)
    except ValueError as e:
        raise ConfigError(f"'{raw.strip()}' is not a valid value ({e})", line=line, field=key)


def _scheme_fields(bindings) -> dict:
    present = {key: _convert(key, SCHEME_KEYS[key], *bindings[key]) for key in SCHEME_KEYS if key in bindings}
    kind = present.pop("scheme", None)
    if kind is None:
        kind = "codebook" if ("l" in present or "d" in present) else "elementwise" if "b" in present else "ideal"
    if kind not in SCHEME_FIELDS:
        raise ConfigError(f"unknown scheme '{kind}' (expected ideal, codebook or elementwise)",
                          line=bindings["scheme"][1], field="scheme")
    for key in present:
        if key not in SCHEME_FIELDS[kind]:
            raise ConfigError(f"not used by the {kind} scheme", line=bindings[key][1], field=key)
    return {"kind": kind, **present}


def parse_config(text: str) -> Scenario:
    """Build a validated Scenario; unspecified fields keep the simulation-table defaults."""
    bindings = _read_bindings(text)
    values = {}
    origin = {}
    for target, sources in FIELD_SOURCES.items():
        given = [key for key in sources if key in bindings]
        if len(given) > 1:
            raise ConfigError(f"ambiguous: also given as '{given[0]}'", line=bindings[given[1]][1], field=given[1])
        if given:
            key = given[0]
            values[target] = _convert(key, sources[key], *bindings[key])
            origin[target] = (key, bindings[key][1])
    values["scheme"] = _scheme_fields(bindings)

    try:
        return Scenario.model_validate(values)
    except ValidationError as e:
        error = e.errors()[0]
        loc = [part for part in error["loc"] if isinstance(part, str)]
        name = loc[-1] if loc else "scenario"
        if loc and loc[0] in origin:
            key, line = origin[loc[0]]
        elif name in bindings:
            key, line = name, bindings[name][1]
        else:
            key, line = name, None
        raise ConfigError(error["msg"], line=line, field=key)


def load_config(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}")
    return parse_config(text)


def apply_overrides(scenario: Scenario, **overrides) -> Scenario:
    """Re-validate the scenario with non-None overrides (e.g. --trials, --seed)."""
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return scenario
    try:
        return Scenario.model_validate({**scenario.model_dump(), **updates})
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"])
        raise ConfigError(error["msg"], field=field)


# ============================================================================
# ENVIRONMENT
# ============================================================================
@dataclass(frozen=True)
class Settings:
    threads: int
    ledger_enabled: bool
    ledger_path: Path


def load_settings() -> Settings:
    """Read RIS_* variables, after loading a .env file if one is present."""
    load_dotenv()
    raw_threads = os.getenv("RIS_THREADS", "1")
    try:
        threads = int(raw_threads)
    except ValueError:
        raise ConfigError(f"'{raw_threads}' is not an integer", field="RIS_THREADS")
    return Settings(
        threads=threads,
        ledger_enabled=os.getenv("RIS_LEDGER", "false").lower() == "true",
        ledger_path=Path(os.getenv("RIS_LEDGER_PATH", str(root_dir / "data" / "runs.duckdb"))),
    )


def describe(scenario: Scenario) -> str:
    """One-line human summary of the parameters that shape the result."""
    kappa = "pure LoS" if math.isinf(scenario.kappa) else f"kappa={scenario.kappa:g}"
    return (f"K={scenario.K} N={scenario.N} {kappa} rho={scenario.rho:g} "
            f"trials={scenario.trials} seed={scenario.master_seed}")
