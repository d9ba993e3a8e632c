"""Experiment configuration: INI schema, validation, overrides, hashing.

A run is described by a flat two-level INI file.  Every key has a typed
default; unknown sections or keys are rejected so typos fail loudly rather
than silently falling back.  The effective configuration (defaults merged
with the file and any command line overrides) can be hashed canonically,
which is what makes result manifests reproducible byte for byte.
"""

from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

from .model import ParameterError, make_params

__all__ = [
    "ConfigError",
    "SCHEMA",
    "EXPERIMENT_KINDS",
    "default_config",
    "load_config",
    "apply_overrides",
    "validate_config",
    "config_hash",
    "config_text",
]


class ConfigError(ValueError):
    """Malformed, unknown, or out-of-range configuration input."""


EXPERIMENT_KINDS = (
    "spectral-checks",
    "semigroup-checks",
    "trajectory",
    "shoot",
    "physical",
    "stability",
    "full-pipeline",
)

_BC_CHOICES = ("dirichlet-profile", "extrapolation", "dirichlet-zero")
_SCHEME_CHOICES = ("semigroup-split", "imex-cn")

# section -> key -> (type, default).  Booleans accept true/false/1/0/yes/no.
SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "model": {
        "p": (float, 2.0),
        "alpha": (float, 0.0),
        "alpha_bar": (float, 0.0),
        "mu": (float, 0.0),
        "mu_bar": (float, 0.0),
        "mu0": (float, 0.0),
    },
    "grid": {
        "dy": (float, 0.05),
        "y_max": (float, 0.0),  # 0 means: derive from K0 and the final time
    },
    "trap": {
        "A": (float, 8.0),
        "K0": (float, 4.0),
    },
    "solver": {
        "ds": (float, 0.01),
        "scheme": (str, "semigroup-split"),
        "bc": (str, "dirichlet-profile"),
        "include_potential": (bool, True),
        "include_nonlinear": (bool, True),
        "include_residual": (bool, True),
        "include_perturbation": (bool, True),
    },
    "trajectory": {
        "d0": (float, 0.0),
        "d1": (float, 0.0),
        "s0": (float, 20.0),
        "s_end": (float, 23.0),
        "record_stride": (int, 1),
    },
    "shooting": {
        "s0": (float, 20.0),
        "s_end": (float, 26.0),
        "ds": (float, 0.02),
        "max_levels": (int, 64),
    },
    "physical": {
        "s0": (float, 20.0),
        "d0": (float, 0.0),
        "d1": (float, 0.0),
        "z_max": (float, 30.0),
        "n_x": (int, 1601),
        "cfl": (float, 0.2),
        "lam": (float, 0.01),
        "stop_factor": (float, 1e4),
        "fit_lo": (float, 30.0),
        "fit_hi": (float, 300.0),
        "t_rel_tol": (float, 0.0),  # 0 disables the blow-up-time check
        "t_budget": (float, 0.0),  # 0 disables; else give up (non-blowup) at this t
        "dt0": (float, 0.0),  # 0 disables; else extra cap on the time step
    },
    "experiment": {
        "kind": (str, "trajectory"),
        # reserved: every experiment is deterministic, but the key is kept so
        # configs stay forward compatible (it participates in the hash)
        "seed": (int, 0),
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def default_config() -> dict:
    return {sec: {k: v for k, (_, v) in keys.items()} for sec, keys in SCHEMA.items()}


def _parse_value(section: str, key: str, raw: str):
    typ, _ = SCHEMA[section][key]
    raw = raw.strip()
    if typ is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: expected {typ.__name__}, got {raw!r}"
        ) from None
    return raw


def load_config(path: str | Path) -> dict:
    """Parse an INI file onto the schema defaults."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(path.read_text())
    except configparser.Error as err:
        raise ConfigError(f"could not parse {path}: {err}") from None
    cfg = default_config()
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]; known sections: {', '.join(SCHEMA)}"
            )
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]; known keys: "
                    f"{', '.join(SCHEMA[section])}"
                )
            cfg[section][key] = _parse_value(section, key, raw)
    return cfg


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply command line `section.key=value` assignments in order."""
    for item in overrides:
        head, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, dot, key = head.strip().partition(".")
        if not dot or section not in SCHEMA or key not in SCHEMA.get(section, {}):
            raise ConfigError(f"override target {head.strip()!r} is not a known key")
        cfg[section][key] = _parse_value(section, key, raw)
    return cfg


def validate_config(cfg: dict) -> None:
    """Range and choice checks beyond plain typing."""

    def bad(section: str, key: str, why: str):
        raise ConfigError(f"[{section}] {key}: {why} (got {cfg[section][key]!r})")

    m = cfg["model"]
    if m["p"] <= 1.0:
        bad("model", "p", "must be > 1")
    try:
        make_params(
            p=m["p"],
            alpha=m["alpha"],
            alpha_bar=m["alpha_bar"],
            mu=m["mu"],
            mu_bar=m["mu_bar"],
            mu0=m["mu0"],
        )
    except ParameterError as err:
        raise ConfigError(f"[model] {err}") from None
    if cfg["grid"]["dy"] <= 0:
        bad("grid", "dy", "must be > 0")
    if cfg["grid"]["y_max"] < 0:
        bad("grid", "y_max", "must be >= 0 (0 derives it from the trap)")
    if cfg["trap"]["A"] < 1:
        bad("trap", "A", "must be >= 1")
    if cfg["trap"]["K0"] <= 0:
        bad("trap", "K0", "must be > 0")
    if not 0 < cfg["solver"]["ds"] <= 0.5:
        bad("solver", "ds", "must be in (0, 0.5]")
    if cfg["solver"]["scheme"] not in _SCHEME_CHOICES:
        bad("solver", "scheme", f"must be one of {_SCHEME_CHOICES}")
    if cfg["solver"]["bc"] not in _BC_CHOICES:
        bad("solver", "bc", f"must be one of {_BC_CHOICES}")
    for sec in ("trajectory", "shooting"):
        if cfg[sec]["s_end"] <= cfg[sec]["s0"]:
            bad(sec, "s_end", f"must exceed [{sec}] s0")
        if cfg[sec]["s0"] < 2.8:
            bad(sec, "s0", "must be >= e")
    if cfg["trajectory"]["record_stride"] < 1:
        bad("trajectory", "record_stride", "must be >= 1")
    if not 0 < cfg["shooting"]["ds"] <= 0.5:
        bad("shooting", "ds", "must be in (0, 0.5]")
    if cfg["shooting"]["max_levels"] < 1:
        bad("shooting", "max_levels", "must be >= 1")
    ph = cfg["physical"]
    if ph["n_x"] < 17 or ph["n_x"] % 2 == 0:
        bad("physical", "n_x", "must be an odd integer >= 17")
    if not 1.0 < ph["fit_lo"] < ph["fit_hi"] < ph["stop_factor"]:
        bad("physical", "fit_hi", "need 1 < fit_lo < fit_hi < stop_factor")
    if ph["t_rel_tol"] < 0:
        bad("physical", "t_rel_tol", "must be >= 0")
    if ph["t_budget"] < 0:
        bad("physical", "t_budget", "must be >= 0 (0 disables)")
    if ph["dt0"] < 0:
        bad("physical", "dt0", "must be >= 0 (0 disables)")
    if cfg["experiment"]["kind"] not in EXPERIMENT_KINDS:
        bad("experiment", "kind", f"must be one of {EXPERIMENT_KINDS}")


def _canon(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_text(cfg: dict) -> str:
    """Canonical flat rendering, one sorted `section.key=value` per line."""
    lines = [
        f"{section}.{key}={_canon(cfg[section][key])}"
        for section in sorted(cfg)
        for key in sorted(cfg[section])
    ]
    return "\n".join(lines) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()
