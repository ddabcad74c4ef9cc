"""Run configuration: a TOML document merged over documented defaults.

Every key has a default below; keys that do not appear in DEFAULTS are
rejected. Command-line flags are applied on top of the merged document.
"""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import fields

from .errors import InvalidInputError, ParseError
from .reactor import DEFAULT_DECAY, DEFAULT_DROP_DURATION, DEFAULT_GENERATION_TIME, DEFAULT_WORTH_MK
from .reactor import PointKineticsParams, STANDARD_DROPS, STANDARD_POWERS
from .servo import DEFAULT_TARGET, DEFAULT_VELOCITIES, STANDARD_ACCELERATIONS
from .training import LmParams, MomentumParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SEED_ENV = "OPIDENT_SEED"


def _param_defaults(cls) -> dict:
    inst = cls()
    return {f.name: getattr(inst, f.name) for f in fields(cls)}


DEFAULTS = {
    "seed": 0,
    "reactor": {
        "worth_mk": DEFAULT_WORTH_MK,
        "drop_duration_s": DEFAULT_DROP_DURATION,
        "initial_powers": list(STANDARD_POWERS),
        "drops": list(STANDARD_DROPS),
        "beta": list(PointKineticsParams().beta),
        "decay": list(DEFAULT_DECAY),
        "generation_time": DEFAULT_GENERATION_TIME,
        "dt_int": 1e-3,
    },
    "servo": {
        "velocities": list(DEFAULT_VELOCITIES),
        "accelerations": list(STANDARD_ACCELERATIONS),
        "target_position": DEFAULT_TARGET,
    },
    "data": {
        "stride": 1,
    },
    "network": {
        "hidden": [[15, "tansig"]],
        "output_activation": "linear",
    },
    "trainer": {
        "name": "lm",
        "lm": _param_defaults(LmParams),
        "momentum": _param_defaults(MomentumParams),
    },
    "sweep": {
        "layer_counts": [1, 2],
        "neuron_counts": [5, 10, 15, 20, 25],
        "activations": ["tansig", "logsig"],
        "runs": 20,
        "workers": 0,
    },
}


class ConfigError(InvalidInputError):
    """A configuration value is unknown or invalid; ``field`` names the dotted key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


def _merge(base: dict, override: dict, prefix=""):
    for key, value in override.items():
        name = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(name, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(name, "expected a table")
            _merge(base[key], value, name + ".")
        else:
            base[key] = value


def load_config(path=None, overrides=None) -> dict:
    """Defaults, then the TOML file at ``path``, then ``overrides`` (same nesting).

    The seed falls back to the OPIDENT_SEED environment variable when neither
    the file nor the overrides set it.
    """
    cfg = copy.deepcopy(DEFAULTS)
    file_cfg = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                file_cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(str(exc), path=path) from None
    _merge(cfg, file_cfg)
    overrides = overrides or {}
    _merge(cfg, overrides)
    if "seed" not in file_cfg and "seed" not in overrides and os.environ.get(SEED_ENV):
        try:
            cfg["seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(SEED_ENV, "must be an integer") from None
    validate(cfg)
    return cfg


def _require(cond, field, message):
    if not cond:
        raise ConfigError(field, message)


def validate(cfg: dict):
    seed = cfg["seed"]
    _require(isinstance(seed, int) and 0 <= seed < 2 ** 64, "seed", "must be an unsigned 64-bit integer")

    r = cfg["reactor"]
    for p in r["initial_powers"]:
        _require(p in STANDARD_POWERS, "reactor.initial_powers",
                 f"{p} is not one of {list(STANDARD_POWERS)}")
    for d in r["drops"]:
        _require(d in STANDARD_DROPS, "reactor.drops", f"drop_pct {d} is not one of {list(STANDARD_DROPS)}")
    _require(r["worth_mk"] <= 0, "reactor.worth_mk", "rod worth must be non-positive")
    _require(r["drop_duration_s"] >= 0, "reactor.drop_duration_s", "must be >= 0")
    _require(r["dt_int"] > 0, "reactor.dt_int", "must be > 0")
    _require(len(r["beta"]) == len(r["decay"]) > 0, "reactor.beta", "beta and decay need equal non-zero length")

    s = cfg["servo"]
    for a in s["accelerations"]:
        _require(a in STANDARD_ACCELERATIONS, "servo.accelerations",
                 f"{a} is not one of {list(STANDARD_ACCELERATIONS)}")
    _require(all(v > 0 for v in s["velocities"]), "servo.velocities", "must be positive")
    _require(s["target_position"] > 0, "servo.target_position", "must be positive")

    _require(isinstance(cfg["data"]["stride"], int) and cfg["data"]["stride"] >= 1, "data.stride",
             "must be an integer >= 1")

    _require(len(cfg["network"]["hidden"]) >= 1, "network.hidden", "need at least one hidden layer")
    _require(cfg["trainer"]["name"] in ("lm", "momentum"), "trainer.name", "must be 'lm' or 'momentum'")

    sw = cfg["sweep"]
    _require(isinstance(sw["runs"], int) and sw["runs"] >= 1, "sweep.runs", "must be an integer >= 1")
    _require(isinstance(sw["workers"], int) and sw["workers"] >= 0, "sweep.workers", "must be >= 0")
    _require(all(k in (1, 2) for k in sw["layer_counts"]) and sw["layer_counts"], "sweep.layer_counts",
             "entries must be 1 or 2")
    _require(all(n >= 1 for n in sw["neuron_counts"]) and sw["neuron_counts"], "sweep.neuron_counts",
             "entries must be positive")
    _require(set(sw["activations"]) <= {"tansig", "logsig"} and sw["activations"], "sweep.activations",
             "entries must be 'tansig' or 'logsig'")


def trainer_params(cfg: dict):
    name = cfg["trainer"]["name"]
    cls = LmParams if name == "lm" else MomentumParams
    try:
        return cls(**cfg["trainer"][name])
    except InvalidInputError as exc:
        raise ConfigError(f"trainer.{name}", str(exc)) from None


def kinetics_params(cfg: dict) -> PointKineticsParams:
    r = cfg["reactor"]
    try:
        return PointKineticsParams(tuple(r["beta"]), tuple(r["decay"]), r["generation_time"])
    except InvalidInputError as exc:
        raise ConfigError("reactor", str(exc)) from None
