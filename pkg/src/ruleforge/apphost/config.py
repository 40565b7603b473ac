"""Runtime configuration: JSON file plus RULEFORGE_* environment overrides.

The file is a flat-ish JSON object; recognized keys below. Environment
variables override file values, with nested cost keys spelled as
RULEFORGE_COSTS_<KEY> (for example RULEFORGE_COSTS_NOT=4.5).
"""
from __future__ import annotations

import json
import os

from ..errors import RuleforgeError
from ..scoring import CostTable

ENV_PREFIX = "RULEFORGE_"

DEFAULTS = {
    "costs": {},
    "lambda": 1.0,
    "altP": 0.3,
    "quantP": 0.3,
    "specK": 5,
    "spanMaxLen": 7,
    "negCap": 16,
    "budget": 1000,
    "jobCap": 4,
    "dim": 1 << 18,
    "lrLow": 6e-6,
    "lrHigh": 3e-5,
    "lrScale": 2000.0,
    "seed": 1,
}

_FLOAT_KEYS = {"lambda", "altP", "quantP", "lrLow", "lrHigh", "lrScale"}
_INT_KEYS = {"specK", "spanMaxLen", "negCap", "budget", "jobCap", "dim", "seed"}


class ConfigError(RuleforgeError):
    pass


def load_config(path=None, env: dict | None = None) -> dict:
    config = {key: (dict(value) if isinstance(value, dict) else value) for key, value in DEFAULTS.items()}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid config JSON: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in payload.items():
            if key == "costs":
                if not isinstance(value, dict):
                    raise ConfigError("'costs' must be an object")
                config["costs"].update(value)
            elif key in DEFAULTS:
                config[key] = value
            else:
                raise ConfigError(f"unknown config key '{key}'")
    env = os.environ if env is None else env
    for raw_key, raw_value in env.items():
        if not raw_key.startswith(ENV_PREFIX):
            continue
        tail = raw_key[len(ENV_PREFIX):]
        if tail.upper().startswith("COSTS_"):
            config["costs"][tail[len("COSTS_"):].lower()] = float(raw_value)
            continue
        matched = None
        for key in DEFAULTS:
            if key.lower() == tail.lower():
                matched = key
                break
        if matched is None:
            raise ConfigError(f"unknown config variable '{raw_key}'")
        if matched in _FLOAT_KEYS:
            config[matched] = float(raw_value)
        elif matched in _INT_KEYS:
            config[matched] = int(raw_value)
        else:
            config[matched] = raw_value
    return config


def cost_table(config: dict) -> CostTable:
    return CostTable.default().with_overrides(config.get("costs", {}))
