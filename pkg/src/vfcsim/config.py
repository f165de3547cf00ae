"""Simulation config files: JSON schema validation and loading."""

from __future__ import annotations

import json
import os

import jsonschema

from .engine import SimConfig

_Q = {
    "type": "object",
    "properties": {
        k: {"type": "number", "minimum": 0, "maximum": 1}
        for k in ("same_vendor", "collab_single", "collab_multi")
    },
    "additionalProperties": False,
}

_MODEL = {
    "oneOf": [
        {"enum": ["FA", "EHB", "EBL"]},
        {
            "type": "object",
            "required": ["model"],
            "properties": {
                "model": {"enum": ["FA", "EHB", "EBL"]},
                "q": _Q,
                "scope": {"enum": ["individual", "team"]},
            },
            "additionalProperties": False,
        },
    ]
}

SCHEMA = {
    "type": "object",
    "required": ["network"],
    "additionalProperties": False,
    "properties": {
        "network": {
            "type": "object",
            "required": ["mode"],
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["config-model", "inflate", "edge-list", "graph"]},
                "degrees": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "n_users": {"type": "integer", "minimum": 1},
                "mean_degree": {"type": "number", "exclusiveMinimum": 0},
                "sigma": {"type": "number", "minimum": 0},
                "min_degree": {"type": "integer", "minimum": 0},
                "max_degree": {"type": "integer", "minimum": 0},
                "dataset": {"type": "string"},
                "path": {"type": "string"},
            },
            "allOf": [
                {"if": {"properties": {"mode": {"const": "config-model"}}},
                 "then": {"anyOf": [{"required": ["degrees"]}, {"required": ["n_users"]}]}},
                {"if": {"properties": {"mode": {"const": "inflate"}}},
                 "then": {"required": ["dataset", "n_users"]}},
                {"if": {"properties": {"mode": {"enum": ["edge-list", "graph"]}}},
                 "then": {"required": ["path"]}},
            ],
        },
        "catalog": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "n_apps": {"type": "integer", "minimum": 1},
                "zipf_exponent": {"type": "number", "minimum": 0},
                "apps_per_vendor_mean": {"type": "number", "minimum": 1},
                "related_size": {"type": "integer", "minimum": 0},
            },
        },
        "sharing": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dataset": {"type": "string"},
                "multi_collab_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "files_median": {"type": "number", "exclusiveMinimum": 0},
                "files_sigma": {"type": "number", "minimum": 0},
                "shared_median": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "shared_concentration": {"type": "number", "exclusiveMinimum": 1},
                "apps_p": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "n_samples": {"type": "integer", "minimum": 1},
                "max_degree": {"type": "integer", "minimum": 0},
            },
        },
        "models": {"type": "array", "items": _MODEL, "minItems": 1},
        "team_mode": {"type": "boolean"},
        "target_avg_apps": {"type": "number", "exclusiveMinimum": 0},
        "replicates": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "record_stride": {"type": "integer", "minimum": 0},
        "max_resample": {"type": "integer", "minimum": 1},
        "check_every": {"type": "integer", "minimum": 0},
        "event_log_limit": {"type": "integer", "minimum": 0},
        "baseline": {"enum": ["FA", "EHB", "EBL"]},
    },
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def validate(data) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise ConfigError(path, err.message)


def config_from_dict(data) -> SimConfig:
    validate(data)
    try:
        return SimConfig.from_dict(data)
    except ValueError as exc:
        raise ConfigError("$", str(exc)) from exc


_PATH_FIELDS = (("network", "path"), ("network", "dataset"), ("catalog", "path"), ("sharing", "dataset"))


def load_config(path) -> SimConfig:
    """Read and validate a config file; relative data paths resolve against its directory."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    validate(data)
    base = os.path.dirname(os.path.abspath(path))
    for section, key in _PATH_FIELDS:
        value = data.get(section, {}).get(key)
        if value is not None and not os.path.isabs(value):
            data[section][key] = os.path.join(base, value)
    return config_from_dict(data)
