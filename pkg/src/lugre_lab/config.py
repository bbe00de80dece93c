"""JSON scenario files: parsing, overrides and the shipped presets.

A scenario file mirrors ``ScenarioConfig`` field names.  Nested records are
objects; the reference signal and observer carry a ``"type"`` key.  The
optional ``"variants"`` list holds override objects used by ``compare``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import fields
from importlib import resources

from .analysis import LyapunovSpec
from .control import PidConfig, PrefilterConfig
from .model import TABLE1_FRICTION, TABLE1_PLANT, FrictionParams, PlantParams
from .observers import (
    Existing, Natural, NoObserver, Oracle, ProposedBounded, ProposedConstant,
    ProposedExponential, ProposedTimeVarying,
)
from .signals import SIGNAL_TYPES
from .sim import ConfigError, InitialConditions, ScenarioConfig

OBSERVER_TYPES = {
    "none": NoObserver,
    "natural": Natural,
    "existing": Existing,
    "oracle": Oracle,
    "proposed": ProposedConstant,
    "proposed_time_varying": ProposedTimeVarying,
    "proposed_bounded": ProposedBounded,
    "proposed_exponential": ProposedExponential,
}

# shorthand variants for ``compare``
VARIANT_SHORTHANDS = {
    "no_friction": {"friction_enabled": False, "compensation": False,
                    "observer": {"type": "none"}},
    "uncompensated": {"compensation": False, "observer": {"type": "none"}},
    "compensated": {"compensation": True},
    "natural": {"compensation": True, "observer": {"type": "natural"}},
    "existing": {"compensation": True, "feedforward": True,
                 "observer": {"type": "existing", "k": 0.35}},
    "oracle": {"compensation": True, "observer": {"type": "oracle"}},
}

_TOP_LEVEL = {f.name for f in fields(ScenarioConfig)} | {"variants"}


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(where, "must be finite")
    return float(value)


def _record(cls, data, where, allow_type=False):
    """Build a dataclass from a JSON object, naming the bad field on error."""
    if not isinstance(data, dict):
        raise ConfigError(where, f"expected an object, got {data!r}")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if allow_type and key == "type":
            continue
        if key not in known:
            raise ConfigError(f"{where}.{key}", "unknown field")
        if known[key].type in ("bool", bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{where}.{key}", "expected true or false")
            kwargs[key] = value
        else:
            kwargs[key] = _number(value, f"{where}.{key}")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(where, str(exc)) from None
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None


def _typed(table, data, where):
    if not isinstance(data, dict) or "type" not in data:
        raise ConfigError(where, f"expected an object with a \"type\" among {sorted(table)}")
    kind = data["type"]
    if kind not in table:
        raise ConfigError(f"{where}.type", f"unknown type {kind!r}; choose from {sorted(table)}")
    return _record(table[kind], data, where, allow_type=True)


def _friction(data, where):
    if data == "table1":
        return TABLE1_FRICTION
    return _record(FrictionParams, data, where)


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Parse and validate a scenario object; ``variants`` is ignored here."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "scenario must be a JSON object")
    for key in data:
        if key not in _TOP_LEVEL:
            raise ConfigError(key, "unknown field")
    kw = {}
    for key, value in data.items():
        if key == "variants":
            continue
        if key == "reference":
            kw[key] = _typed(SIGNAL_TYPES, value, key)
        elif key == "observer":
            kw[key] = _typed(OBSERVER_TYPES, value, key)
        elif key == "friction":
            kw[key] = _friction(value, key)
        elif key == "observer_friction":
            kw[key] = None if value is None else _friction(value, key)
        elif key == "plant":
            kw[key] = TABLE1_PLANT if value == "table1" else _record(PlantParams, value, key)
        elif key in ("controller", "inner_controller"):
            kw[key] = None if value is None else _record(PidConfig, value, key)
        elif key == "prefilter":
            kw[key] = _record(PrefilterConfig, value, key)
        elif key == "initial":
            kw[key] = _record(InitialConditions, value, key)
        elif key == "lyapunov":
            if value is None or value == "auto":
                kw[key] = value
            else:
                kw[key] = _record(LyapunovSpec, value, key)
        elif key in ("feedforward", "compensation", "friction_enabled"):
            if not isinstance(value, bool):
                raise ConfigError(key, "expected true or false")
            kw[key] = value
        elif key == "record_stride":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(key, "expected an integer")
            kw[key] = value
        elif key in ("dt", "duration"):
            kw[key] = _number(value, key)
        else:
            if not isinstance(value, str):
                raise ConfigError(key, "expected a string")
            kw[key] = value
    return ScenarioConfig(**kw).validate()


def merge(base: dict, override: dict) -> dict:
    """Recursive dict update; objects carrying a different ``type`` replace wholesale."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        old = out.get(key)
        if (isinstance(value, dict) and isinstance(old, dict)
                and value.get("type", old.get("type")) == old.get("type")):
            out[key] = merge(old, value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def set_path(data: dict, path: str, value) -> dict:
    """Copy of ``data`` with the dotted ``path`` set to ``value``."""
    out = copy.deepcopy(data)
    node = out
    parts = path.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            raise ConfigError(path, f"{part!r} is not an object in this scenario")
        node = child
    node[parts[-1]] = value
    return out


def get_path(data: dict, path: str):
    node = data
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(path, "no such field in this scenario")
        node = node[part]
    return node


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path}: invalid JSON ({exc})") from None


def preset_names():
    root = resources.files("lugre_lab") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    res = resources.files("lugre_lab") / "presets" / f"{name}.json"
    if not res.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {preset_names()}")
    return json.loads(res.read_text())


def variant_overrides(base: dict, names=None):
    """``(name, override)`` pairs from explicit names or the file's ``variants``."""
    if names:
        out = []
        for name in names:
            if name not in VARIANT_SHORTHANDS:
                raise ConfigError("variants", f"unknown variant {name!r}; "
                                              f"choose from {sorted(VARIANT_SHORTHANDS)}")
            out.append((name, VARIANT_SHORTHANDS[name]))
        return out
    out = []
    for i, v in enumerate(base.get("variants") or []):
        if isinstance(v, str):
            out.extend(variant_overrides(base, [v]))
        elif isinstance(v, dict):
            v = dict(v)
            out.append((str(v.pop("name", f"variant{i}")), v))
        else:
            raise ConfigError(f"variants[{i}]", "expected a name or an object")
    return out
