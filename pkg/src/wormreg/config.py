"""Run configuration: YAML/JSON files, dotted overrides, and a stable hash."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .geometry import PhiProfile, WormConfig
from .operators import OdeCoefficients

ENV_VAR = "WORMREG_CONFIG"

DEFAULTS: dict = {
    "worm": {"r_flat": 0.5, "delta": 0.5, "phi": {"M": 0.5, "sigma": 1.0}},
    "ode": {"a": 1.0, "beta1": 0.0, "beta2": 0.0, "beta3": 0.0, "r": 1.0, "sign_s": 1},
    "scan": {"nx": 101, "nt": 101, "tol": 1e-10},
    "shooting": {"tol": 1e-11},
    "estimates": {"nx": 64, "nt": 64, "delta": 0.25, "trials": 32, "max_evals": 200,
                  "s_min": 0.0, "s_max": 6.0, "n_s": 21},
    "mellin": {"y_min": -40.0, "y_max": 5.0, "n_t": 1024},
}

# a supplied file must set these explicitly
REQUIRED = ("worm.r_flat", "worm.delta", "worm.phi.M", "worm.phi.sigma", "ode.a", "ode.r")


class ConfigError(ValueError):
    """Invalid or incomplete configuration (CLI exit code 2)."""


def _get(d: dict, dotted: str):
    cur = d
    for k in dotted.split("."):
        if not isinstance(cur, dict) or k not in cur:
            raise KeyError(dotted)
        cur = cur[k]
    return cur


def _leaf_paths(d: dict, prefix: str = ""):
    for k, v in d.items():
        p = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _leaf_paths(v, p + ".")
        else:
            yield p


def _merge(base: dict, upd: dict, prefix: str = "") -> None:
    for k, v in upd.items():
        path = f"{prefix}{k}"
        if k not in base:
            raise ConfigError(f"unknown config field: {path}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config field {path} must be a mapping")
            _merge(base[k], v, path + ".")
        else:
            base[k] = v


def _parse_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {text!r}") from exc


def apply_override(cfg: dict, assignment: str) -> None:
    """Apply ``a.b.c=value`` in place; the path must already exist."""
    if "=" not in assignment:
        raise ConfigError(f"override must look like key.path=value, got {assignment!r}")
    path, text = assignment.split("=", 1)
    keys = path.strip().split(".")
    cur = cfg
    for k in keys[:-1]:
        if not isinstance(cur.get(k), dict):
            raise ConfigError(f"unknown config field: {path}")
        cur = cur[k]
    if keys[-1] not in cur or isinstance(cur[keys[-1]], dict):
        raise ConfigError(f"unknown config field: {path}")
    cur[keys[-1]] = _parse_value(text)


def default_config_path() -> Path | None:
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else None


def shipped_config_text() -> str:
    return resources.files("wormreg").joinpath("default_config.yaml").read_text(encoding="utf-8")


def load_config(path: str | os.PathLike | None = None, overrides=()) -> "RunConfig":
    raw = copy.deepcopy(DEFAULTS)
    if path is None:
        path = default_config_path()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text(encoding="utf-8")
        try:
            data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{p} must hold a mapping at the top level")
        for req in REQUIRED:
            try:
                _get(data, req)
            except KeyError:
                raise ConfigError(f"missing required config field: {req}") from None
        _merge(raw, data)
    for ov in overrides:
        apply_override(raw, ov)
    return RunConfig(raw)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class RunConfig:
    raw: dict

    def __post_init__(self):
        try:
            self.worm
            self.ode
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        for p in _leaf_paths(DEFAULTS):
            v = _get(self.raw, p)
            if isinstance(_get(DEFAULTS, p), (int, float)) and not isinstance(v, (int, float)):
                raise ConfigError(f"config field {p} must be numeric, got {v!r}")

    @property
    def worm(self) -> WormConfig:
        w = self.raw["worm"]
        return WormConfig(float(w["r_flat"]), float(w["delta"]),
                          PhiProfile(float(w["phi"]["M"]), float(w["phi"]["sigma"])))

    @property
    def ode(self) -> OdeCoefficients:
        o = self.raw["ode"]
        return OdeCoefficients(a=float(o["a"]), beta1=float(o["beta1"]), beta2=float(o["beta2"]),
                               beta3=float(o["beta3"]), r=float(o["r"]), sign_s=int(o["sign_s"]))

    def section(self, name: str) -> dict:
        return self.raw[name]

    def digest(self) -> str:
        """SHA-256 of the resolved configuration in canonical JSON."""
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()
