"""Ensemble configuration: YAML in, validated dataclass out.

Unknown keys are errors and validation reports every problem it finds.
"""

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .. import CONFIG_SCHEMA_VERSION

FAMILIES = ("gue", "anderson3d", "chain")
COUPLING_MODES = ("dephasing", "linear_uniform", "linear_pattern")
STATISTICS = ("fermionic", "bosonic")

DEFAULTS = {
    "schema_version": CONFIG_SCHEMA_VERSION,
    "name": "ensemble",
    "model_family": "gue",
    "family_params": {"J": 1.0, "W": 0.0, "periodic": True},
    "bath": {"statistics": "bosonic", "beta": 5.0, "mu": 0.0, "cutoff": 10.0,
             "J_int": 0.2, "include_eta": False},
    "coupling": {"mode": "dephasing", "pattern": "random", "lamb_shift": True},
    "sizes": [16],
    "samples": 20,
    "seed": 0,
    "time": {"t_max": 100.0, "n_points": 201},
    "step": None,
    "initial_state": {"site": 0},
}

_SECTIONS = ("family_params", "bath", "coupling", "time", "initial_state")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _merge(raw, errors):
    if not isinstance(raw, dict):
        raise ConfigError([f"config must be a mapping, got {type(raw).__name__}"])
    merged = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key not in DEFAULTS:
            errors.append(f"unknown key {key!r}")
            continue
        if key in _SECTIONS:
            if not isinstance(value, dict):
                errors.append(f"{key} must be a mapping")
                continue
            for sub, v in value.items():
                if sub not in DEFAULTS[key]:
                    errors.append(f"unknown key {key}.{sub!r}")
                else:
                    merged[key][sub] = v
        else:
            merged[key] = value
    return merged


def _validate(d, errors):
    if d["schema_version"] != CONFIG_SCHEMA_VERSION:
        errors.append(f"schema_version must be {CONFIG_SCHEMA_VERSION}, got {d['schema_version']!r}")
    if not isinstance(d["name"], str) or not d["name"]:
        errors.append("name must be a nonempty string")
    if d["model_family"] not in FAMILIES:
        errors.append(f"model_family must be one of {FAMILIES}, got {d['model_family']!r}")
    fp = d["family_params"]
    if not _is_number(fp["J"]) or not fp["J"] > 0:
        errors.append("family_params.J must be a positive number")
    if not _is_number(fp["W"]) or fp["W"] < 0:
        errors.append("family_params.W must be a nonnegative number")
    if not isinstance(fp["periodic"], bool):
        errors.append("family_params.periodic must be true or false")

    b = d["bath"]
    if b["statistics"] not in STATISTICS:
        errors.append(f"bath.statistics must be one of {STATISTICS}")
    for key, positive in (("beta", True), ("cutoff", True), ("J_int", False)):
        v = b[key]
        if not _is_number(v) or (v <= 0 if positive else v < 0):
            errors.append(f"bath.{key} must be a {'positive' if positive else 'nonnegative'} number")
    if not _is_number(b["mu"]):
        errors.append("bath.mu must be a number")
    if not isinstance(b["include_eta"], bool):
        errors.append("bath.include_eta must be true or false")

    c = d["coupling"]
    if c["mode"] not in COUPLING_MODES:
        errors.append(f"coupling.mode must be one of {COUPLING_MODES}")
    pat = c["pattern"]
    if isinstance(pat, list):
        if not pat or not all(_is_number(w) and w >= 0 for w in pat):
            errors.append("coupling.pattern weights must be nonnegative numbers")
    elif not (pat in ("uniform", "random") or (isinstance(pat, str) and pat.startswith("sublattice:")
                                                and pat.split(":", 1)[1].isdigit())):
        errors.append("coupling.pattern must be uniform, random, sublattice:p or a weight list")
    if not isinstance(c["lamb_shift"], bool):
        errors.append("coupling.lamb_shift must be true or false")

    sizes = d["sizes"]
    if not isinstance(sizes, list) or not sizes:
        errors.append("sizes must be a nonempty list")
    elif not all(_is_int(s) and s >= 1 for s in sizes):
        errors.append("sizes must be positive integers")
    elif len(set(sizes)) != len(sizes):
        errors.append("sizes must be distinct")
    elif d["model_family"] == "anderson3d" and min(sizes) < 2:
        errors.append("anderson3d sizes are side lengths L >= 2")
    if not _is_int(d["samples"]) or d["samples"] < 1:
        errors.append("samples must be an integer >= 1")
    if not _is_int(d["seed"]) or d["seed"] < 0:
        errors.append("seed must be a nonnegative integer")
    t = d["time"]
    if not _is_number(t["t_max"]) or not t["t_max"] > 0:
        errors.append("time.t_max must be positive")
    if not _is_int(t["n_points"]) or t["n_points"] < 2:
        errors.append("time.n_points must be an integer >= 2")
    if d["step"] is not None and (not _is_number(d["step"]) or not d["step"] > 0):
        errors.append("step must be null or a positive number")
    site = d["initial_state"]["site"]
    if not _is_int(site) or site < 0:
        errors.append("initial_state.site must be a nonnegative integer")
    elif isinstance(sizes, list) and sizes and all(_is_int(s) for s in sizes):
        smallest = min(sizes) ** 3 if d["model_family"] == "anderson3d" else min(sizes)
        if site >= smallest:
            errors.append(f"initial_state.site {site} is outside the smallest system ({smallest} sites)")


@dataclass(frozen=True)
class EnsembleConfig:
    data: dict

    @classmethod
    def from_dict(cls, raw):
        errors = []
        merged = _merge(raw, errors)
        _validate(merged, errors)
        if errors:
            raise ConfigError(errors)
        for key in ("beta", "mu", "cutoff", "J_int"):
            merged["bath"][key] = float(merged["bath"][key])
        merged["time"]["t_max"] = float(merged["time"]["t_max"])
        for key in ("J", "W"):
            merged["family_params"][key] = float(merged["family_params"][key])
        if merged["step"] is not None:
            merged["step"] = float(merged["step"])
        return cls(merged)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError([f"{path}: YAML syntax error: {exc}"]) from None
        return cls.from_dict(raw)

    def to_dict(self):
        return copy.deepcopy(self.data)

    def to_json(self):
        return json.dumps(self.data, indent=2, sort_keys=True)

    def to_yaml(self):
        return yaml.safe_dump(self.data, sort_keys=False)

    def digest(self):
        return hashlib.sha256(json.dumps(self.data, sort_keys=True).encode()).hexdigest()

    def replace(self, **changes):
        d = self.to_dict()
        d.update(changes)
        return EnsembleConfig.from_dict(d)

    def __getattr__(self, key):
        try:
            return self.__dict__["data"][key]
        except KeyError:
            raise AttributeError(key) from None

    def n_sites(self, size):
        return size**3 if self.data["model_family"] == "anderson3d" else size

    def grid(self):
        import numpy as np
        t = self.data["time"]
        return np.linspace(0.0, t["t_max"], t["n_points"])


def shipped_configs():
    """Paths of the example configs bundled with the package."""
    root = Path(__file__).resolve().parent.parent / "configs"
    return sorted(root.glob("*.yaml"))


def shipped_config(name):
    for p in shipped_configs():
        if p.stem == name or p.name == name:
            return p
    raise FileNotFoundError(f"no shipped config named {name!r}")
