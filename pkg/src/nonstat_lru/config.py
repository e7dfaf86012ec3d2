"""Experiment documents: a strict YAML schema with unit-tagged quantities.

A document looks like::

    name: lifetimes.L10
    mix:
      gamma: 100 per_day
      classes:
        - weight: 1
          profile: {kind: exponential, L: 10 days}
          volume: {kind: pareto, v_min: 1, beta: 3}
    cache_sizes: [1, 10, 100, 1000]
    sim: {replications: 20, horizon: 200 days, seed: 0}
    outputs: [csv, summary]

``catalog: {M: 10000, alpha: 0.8}`` replaces ``mix`` for static Zipf
catalogues. Rates carry ``per_day`` or ``per_hour``, durations ``days`` or
``hours``; everything is stored internally in days. Unknown keys are errors.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields
from typing import Optional, Tuple

import yaml

from .analytic import ContentClass, TrafficMix
from .errors import ConfigError, DomainError
from .profiles import make_profile
from .stationary import ZipfCatalog
from .volumes import volume_from_dict

__all__ = [
    "SimOverrides",
    "ExperimentSpec",
    "parse_quantity",
    "format_quantity",
    "spec_from_dict",
    "spec_to_dict",
    "load_spec",
    "loads_spec",
    "dumps_spec",
]

_TIME_UNITS = {"days": 1.0, "day": 1.0, "hours": 1.0 / 24.0, "hour": 1.0 / 24.0}
_RATE_UNITS = {"per_day": 1.0, "per_hour": 24.0}
_QUANTITY = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s+([a-z_]+)\s*$")
OUTPUT_KINDS = ("csv", "summary")


# --- scalar parsing ----------------------------------------------------------

def parse_quantity(value, units, path):
    """Convert ``"<number> <unit>"`` to the base unit (days or per day)."""
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a quantity with a unit ({', '.join(units)}), got {value!r}")
    m = _QUANTITY.match(value)
    if m is None:
        raise ConfigError(path, f"cannot parse quantity {value!r}")
    number, unit = m.groups()
    if unit not in units:
        raise ConfigError(path, f"unit {unit!r} not allowed here; use one of {', '.join(units)}")
    return float(number) * units[unit]


def format_quantity(value, unit):
    return f"{float(value)!r} {unit}"


def _number(value, path, integer=False):
    # PyYAML reads "1e7" as a string, so numeric strings are accepted too
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(path, f"expected a number, got {value!r}") from None
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(path, f"expected a finite number, got {value!r}")
    if integer:
        if value != int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _mapping(d, path, required=(), optional=()):
    if not isinstance(d, dict):
        raise ConfigError(path, f"expected a mapping, got {type(d).__name__}")
    unknown = sorted(set(d) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    for key in required:
        if key not in d:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return d


def _join(path, key):
    return f"{path}.{key}" if path else str(key)


# --- schema objects ------------------------------------------------------------

@dataclass(frozen=True)
class SimOverrides:
    """Simulation settings; ``None`` means "use the simulator default"."""

    replications: Optional[int] = None
    horizon: Optional[float] = None
    warmup: Optional[float] = None
    lookback: Optional[float] = None
    seed: Optional[int] = None
    requests: Optional[int] = None  # static catalogues only


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    cache_sizes: Tuple[float, ...]
    mix: Optional[TrafficMix] = None
    catalog: Optional[ZipfCatalog] = None
    sim: Optional[SimOverrides] = None
    outputs: Tuple[str, ...] = ("csv",)
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "cache_sizes", tuple(float(c) for c in self.cache_sizes))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if (self.mix is None) == (self.catalog is None):
            raise ConfigError("", "exactly one of 'mix' and 'catalog' is required")
        sizes = self.cache_sizes
        if not sizes:
            raise ConfigError("cache_sizes", "must not be empty")
        if any(not (c > 0 and math.isfinite(c)) for c in sizes):
            raise ConfigError("cache_sizes", "sizes must be positive and finite")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("cache_sizes", "sizes must be strictly ascending")
        if self.catalog is not None and sizes[-1] > self.catalog.catalog_size:
            raise ConfigError("cache_sizes", "sizes cannot exceed the catalogue size")
        bad = [o for o in self.outputs if o not in OUTPUT_KINDS]
        if bad:
            raise ConfigError("outputs", f"unknown output {bad[0]!r}; expected {list(OUTPUT_KINDS)}")
        if self.sim is not None:
            if any(c != int(c) for c in sizes):
                raise ConfigError("cache_sizes", "simulated cache sizes must be integers")
            if self.catalog is not None:
                for name in ("horizon", "warmup", "lookback"):
                    if getattr(self.sim, name) is not None:
                        raise ConfigError(f"sim.{name}", "not used by catalogue simulations")
            elif self.sim.requests is not None:
                raise ConfigError("sim.requests", "only used by catalogue simulations")

    @property
    def group(self):
        return self.name.split(".", 1)[0]


# --- dict <-> objects -------------------------------------------------------------

def _parse_profile(d, path):
    _mapping(d, path, required=("kind", "L"), optional=("zeta",))
    L = parse_quantity(d["L"], _TIME_UNITS, _join(path, "L"))
    zeta = _number(d["zeta"], _join(path, "zeta")) if "zeta" in d else None
    try:
        return make_profile(d["kind"], L, zeta)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_volume(d, path):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected a mapping")
    kind = d.get("kind")
    if kind == "pareto":
        _mapping(d, path, required=("kind", "v_min", "beta"))
        values = {"kind": kind, "v_min": _number(d["v_min"], _join(path, "v_min")),
                  "beta": _number(d["beta"], _join(path, "beta"))}
    elif kind == "deterministic":
        _mapping(d, path, required=("kind", "value"))
        values = {"kind": kind, "value": _number(d["value"], _join(path, "value"))}
    else:
        raise ConfigError(_join(path, "kind"), f"unknown volume kind {kind!r}")
    try:
        return volume_from_dict(values)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_mix(d, path):
    _mapping(d, path, required=("gamma", "classes"))
    gamma = parse_quantity(d["gamma"], _RATE_UNITS, _join(path, "gamma"))
    raw = d["classes"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(_join(path, "classes"), "expected a non-empty list")
    classes = []
    for i, c in enumerate(raw):
        cpath = f"{path}.classes[{i}]"
        _mapping(c, cpath, required=("weight", "profile", "volume"))
        try:
            classes.append(ContentClass(_number(c["weight"], _join(cpath, "weight")),
                                        _parse_profile(c["profile"], _join(cpath, "profile")),
                                        _parse_volume(c["volume"], _join(cpath, "volume"))))
        except DomainError as exc:
            raise ConfigError(cpath, str(exc)) from None
    try:
        return TrafficMix(gamma, classes)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_catalog(d, path):
    _mapping(d, path, required=("M", "alpha"), optional=("total_rate",))
    rate = (parse_quantity(d["total_rate"], _RATE_UNITS, _join(path, "total_rate"))
            if "total_rate" in d else 1.0)
    try:
        return ZipfCatalog(_number(d["M"], _join(path, "M"), integer=True),
                           _number(d["alpha"], _join(path, "alpha")), rate)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_sim(d, path):
    if d is None:  # an empty "sim:" section still asks for a simulation
        return SimOverrides()
    _mapping(d, path, optional=[f.name for f in fields(SimOverrides)])
    out = {}
    for key in ("replications", "seed", "requests"):
        if key in d:
            out[key] = _number(d[key], _join(path, key), integer=True)
    for key in ("horizon", "warmup", "lookback"):
        if key in d:
            out[key] = parse_quantity(d[key], _TIME_UNITS, _join(path, key))
    if out.get("replications", 1) < 1:
        raise ConfigError(_join(path, "replications"), "must be at least 1")
    if out.get("requests", 1) < 1:
        raise ConfigError(_join(path, "requests"), "must be at least 1")
    if not 0 <= out.get("seed", 0) < 2 ** 64:
        raise ConfigError(_join(path, "seed"), "must be a 64-bit unsigned integer")
    return SimOverrides(**out)


def spec_from_dict(d):
    """Validate a parsed document and build an :class:`ExperimentSpec`."""
    _mapping(d, "", required=("name", "cache_sizes"),
             optional=("mix", "catalog", "sim", "outputs", "description"))
    name = d["name"]
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "expected a non-empty string")
    sizes = d["cache_sizes"]
    if not isinstance(sizes, list):
        raise ConfigError("cache_sizes", "expected a list")
    sizes = [_number(c, f"cache_sizes[{i}]") for i, c in enumerate(sizes)]
    mix = _parse_mix(d["mix"], "mix") if "mix" in d else None
    catalog = _parse_catalog(d["catalog"], "catalog") if "catalog" in d else None
    sim = _parse_sim(d["sim"], "sim") if "sim" in d else None
    outputs = d.get("outputs", ["csv"])
    if not isinstance(outputs, list):
        raise ConfigError("outputs", "expected a list")
    return ExperimentSpec(name=name, cache_sizes=sizes, mix=mix, catalog=catalog, sim=sim,
                          outputs=outputs, description=str(d.get("description", "")))


def _profile_to_dict(p):
    out = {"kind": p.kind, "L": format_quantity(p.lifetime, "days")}
    if p.kind == "powerlaw":
        out["zeta"] = p.zeta
    return out


def spec_to_dict(spec):
    """Inverse of :func:`spec_from_dict`; floats keep their exact repr."""
    d = {"name": spec.name}
    if spec.description:
        d["description"] = spec.description
    if spec.mix is not None:
        d["mix"] = {
            "gamma": format_quantity(spec.mix.gamma, "per_day"),
            "classes": [{"weight": c.weight, "profile": _profile_to_dict(c.profile),
                         "volume": c.volumes.to_dict()} for c in spec.mix.classes],
        }
    else:
        cat = spec.catalog
        d["catalog"] = {"M": cat.catalog_size, "alpha": cat.alpha,
                        "total_rate": format_quantity(cat.total_rate, "per_day")}
    d["cache_sizes"] = list(spec.cache_sizes)
    if spec.sim is not None:
        sim = {}
        for f in fields(SimOverrides):
            v = getattr(spec.sim, f.name)
            if v is None:
                continue
            sim[f.name] = format_quantity(v, "days") if f.name in ("horizon", "warmup", "lookback") else v
        d["sim"] = sim
    d["outputs"] = list(spec.outputs)
    return d


def loads_spec(text):
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"not valid YAML: {exc}") from None
    return spec_from_dict(doc)


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        return loads_spec(fh.read())


def dumps_spec(spec):
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False)
