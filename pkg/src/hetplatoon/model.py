"""Vehicle kinds, scenario configuration and time separations.

Accelerations are stored as positive magnitudes everywhere.  Maximum
deceleration is assumed equal to maximum acceleration.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidParameterError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib


class VehicleKind(IntEnum):
    CAR = 0
    TRUCK = 1

    @property
    def label(self):
        return self.name.lower()

    @classmethod
    def parse(cls, s):
        if isinstance(s, cls):
            return s
        try:
            return cls[str(s).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown vehicle kind {s!r} (expected car|truck)") from None


CAR, TRUCK = VehicleKind.CAR, VehicleKind.TRUCK


@dataclass(frozen=True)
class VehicleParams:
    kind: VehicleKind
    a_max: float  # m/s^2, also the braking magnitude
    length: float  # m

    def __post_init__(self):
        if not (self.a_max > 0 and math.isfinite(self.a_max)):
            raise InvalidParameterError(f"{self.kind.label}: a_max must be positive, got {self.a_max}")
        if not self.length > 0:
            raise InvalidParameterError(f"{self.kind.label}: length must be positive, got {self.length}")


def _check_positive(**kw):
    for name, val in kw.items():
        if not val > 0:
            raise InvalidParameterError(f"{name} must be positive, got {val}")


def tau_same_lane(pre: VehicleParams, fol: VehicleParams, v_max, t_res, delta):
    """Minimum time headway between consecutive vehicles of one lane.

    The kinematic term only kicks in when the follower brakes more weakly
    than the leader.
    """
    _check_positive(v_max=v_max, a_pre=pre.a_max, a_fol=fol.a_max)
    if t_res < 0 or delta < 0:
        raise InvalidParameterError("t_res and delta must be non-negative")
    brake = 0.5 * v_max * (1.0 / fol.a_max - 1.0 / pre.a_max)
    return t_res + (pre.length + delta) / v_max + max(0.0, brake)


def tau_cross_lane(pre: VehicleParams, fol: VehicleParams, v_max, t_res, s):
    """Switch-over headway when access passes to another lane.

    Includes the clearance of the intersection of width ``s``.
    """
    _check_positive(v_max=v_max, a_pre=pre.a_max, a_fol=fol.a_max, s=s)
    if t_res < 0:
        raise InvalidParameterError("t_res must be non-negative")
    return t_res + v_max / (2.0 * fol.a_max) + (s + pre.length) / v_max


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SeparationTable:
    """``same[pre, fol]`` and ``cross[pre, fol]`` in seconds.

    ``lane_pairs`` maps (from_lane, to_lane) to a 2x2 cross table that
    replaces ``cross`` for that pair.  Empty unless a caller sets it.
    """
    same: np.ndarray
    cross: np.ndarray
    lane_pairs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "same", _frozen(self.same))
        object.__setattr__(self, "cross", _frozen(self.cross))
        object.__setattr__(self, "lane_pairs", {k: _frozen(v) for k, v in self.lane_pairs.items()})
        for name, arr in [("same", self.same), ("cross", self.cross), *self.lane_pairs.items()]:
            if arr.shape != (2, 2):
                raise InvalidParameterError(f"separation table {name} must be 2x2")
            if not np.all(arr > 0):
                raise InvalidParameterError(f"separation table {name} has non-positive entries")

    def between(self, from_lane, to_lane):
        """Headway table for a switch from ``from_lane`` to ``to_lane``."""
        if from_lane == to_lane:
            return self.same
        return self.lane_pairs.get((from_lane, to_lane), self.cross)

    def to_dict(self):
        out = {}
        for name, arr in (("same_lane", self.same), ("cross_lane", self.cross)):
            out[name] = {f"{VehicleKind(p).label}->{VehicleKind(f).label}": float(arr[p, f])
                         for p in (0, 1) for f in (0, 1)}
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    v_max: float = 20.0
    lanes: int = 2
    control_length: tuple = (600.0, 600.0)
    arrival_rate: tuple = (0.39, 0.39)
    truck_fraction: float = 0.4
    car: VehicleParams = VehicleParams(CAR, 4.0, 5.0)
    truck: VehicleParams = VehicleParams(TRUCK, 2.0, 10.0)
    response_time: float = 0.5
    tolerance_gap: float = 1.0
    intersection_width: float = 8.0
    horizon: float = 1.0e6
    seed: int = 1
    separation_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.lanes
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise InvalidParameterError(f"lanes must be a positive integer, got {n!r}")
        object.__setattr__(self, "control_length", _per_lane(self.control_length, n, "control_length"))
        object.__setattr__(self, "arrival_rate", _per_lane(self.arrival_rate, n, "arrival_rate"))
        _check_positive(v_max=self.v_max, intersection_width=self.intersection_width,
                        horizon=self.horizon)
        for x in self.control_length:
            _check_positive(control_length=x)
        for lam in self.arrival_rate:
            _check_positive(arrival_rate=lam)
        if not 0.0 <= self.truck_fraction <= 1.0:
            raise InvalidParameterError("truck_fraction must lie in [0, 1]")
        if self.response_time < 0 or self.tolerance_gap < 0:
            raise InvalidParameterError("response_time and tolerance_gap must be non-negative")
        if self.car.kind != CAR or self.truck.kind != TRUCK:
            raise InvalidParameterError("car/truck params carry the wrong kind")
        # equality is tolerated so the fully symmetric fleet can be expressed
        if self.truck.a_max > self.car.a_max:
            raise InvalidParameterError("trucks may not accelerate faster than cars")

    def params(self, kind):
        return self.truck if kind == TRUCK else self.car

    @property
    def a_max(self):
        """Acceleration magnitudes indexed by kind."""
        return np.array([self.car.a_max, self.truck.a_max])

    def with_(self, **kw):
        return replace(self, **kw)


def _per_lane(val, n, name):
    if np.isscalar(val):
        return tuple(float(val) for _ in range(n))
    vals = tuple(float(v) for v in val)
    if len(vals) != n:
        raise InvalidParameterError(f"{name}: expected {n} values (one per lane), got {len(vals)}")
    return vals


def build_separation_table(cfg: ScenarioConfig) -> SeparationTable:
    same = np.empty((2, 2))
    cross = np.empty((2, 2))
    for p in VehicleKind:
        for f in VehicleKind:
            pre, fol = cfg.params(p), cfg.params(f)
            same[p, f] = tau_same_lane(pre, fol, cfg.v_max, cfg.response_time, cfg.tolerance_gap)
            cross[p, f] = tau_cross_lane(pre, fol, cfg.v_max, cfg.response_time, cfg.intersection_width)
    ov = cfg.separation_overrides or {}
    for name, arr in (("same_lane", same), ("cross_lane", cross)):
        for key, val in (ov.get(name) or {}).items():
            p, f = _parse_pair(key, f"separation_overrides.{name}")
            if not (isinstance(val, (int, float)) and val > 0):
                raise InvalidParameterError(f"separation_overrides.{name}.{key} must be positive, got {val!r}")
            arr[p, f] = float(val)
    return SeparationTable(same, cross)


def _parse_pair(key, path):
    parts = str(key).split("->")
    try:
        if len(parts) != 2:
            raise ValueError
        return VehicleKind.parse(parts[0]), VehicleKind.parse(parts[1])
    except ValueError:
        raise ConfigError(f"{path}.{key}", "expected '<preceding>-><following>', e.g. 'car->truck'") from None


# --- config files --------------------------------------------------------

_SCALARS = {
    "v_max": float, "lanes": int, "truck_fraction": float, "response_time": float,
    "tolerance_gap": float, "intersection_width": float, "horizon": float, "seed": int,
}
_LANE_KEYS = ("control_length", "arrival_rate")


def _expect_number(val, path, typ):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected {typ.__name__}, got {type(val).__name__}")
    if typ is int:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(path, "expected int, got non-integral float")
        return int(val)
    return float(val)


def config_from_dict(d: dict) -> ScenarioConfig:
    """Build a config from a parsed document; unknown keys are rejected."""
    if not isinstance(d, dict):
        raise ConfigError("", "top level must be a table/object")
    kw = {}
    for key, val in d.items():
        if key in _SCALARS:
            kw[key] = _expect_number(val, key, _SCALARS[key])
        elif key in _LANE_KEYS:
            if isinstance(val, list):
                kw[key] = tuple(_expect_number(v, f"{key}[{i}]", float) for i, v in enumerate(val))
            else:
                kw[key] = _expect_number(val, key, float)
        elif key == "vehicles":
            if not isinstance(val, dict):
                raise ConfigError(key, "expected table with car/truck entries")
            for kname, pv in val.items():
                path = f"vehicles.{kname}"
                try:
                    kind = VehicleKind.parse(kname)
                except ValueError as e:
                    raise ConfigError(path, str(e)) from None
                if not isinstance(pv, dict):
                    raise ConfigError(path, "expected table with a_max and length")
                extra = set(pv) - {"a_max", "length"}
                if extra:
                    raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
                base = ScenarioConfig().params(kind)
                a = _expect_number(pv.get("a_max", base.a_max), f"{path}.a_max", float)
                ln = _expect_number(pv.get("length", base.length), f"{path}.length", float)
                kw[kind.label] = VehicleParams(kind, a, ln)
        elif key == "separation_overrides":
            if not isinstance(val, dict):
                raise ConfigError(key, "expected table")
            for sub, entries in val.items():
                if sub not in ("same_lane", "cross_lane"):
                    raise ConfigError(f"{key}.{sub}", "expected same_lane or cross_lane")
                if not isinstance(entries, dict):
                    raise ConfigError(f"{key}.{sub}", "expected table of 'pre->fol' = seconds")
                for k, v in entries.items():
                    _parse_pair(k, f"{key}.{sub}")
                    _expect_number(v, f"{key}.{sub}.{k}", float)
            kw[key] = val
        else:
            raise ConfigError(key, "unknown key")
    if "lanes" in kw:
        n = kw["lanes"]
        for k in _LANE_KEYS:
            if k not in kw:
                kw[k] = getattr(ScenarioConfig(), k)[0]
            elif isinstance(kw[k], tuple) and len(kw[k]) != n:
                raise ConfigError(k, f"expected {n} values (one per lane), got {len(kw[k])}")
    try:
        return ScenarioConfig(**kw)
    except InvalidParameterError as e:
        raise ConfigError("", str(e)) from None


def load_config(path) -> ScenarioConfig:
    """Read a ``.toml`` or ``.json`` scenario file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError("", f"cannot read {path}: {e}") from None
    try:
        if path.suffix.lower() == ".json":
            d = json.loads(raw)
        else:
            d = tomllib.loads(raw.decode())
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError("", f"cannot parse {path.name}: {e}") from None
    return config_from_dict(d)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = {k: getattr(cfg, k) for k in _SCALARS}
    d["control_length"] = list(cfg.control_length)
    d["arrival_rate"] = list(cfg.arrival_rate)
    d["vehicles"] = {p.kind.label: {"a_max": p.a_max, "length": p.length} for p in (cfg.car, cfg.truck)}
    if cfg.separation_overrides:
        d["separation_overrides"] = cfg.separation_overrides
    return d


# Values used throughout the worked examples (x0 = 600 m, v = 20 m/s, ...).
PAPER_DEFAULTS = ScenarioConfig()

# Literal headways used for the animated scenarios (same / different lane).
ANIMATION_OVERRIDES = {
    "same_lane": {"car->car": 0.65, "truck->car": 0.8, "car->truck": 1.5, "truck->truck": 0.9},
    "cross_lane": {"car->car": 0.8, "truck->car": 1.5, "car->truck": 2.5, "truck->truck": 2.5},
}

PRESETS = {
    "symmetric": dict(arrival_rate=(0.39, 0.39)),
    "asymmetric": dict(arrival_rate=(1.34, 0.06)),
}


def preset(name, **kw) -> ScenarioConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(PAPER_DEFAULTS, **{**base, **kw})
