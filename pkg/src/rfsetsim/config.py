"""Experiment configuration: YAML parsing, validation, canonical hashing.

A config file is a single YAML mapping; the exact grammar (sections and
keys, with units in the key names) is documented in the README. One
experiment per invocation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .films import FilmSpec, FilmType, ThermalState
from .readout import ChainSpec
from .resonator import ResonatorSpec
from .set_device import SetSpec

SWEEP_AXES = ("temperature", "dc_current", "rf_power", "frequency",
              "V_GS", "V_DS", "W_BC")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(
                f"sweep axis {self.axis!r} not one of {SWEEP_AXES}")
        if self.points < 2:
            raise ConfigError("sweep needs points >= 2")
        if self.scale not in ("linear", "log"):
            raise ConfigError("sweep scale must be 'linear' or 'log'")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log sweep endpoints must be > 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class ExperimentConfig:
    film: Optional[FilmSpec]
    resonator: Optional[ResonatorSpec]
    set_spec: Optional[SetSpec]
    chain: Optional[ChainSpec]
    thermal: Optional[ThermalState]
    sweep: Optional[SweepSpec]
    seed: int
    output_path: Optional[str]
    extras: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        return sha256_of_config(self.raw)

    def require(self, *sections: str):
        for name in sections:
            if getattr(self, "set_spec" if name == "set" else name) is None:
                raise ConfigError(f"config section {name!r} is required "
                                  "for this subcommand")


def sha256_of_config(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _build(cls, section: dict, name: str, key_map: dict | None = None):
    try:
        kwargs = dict(section)
        if key_map:
            for src, dst in key_map.items():
                if src in kwargs:
                    kwargs[dst] = kwargs.pop(src)
        return cls(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad {name!r} section: {err}") from err


def _film_from_dict(section: dict) -> FilmSpec:
    kwargs = dict(section)
    if "film_type" in kwargs:
        try:
            kwargs["film_type"] = FilmType(kwargs["film_type"])
        except ValueError as err:
            raise ConfigError(f"bad film_type: {err}") from err
    return _build(FilmSpec, kwargs, "film")


def film_to_dict(spec: FilmSpec) -> dict:
    out = {name: getattr(spec, name) for name in
           ("W_um", "L_um", "t_nm", "T_C_K", "sheet_Lk0_nH",
            "J_c_A_per_mm2", "I_star_uA", "R_normal_kohm")}
    out["film_type"] = spec.film_type.value
    return out


def parse_config(raw: dict, seed_override: Optional[int] = None,
                 output_override: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    raw = json.loads(json.dumps(raw))  # normalize to plain JSON-able types
    if seed_override is not None:
        raw["seed"] = int(seed_override)
    if output_override is not None:
        raw["output_path"] = str(output_override)

    known = {"film", "resonator", "set", "chain", "thermal", "sweep", "seed",
             "output_path", "iv", "s11", "stability", "benchmark", "fit"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    def section(name):
        value = raw.get(name)
        if value is not None and not isinstance(value, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        return value

    film = _film_from_dict(section("film")) if section("film") else None
    res = _build(ResonatorSpec, section("resonator"), "resonator") \
        if section("resonator") else None
    set_spec = _build(SetSpec, section("set"), "set") \
        if section("set") else None
    chain = _build(ChainSpec, section("chain"), "chain") \
        if section("chain") else None
    thermal = _build(ThermalState, section("thermal"), "thermal") \
        if section("thermal") else None
    sweep = None
    if section("sweep"):
        sw = dict(section("sweep"))
        try:
            sw["points"] = int(sw.get("points", 0))
            sweep = SweepSpec(**sw)
        except (TypeError, ConfigError) as err:
            raise ConfigError(f"bad 'sweep' section: {err}") from err

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")

    extras = {name: raw.get(name) or {} for name in
              ("iv", "s11", "stability", "benchmark", "fit")}
    return ExperimentConfig(film=film, resonator=res, set_spec=set_spec,
                            chain=chain, thermal=thermal, sweep=sweep,
                            seed=seed, output_path=raw.get("output_path"),
                            extras=extras, raw=raw)


def load_config(path: str | Path, seed_override: Optional[int] = None,
                output_override: Optional[str] = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"invalid YAML in {path}: {err}") from err
    return parse_config(raw, seed_override=seed_override,
                        output_override=output_override)
