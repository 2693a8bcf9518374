"""Experiment configuration files (YAML).

A file has up to four sections::

    network:  NetworkConfig fields; power fields also accept a ``_dbm`` suffix
    env:      EnvParams fields
    sca:      ScaSettings fields
    sim:      slots, V_list, V, policy, workers

Unknown sections or keys are errors, so typos never pass silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

from .core import NetworkConfig, dbm_to_watts
from .env import EnvParams
from .scheduler import ScaSettings

DEFAULT_CONFIG_NAME = "defaults.yaml"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimParams:
    slots: int = 5000
    V_list: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0, 40.0)
    V: float = 5.0
    policy: str = "proposed"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "V_list", tuple(float(v) for v in self.V_list))
        if self.slots < 1:
            raise ValueError("slots must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class Experiment:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    env: EnvParams = field(default_factory=EnvParams)
    sca: ScaSettings = field(default_factory=ScaSettings)
    sim: SimParams = field(default_factory=SimParams)
    source: str | None = None


_POWER_FIELDS = {"total_power_cap", "unlicensed_power_cap", "interference_cap", "noise_power", "static_power",
                 "idle_power", "big_m"}


def default_config_path() -> Path:
    return Path(str(resources.files("laa_dpp").joinpath("configs", DEFAULT_CONFIG_NAME)))


def _section(cls, raw, name: str, convert_dbm: bool = False):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, val in raw.items():
        if convert_dbm and key.endswith("_dbm"):
            base = key[: -len("_dbm")]
            if base not in _POWER_FIELDS:
                raise ConfigError(f"{name}.{key}: '{base}' is not a power field")
            if base in raw:
                raise ConfigError(f"{name}: both '{base}' and '{key}' given")
            key, val = base, None if val is None else dbm_to_watts(float(val))
        if key not in known:
            raise ConfigError(f"unknown key '{name}.{key}'")
        if isinstance(val, list):
            val = tuple(val)
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section '{name}': {exc}") from exc


def parse_config(data: dict | None, source: str | None = None) -> Experiment:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    extra = set(data) - {"network", "env", "sca", "sim"}
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    return Experiment(
        network=_section(NetworkConfig, data.get("network"), "network", convert_dbm=True),
        env=_section(EnvParams, data.get("env"), "env"),
        sca=_section(ScaSettings, data.get("sca"), "sca"),
        sim=_section(SimParams, data.get("sim"), "sim"),
        source=source,
    )


def load_config(path=None) -> Experiment:
    """Read a YAML experiment file; ``None`` loads the shipped defaults."""
    path = default_config_path() if path is None else Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return parse_config(data, source=str(path))
