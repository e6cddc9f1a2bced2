"""
Engine defaults loader
Reads numeric and simulation defaults from templates/defaults.yaml with
environment overrides
"""

import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

from polling.analysis import ReportOptions
from polling.branching import ProductTruncation
from polling.errors import ConfigError, PollingError
from polling.transforms import FixedPointConfig

DEFAULTS_PATH = "templates/defaults.yaml"
_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class SimulationDefaults:
    seed: int = 20_240_101
    warmup_customers: int = 100_000
    measured_customers: int = 1_000_000
    replications: int = 10
    z_threshold: float = 4.0


@dataclass(frozen=True)
class EngineDefaults:
    """Everything the CLI needs before a scenario is read"""
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)
    truncation: ProductTruncation = field(default_factory=ProductTruncation)
    report: ReportOptions = field(default_factory=ReportOptions)
    simulation: SimulationDefaults = field(default_factory=SimulationDefaults)
    threads: int = 1
    log_level: str = "WARNING"


def _section(data: dict, name: str, path: str) -> dict:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section '{name}' must be a mapping", path)
    return value


def _threads_from_env() -> Optional[int]:
    raw = os.getenv("POLLINGKIT_THREADS")
    if raw is None or raw == "":
        return None
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"POLLINGKIT_THREADS must be an integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"POLLINGKIT_THREADS must be >= 1, got {threads}")
    return threads


def load_defaults(path: Optional[str] = None) -> EngineDefaults:
    """
    Load engine defaults

    The file path is, in order: the argument, POLLINGKIT_DEFAULTS, then
    templates/defaults.yaml. A missing default file means built-in values;
    a file named explicitly must exist. Keys absent from the file keep
    their built-in values.

    Args:
        path: Optional YAML file

    Returns:
        EngineDefaults with POLLINGKIT_THREADS and POLLINGKIT_LOG_LEVEL applied

    Raises:
        ConfigError: If the file is unreadable or a value is invalid
    """
    explicit = path or os.getenv("POLLINGKIT_DEFAULTS")
    source = explicit or DEFAULTS_PATH
    data: dict = {}
    if explicit or os.path.exists(source):
        try:
            with open(source, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read defaults: {exc}", source)
        if not isinstance(data, dict):
            raise ConfigError("defaults file must hold a mapping", source)

    try:
        fixed_point = FixedPointConfig(**_section(data, "fixed_point", source))
        truncation = ProductTruncation(**_section(data, "truncation", source))
        report = ReportOptions(**_section(data, "moments", source))
        simulation = SimulationDefaults(**_section(data, "simulation", source))
    except TypeError as exc:
        raise ConfigError(f"unknown key in defaults: {exc}", source)
    except PollingError as exc:
        raise ConfigError(str(exc), source)

    threads = _threads_from_env() or int(data.get("threads", 1))
    log_level = (os.getenv("POLLINGKIT_LOG_LEVEL") or data.get("log_level") or "WARNING").upper()
    if log_level not in _LOG_LEVELS:
        raise ConfigError(f"unknown log level {log_level!r}", source)

    return EngineDefaults(
        fixed_point=fixed_point,
        truncation=truncation,
        report=report,
        simulation=simulation,
        threads=threads,
        log_level=log_level,
    )
