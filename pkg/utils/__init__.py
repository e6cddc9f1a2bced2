"""
Utility helpers for the polling study front end
"""

from .config_loader import EngineDefaults, load_defaults
from .scenario_loader import Scenario, load_scenario, parse_grid, parse_scenario
from .table_formatter import format_report, sweep_csv

__all__ = [
    'EngineDefaults', 'load_defaults',
    'Scenario', 'load_scenario', 'parse_grid', 'parse_scenario',
    'format_report', 'sweep_csv',
]
