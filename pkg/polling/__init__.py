"""
Two-Queue Priority Polling Kit
Exact transforms and a cross-validating simulator for a cyclic two-queue
server with H/L priorities in queue 1
"""

from .analysis import (
    PerformanceReport,
    ReportOptions,
    WaitClass,
    WaitForm,
    WaitingTimeAnalyzer,
    report,
)
from .branching import CycleAnchor, ModelTransforms, ProductTruncation, TransformForm
from .distributions import (
    Deterministic,
    Exponential,
    Mixture,
    ShiftedExponential,
    TruncatedExponential,
    split_by_threshold,
)
from .errors import PollingError
from .model import Discipline, PollingModel, derive, validate
from .simulator import PollingSimulator, SimConfig, SimulationEstimate
from .sweep import SweepRow, ThresholdStudy, run_sweep
from .transforms import FixedPointConfig, MomentRequest

__all__ = [
    'PerformanceReport', 'ReportOptions', 'WaitClass', 'WaitForm',
    'WaitingTimeAnalyzer', 'report',
    'CycleAnchor', 'ModelTransforms', 'ProductTruncation', 'TransformForm',
    'Deterministic', 'Exponential', 'Mixture', 'ShiftedExponential',
    'TruncatedExponential', 'split_by_threshold',
    'PollingError',
    'Discipline', 'PollingModel', 'derive', 'validate',
    'PollingSimulator', 'SimConfig', 'SimulationEstimate',
    'SweepRow', 'ThresholdStudy', 'run_sweep',
    'FixedPointConfig', 'MomentRequest',
]
