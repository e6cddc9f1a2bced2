"""
Threshold sweep
Queue-1 jobs shorter than t get high priority; the sweep evaluates the
waiting times on a grid of thresholds and locates the best one
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import List, Optional, Sequence, Tuple

from .analysis import CycleSummary, ReportOptions, WaitingTimeAnalyzer
from .branching import ProductTruncation
from .distributions import Distribution, Exponential
from .errors import DomainError, PollingError, SweepRowError
from .model import Discipline, PollingModel
from .transforms import FixedPointConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdStudy:
    """A two-queue model whose queue-1 class is split at a service threshold"""
    base_service: Exponential
    lambda_1: float
    lambda_2: float
    B_2: Distribution
    S_1: Distribution
    S_2: Distribution
    discipline: Discipline = Discipline.GATED

    def model_at(self, t: float) -> PollingModel:
        return PollingModel.from_threshold(
            self.base_service, self.lambda_1, t, self.lambda_2,
            self.B_2, self.S_1, self.S_2, self.discipline,
        )

    def base_model(self) -> PollingModel:
        return PollingModel.without_priorities(
            self.lambda_1, self.base_service, self.lambda_2,
            self.B_2, self.S_1, self.S_2, self.discipline,
        )


@dataclass(frozen=True)
class SweepRow:
    t: float
    lambda_H: float
    lambda_L: float
    EW_H: float
    EW_L: float
    EW_1_weighted: float
    EW_1_nopriority: float
    EW_2: float
    sd_WH: float
    sd_WL: float
    sd_W1_weighted: float
    sd_W1_nopriority: float

    @classmethod
    def header(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> List[float]:
        return [getattr(self, name) for name in self.header()]


@dataclass(frozen=True)
class SweepSummary:
    argmin_mean_t: float
    argmin_mean: float
    argmin_std_t: float
    argmin_std: float
    std_local_minima: Tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "argmin_EW_1_weighted": {"t": self.argmin_mean_t, "value": self.argmin_mean},
            "argmin_sd_W1_weighted": {"t": self.argmin_std_t, "value": self.argmin_std},
            "sd_W1_weighted_local_minima": list(self.std_local_minima),
        }


@dataclass(frozen=True)
class Baseline:
    """Threshold-independent quantities, computed once per sweep"""
    cycles: CycleSummary
    EW_1_nopriority: float
    sd_W1_nopriority: float
    EW_2: float


@dataclass(frozen=True)
class SweepSettings:
    options: ReportOptions = ReportOptions()
    truncation: ProductTruncation = ProductTruncation()
    fixed_point: FixedPointConfig = FixedPointConfig()
    with_std: bool = True


def threshold_grid(t_min: float, t_max: float, step: float) -> List[float]:
    """t_min, t_min + step, ... up to t_max inclusive, rounded to 12 digits"""
    if not t_min > 0:
        raise DomainError(f"t_min must be positive, got {t_min}")
    if not step > 0:
        raise DomainError(f"step must be positive, got {step}")
    if t_max < t_min:
        raise DomainError(f"t_max {t_max} is below t_min {t_min}")
    count = int(math.floor((t_max - t_min) / step + 1e-9)) + 1
    return [round(t_min + k * step, 12) for k in range(count)]


def compute_baseline(study: ThresholdStudy, settings: SweepSettings) -> Baseline:
    """Cycle moments, the nonpriority queue-1 wait and the queue-2 wait"""
    options = replace(settings.options, classes=("2", "1") if settings.with_std else ())
    analyzer = WaitingTimeAnalyzer(
        study.base_model(), options, settings.truncation, settings.fixed_point
    )
    cycles = analyzer.cycle_summary()
    if settings.with_std:
        rep = analyzer.report()
        one, two = rep.classes["1"], rep.classes["2"]
        return Baseline(cycles, one.mean_wait, one.std_wait, two.mean_wait)
    means = analyzer.closed_form_means(cycles)
    return Baseline(cycles, means["1"], math.nan, means["2"])


def sweep_row(study: ThresholdStudy, t: float, baseline: Baseline,
              settings: SweepSettings) -> SweepRow:
    """Waiting-time figures of one threshold"""
    model = study.model_at(t)
    options = replace(settings.options, classes=("H", "L"))
    analyzer = WaitingTimeAnalyzer(
        model, options, settings.truncation, settings.fixed_point, cycles=baseline.cycles
    )
    lam1 = model.lambda_1
    if settings.with_std:
        rep = analyzer.report()
        ew_h, ew_l = rep.classes["H"].mean_wait, rep.classes["L"].mean_wait
        sd_h, sd_l = rep.classes["H"].std_wait, rep.classes["L"].std_wait
        sd_w = rep.weighted_std_wait_1
    else:
        means = analyzer.closed_form_means()
        ew_h, ew_l = means["H"], means["L"]
        sd_h = sd_l = sd_w = math.nan

    return SweepRow(
        t=t,
        lambda_H=model.lambda_H,
        lambda_L=model.lambda_L,
        EW_H=ew_h,
        EW_L=ew_l,
        EW_1_weighted=(model.lambda_H * ew_h + model.lambda_L * ew_l) / lam1,
        EW_1_nopriority=baseline.EW_1_nopriority,
        EW_2=baseline.EW_2,
        sd_WH=sd_h,
        sd_WL=sd_l,
        sd_W1_weighted=sd_w,
        sd_W1_nopriority=baseline.sd_W1_nopriority,
    )


def _row_worker(args):
    study, t, baseline, settings = args
    try:
        return True, sweep_row(study, t, baseline, settings)
    except PollingError as exc:
        # exceptions with extra constructor arguments do not survive pickling
        return False, (t, exc.kind, str(exc), exc.details())


def run_sweep(
    study: ThresholdStudy,
    grid: Sequence[float],
    settings: SweepSettings = SweepSettings(),
    threads: int = 1,
    baseline: Optional[Baseline] = None,
) -> Tuple[List[SweepRow], SweepSummary]:
    """
    Evaluate every grid threshold

    Args:
        study: Model family to sweep
        grid: Thresholds, ascending
        settings: Numeric settings; with_std=False skips second moments
        threads: Worker processes; 1 runs inline
        baseline: Precomputed threshold-independent quantities

    Returns:
        Rows in grid order and their summary

    Raises:
        SweepRowError: For the first threshold that failed
    """
    if not grid:
        raise DomainError("threshold grid is empty")
    baseline = baseline or compute_baseline(study, settings)
    jobs = [(study, t, baseline, settings) for t in grid]
    logger.info("sweeping %d thresholds on %d worker(s)", len(jobs), threads)

    if threads <= 1:
        rows = _collect(map(_row_worker, jobs))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = _collect(pool.map(_row_worker, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    return rows, summarize(rows)


def _collect(results) -> List[SweepRow]:
    rows = []
    for ok, payload in results:
        if not ok:
            t, kind, message, details = payload
            raise SweepRowError(t, kind, message, details)
        rows.append(payload)
    return rows


def summarize(rows: Sequence[SweepRow]) -> SweepSummary:
    """
    Grid argmins (ties go to the smaller t) and strict local minima of the std curve

    The no-priority deviation is the t -> 0 limit of the weighted curve, so it
    is prepended as a point at t = 0. When the curve rises away from that limit,
    t = 0 is reported as a boundary minimum.
    """
    best_mean = min(rows, key=lambda r: (r.EW_1_weighted, r.t))
    finite = [r for r in rows if math.isfinite(r.sd_W1_weighted)]
    if finite:
        best_std = min(finite, key=lambda r: (r.sd_W1_weighted, r.t))
        std_t, std_value = best_std.t, best_std.sd_W1_weighted
    else:
        std_t, std_value = math.nan, math.nan

    return SweepSummary(
        argmin_mean_t=best_mean.t,
        argmin_mean=best_mean.EW_1_weighted,
        argmin_std_t=std_t,
        argmin_std=std_value,
        std_local_minima=_local_minima(finite),
    )


def _local_minima(finite: Sequence[SweepRow]) -> Tuple[float, ...]:
    points = [(r.t, r.sd_W1_weighted) for r in finite]
    head: Tuple[float, ...] = ()
    if points and math.isfinite(finite[0].sd_W1_nopriority):
        points.insert(0, (0.0, finite[0].sd_W1_nopriority))
        if points[0][1] < points[1][1]:
            head = (0.0,)
    return head + tuple(
        points[i][0]
        for i in range(1, len(points) - 1)
        if points[i - 1][1] > points[i][1] < points[i + 1][1]
    )
