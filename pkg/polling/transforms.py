"""
Transform machinery
Busy-period fixed points, residual-lifetime transforms, removable
singularities and moment extraction by Richardson-extrapolated central
differences
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from .errors import (
    AccuracyError,
    DomainError,
    EvaluationError,
    IterationLimitError,
    PollingError,
)

logger = logging.getLogger(__name__)

# Real argument -> real value. LSTs take omega >= 0, PGFs take z in [0, 1].
TransformFn = Callable[[float], float]

SINGULARITY_FACTOR = 1e-6

# Extrapolation stops once a higher order is this much worse than the best.
_SAFE = 2.0
_MAX_STEP_REDUCTIONS = 12


@dataclass(frozen=True)
class FixedPointConfig:
    """Stopping rule for the busy-period iteration"""
    tolerance: float = 1e-14
    max_iterations: int = 10_000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise DomainError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(frozen=True)
class MomentRequest:
    """Which moments to extract and how precisely"""
    order: int
    target_relative_error: float = 1e-8
    initial_step_factor: float = 1e-2
    max_depth: int = 6

    def __post_init__(self):
        if self.order not in (1, 2, 3):
            raise DomainError(f"moment order must be 1, 2 or 3, got {self.order}")
        if not self.target_relative_error > 0:
            raise DomainError("target_relative_error must be positive")
        if self.max_depth < 2:
            raise DomainError("max_depth must be >= 2")


def busy_period_lst(
    beta: TransformFn,
    lam: float,
    omega: float,
    cfg: FixedPointConfig = FixedPointConfig(),
) -> float:
    """
    Minimal root of pi = beta(omega + lam * (1 - pi))

    Picard iteration from pi = 0; monotone for omega >= 0 when lam * E(B) < 1.

    Args:
        beta: Service-time LST
        lam: Arrival rate of the class
        omega: Transform argument
        cfg: Stopping rule

    Returns:
        Busy-period LST at omega
    """
    pi = 0.0
    gap = math.inf
    for iteration in range(1, cfg.max_iterations + 1):
        nxt = beta(omega + lam * (1.0 - pi))
        if not math.isfinite(nxt) or nxt < 0.0:
            raise IterationLimitError(
                f"busy period diverged at omega={omega}", pi, gap, iteration
            )
        gap = abs(nxt - pi)
        pi = nxt
        if gap < cfg.tolerance:
            logger.debug("busy period converged in %d iterations", iteration)
            return pi
    raise IterationLimitError(
        f"busy period did not converge at omega={omega}", pi, gap, cfg.max_iterations
    )


def busy_period_complement(
    beta_complement: TransformFn,
    lam: float,
    omega: float,
    cfg: FixedPointConfig = FixedPointConfig(),
) -> float:
    """
    1 - pi(omega), iterated directly in complement coordinates

    c = 1 - beta(omega + lam * c) starting from c = 1 (pi = 0). The stopping
    rule is relative so that small complements keep full precision.
    """
    if omega == 0.0:
        # pi(0) = 1 whenever the class is stable
        return 0.0
    c = 1.0
    gap = math.inf
    for iteration in range(1, cfg.max_iterations + 1):
        nxt = beta_complement(omega + lam * c)
        if not math.isfinite(nxt) or nxt > 1.0:
            raise IterationLimitError(
                f"busy period diverged at omega={omega}", 1.0 - c, gap, iteration
            )
        gap = abs(nxt - c)
        c = nxt
        if gap <= cfg.tolerance * abs(c):
            return c
    raise IterationLimitError(
        f"busy period did not converge at omega={omega}",
        1.0 - c, gap, cfg.max_iterations,
    )


def singularity_threshold(mean_cycle: float) -> float:
    """Below this |omega| the 0/0 forms switch to their limit path"""
    return SINGULARITY_FACTOR / mean_cycle


def safe_ratio(
    numerator: TransformFn,
    denominator: TransformFn,
    omega: float,
    threshold: float,
    limit: Optional[float] = None,
) -> float:
    """
    Quotient of two functions that both vanish at omega = 0

    Args:
        numerator: Function with numerator(0) = 0
        denominator: Function with denominator(0) = 0
        omega: Evaluation point
        threshold: Width of the limit region around 0
        limit: Known analytic limit at 0, returned exactly at omega == 0

    Returns:
        numerator(omega) / denominator(omega), or the ratio of centred
        first derivatives when |omega| < threshold
    """
    if abs(omega) >= threshold:
        den = denominator(omega)
        if den == 0.0:
            raise EvaluationError(f"zero denominator at omega={omega}")
        return numerator(omega) / den

    if omega == 0.0 and limit is not None:
        return limit
    d_num = numerator(threshold) - numerator(-threshold)
    d_den = denominator(threshold) - denominator(-threshold)
    if d_den == 0.0:
        raise EvaluationError("zero denominator derivative at the singular point")
    return d_num / d_den


def residual_lst(
    x_lst: TransformFn,
    mean_x: float,
    omega: float,
    complement: Optional[TransformFn] = None,
) -> float:
    """
    LST of the residual lifetime, (1 - X(omega)) / (omega E(X))

    Args:
        x_lst: LST of X
        mean_x: E(X), must be positive
        omega: Transform argument
        complement: Optional 1 - X(omega) evaluated without cancellation
    """
    if not mean_x > 0:
        raise DomainError(f"residual lifetime needs a positive mean, got {mean_x}")
    tail = complement if complement is not None else (lambda w: 1.0 - x_lst(w))
    return safe_ratio(
        tail,
        lambda w: w * mean_x,
        omega,
        SINGULARITY_FACTOR / mean_x,
        limit=1.0,
    )


def _central_difference(values: Dict[float, float], order: int, h: float) -> float:
    if order == 1:
        return (values[h] - values[-h]) / (2.0 * h)
    if order == 2:
        return (values[h] - 2.0 * values[0.0] + values[-h]) / (h * h)
    return (values[2 * h] - 2.0 * values[h] + 2.0 * values[-h] - values[-2 * h]) / (
        2.0 * h ** 3
    )


def _probe_mean(f: TransformFn) -> float:
    # one-sided probe, only used to fix the length scale
    p = 1e-4
    for _ in range(20):
        drop = 1.0 - f(p)
        if drop < 1e-2:
            break
        p /= 100.0
    mean = drop / p
    if not (math.isfinite(mean) and mean > 0):
        raise AccuracyError("could not estimate a length scale", [], math.inf)
    return mean


def _richardson(
    f: TransformFn, order: int, h0: float, req: MomentRequest, cache: Dict[float, float]
):
    def value(x: float) -> float:
        if x not in cache:
            cache[x] = f(x)
        return cache[x]

    table: List[List[float]] = []
    best, best_err = math.nan, math.inf
    for i in range(req.max_depth):
        h = h0 / 2 ** i
        points = (0.0, h, -h) if order < 3 else (h, -h, 2 * h, -2 * h)
        if order == 2:
            value(0.0)
        for x in points:
            value(x)
        row = [_central_difference(cache, order, h)]
        for j in range(1, i + 1):
            factor = 4.0 ** j
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (factor - 1.0))
            err = max(abs(row[j] - row[j - 1]), abs(row[j] - table[i - 1][j - 1]))
            if err <= best_err:
                best, best_err = row[j], err
        table.append(row)
        if i >= 1:
            scale = abs(best) if best != 0 else 1.0
            if best_err <= req.target_relative_error * scale:
                logger.debug("order %d converged at depth %d", order, i + 1)
                return best, best_err / scale
            if abs(row[i] - table[i - 1][i - 1]) >= _SAFE * best_err:
                break
    scale = abs(best) if best not in (0.0,) and math.isfinite(best) else 1.0
    return best, best_err / scale


def lst_moments(
    f: Optional[TransformFn],
    req: MomentRequest,
    mean_hint: Optional[float] = None,
    complement: Optional[TransformFn] = None,
) -> List[float]:
    """
    Moments (-1)^k f^(k)(0), k = 1..order, of the variable whose LST is f

    Central differences on the steps h0, h0/2, ... with a Richardson table of
    depth req.max_depth. The initial step is req.initial_step_factor divided
    by the first-moment estimate. If the stencil leaves the region where f is
    analytic (an evaluation fails), the initial step is halved and the
    extraction restarts.

    Args:
        f: Transform analytic at 0
        req: Order and accuracy target
        mean_hint: Known first moment, skips the probe
        complement: 1 - f without cancellation; differentiated instead of f
            when given

    Returns:
        List of the first req.order moments

    Raises:
        AccuracyError: If the target is not reached
    """
    if complement is not None:
        # same derivatives of order >= 1, values free of rounding near 1
        f = lambda w: -complement(w)  # noqa: E731
        probe = lambda w: 1.0 - complement(w)  # noqa: E731
    elif f is None:
        raise DomainError("lst_moments needs f or its complement")
    else:
        probe = f
    mean = mean_hint if mean_hint and mean_hint > 0 else _probe_mean(probe)
    h0 = req.initial_step_factor / mean

    for attempt in range(_MAX_STEP_REDUCTIONS):
        cache: Dict[float, float] = {}
        try:
            moments, achieved = [], 0.0
            for k in range(1, req.order + 1):
                derivative, err = _richardson(f, k, h0, req, cache)
                moments.append((-1) ** k * derivative)
                achieved = max(achieved, err)
        except (PollingError, ArithmeticError, ValueError) as exc:
            logger.warning("moment stencil failed (%s); halving the step", exc)
            h0 /= 2.0
            continue
        if not all(math.isfinite(m) for m in moments):
            h0 /= 2.0
            continue
        if achieved > req.target_relative_error:
            raise AccuracyError(
                f"moments reached relative error {achieved:.3g}, "
                f"target {req.target_relative_error:.3g}",
                moments, achieved,
            )
        if attempt:
            logger.info("moments needed %d step reductions", attempt)
        return moments
    raise AccuracyError("no stable stencil found near 0", [], math.inf)
