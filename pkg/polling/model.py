"""
Polling model
Two queues served cyclically; queue 1 holds high (H) and low (L) priority
customers, queue 2 a single class
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List

from .distributions import Distribution, Exponential, Mixture, split_by_threshold
from .errors import InstabilityError, ModelValidationError


class Discipline(str, Enum):
    GATED = "gated"
    GLOBALLY_GATED = "globally-gated"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class PollingModel:
    """
    Arrival rates, service and switch-over distributions, and the discipline

    S_1 is the switch-over from queue 1 to queue 2, S_2 the way back.
    """
    lambda_H: float
    lambda_L: float
    lambda_2: float
    B_H: Distribution
    B_L: Distribution
    B_2: Distribution
    S_1: Distribution
    S_2: Distribution
    discipline: Discipline = Discipline.GATED

    @property
    def lambda_1(self) -> float:
        return self.lambda_H + self.lambda_L

    @property
    def B_1(self) -> Distribution:
        """Service distribution of a queue-1 customer regardless of priority"""
        if self.lambda_L == 0 or self.lambda_1 == 0:
            return self.B_H
        if self.lambda_H == 0:
            return self.B_L
        lam = self.lambda_1
        return Mixture((self.lambda_H / lam, self.lambda_L / lam), (self.B_H, self.B_L))

    def with_discipline(self, discipline: Discipline) -> "PollingModel":
        return replace(self, discipline=Discipline(discipline))

    def scaled(self, factor: float) -> "PollingModel":
        """Same model with every arrival rate multiplied by factor"""
        return replace(
            self,
            lambda_H=self.lambda_H * factor,
            lambda_L=self.lambda_L * factor,
            lambda_2=self.lambda_2 * factor,
        )

    @classmethod
    def from_threshold(
        cls,
        base_service: Exponential,
        lambda_1: float,
        threshold: float,
        lambda_2: float,
        B_2: Distribution,
        S_1: Distribution,
        S_2: Distribution,
        discipline: Discipline = Discipline.GATED,
    ) -> "PollingModel":
        """Split queue-1 jobs at a service threshold into H and L classes"""
        split = split_by_threshold(base_service, lambda_1, threshold)
        return cls(
            lambda_H=split.lambda_H,
            lambda_L=split.lambda_L,
            lambda_2=lambda_2,
            B_H=split.dist_H,
            B_L=split.dist_L,
            B_2=B_2,
            S_1=S_1,
            S_2=S_2,
            discipline=Discipline(discipline),
        )

    @classmethod
    def without_priorities(
        cls,
        lambda_1: float,
        B_1: Distribution,
        lambda_2: float,
        B_2: Distribution,
        S_1: Distribution,
        S_2: Distribution,
        discipline: Discipline = Discipline.GATED,
    ) -> "PollingModel":
        """All queue-1 customers in the H class; L is empty"""
        return cls(lambda_1, 0.0, lambda_2, B_1, B_1, B_2, S_1, S_2, Discipline(discipline))


@dataclass(frozen=True)
class DerivedQuantities:
    rho_H: float
    rho_L: float
    rho_1: float
    rho_2: float
    rho: float
    mean_switch: float
    mean_cycle: float
    mean_visit_1: float
    mean_visit_2: float
    mean_intervisit_1: float
    mean_intervisit_2: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def derive(m: PollingModel) -> DerivedQuantities:
    """Loads, mean cycle, visit and intervisit times"""
    rho_H = m.lambda_H * m.B_H.mean
    rho_L = m.lambda_L * m.B_L.mean
    rho_1 = rho_H + rho_L
    rho_2 = m.lambda_2 * m.B_2.mean
    rho = rho_1 + rho_2
    mean_switch = m.S_1.mean + m.S_2.mean
    mean_cycle = mean_switch / (1.0 - rho) if rho < 1 else math.inf
    return DerivedQuantities(
        rho_H=rho_H,
        rho_L=rho_L,
        rho_1=rho_1,
        rho_2=rho_2,
        rho=rho,
        mean_switch=mean_switch,
        mean_cycle=mean_cycle,
        mean_visit_1=rho_1 * mean_cycle,
        mean_visit_2=rho_2 * mean_cycle,
        mean_intervisit_1=(1.0 - rho_1) * mean_cycle,
        mean_intervisit_2=(1.0 - rho_2) * mean_cycle,
    )


def validate(m: PollingModel) -> List[str]:
    """
    Every invariant the model violates

    Returns:
        List of violation messages; empty when the model is valid
    """
    violations = []
    for name in ("lambda_H", "lambda_L", "lambda_2"):
        value = getattr(m, name)
        if not math.isfinite(value):
            violations.append(f"{name} must be finite, got {value}")
        elif value < 0:
            violations.append(f"{name} must be >= 0, got {value}")

    for rate_name, dist_name in (("lambda_H", "B_H"), ("lambda_L", "B_L"), ("lambda_2", "B_2")):
        if getattr(m, rate_name) > 0 and not getattr(m, dist_name).mean > 0:
            violations.append(f"{dist_name} has zero mean but {rate_name} > 0")

    if not m.S_1.mean + m.S_2.mean > 0:
        violations.append("total mean switch-over time must be positive")

    if not violations:
        rho = derive(m).rho
        if rho >= 1:
            violations.append(f"rho = {rho:.12g} >= 1")
    return violations


def require_valid(m: PollingModel) -> DerivedQuantities:
    """
    Derived quantities of a model that passed validation

    Raises:
        InstabilityError: If the only problem is rho >= 1
        ModelValidationError: For any other violation
    """
    violations = validate(m)
    if violations:
        if len(violations) == 1 and violations[0].startswith("rho ="):
            raise InstabilityError(derive(m).rho)
        raise ModelValidationError(violations)
    return derive(m)
