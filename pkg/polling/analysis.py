"""
Waiting-time analysis
Per-class waiting-time LSTs, queue-length PGFs and mean-value formulas for
gated, globally gated and exhaustive service, and the performance report
that cross-checks every closed-form mean against the derivative of its
transform
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

from .branching import CycleAnchor, ModelTransforms, ProductTruncation, TransformForm
from .errors import DisciplineMismatchError, DomainError, InternalDisagreementError
from .model import DerivedQuantities, Discipline, PollingModel, require_valid
from .transforms import (
    FixedPointConfig,
    MomentRequest,
    lst_moments,
    residual_lst,
    safe_ratio,
    singularity_threshold,
)

logger = logging.getLogger(__name__)


class WaitClass(str, Enum):
    H = "H"
    L = "L"
    Q2 = "2"
    # queue-1 customers served FCFS without priorities
    ONE = "1"


class WaitForm(str, Enum):
    PRIMARY = "primary"
    ALTERNATE = "alternate"


class PgfForm(str, Enum):
    LITTLE = "little"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class WaitLstRequest:
    cls: WaitClass
    form: WaitForm = WaitForm.PRIMARY


@dataclass(frozen=True)
class AnchorMoments:
    """First two moments of a cycle or intervisit time"""
    mean: float
    second_moment: float

    @property
    def residual(self) -> float:
        return self.second_moment / (2.0 * self.mean)


@dataclass(frozen=True)
class CycleSummary:
    """
    Cycle and intervisit moments of a model

    They depend on queue 1 only through the aggregate class, so one summary
    serves every threshold split of the same base model.
    """
    start_q1: AnchorMoments
    end_q1: Optional[AnchorMoments] = None
    start_q2: Optional[AnchorMoments] = None
    intervisit_1: Optional[AnchorMoments] = None
    intervisit_2: Optional[AnchorMoments] = None

    def to_dict(self) -> dict:
        out = {}
        for name in ("start_q1", "end_q1", "start_q2", "intervisit_1", "intervisit_2"):
            value = getattr(self, name)
            if value is not None:
                out[name] = {
                    "mean": value.mean,
                    "second_moment": value.second_moment,
                    "residual": value.residual,
                }
        return out


@dataclass(frozen=True)
class ReportOptions:
    preemptive_H: bool = False
    moment_target: float = 1e-7
    cycle_moment_target: float = 1e-8
    initial_step_factor: float = 1e-2
    richardson_depth: int = 6
    agreement_tolerance: float = 1e-6
    classes: Tuple[str, ...] = ("H", "L", "2", "1")


@dataclass(frozen=True)
class FCFactors:
    """Waiting-time LST = prefix * mg1 * vacation"""
    mg1: float
    vacation: float
    prefix: float = 1.0

    @property
    def product(self) -> float:
        return self.prefix * self.mg1 * self.vacation


@dataclass(frozen=True)
class ClassReport:
    mean_wait: float
    second_moment: float
    std_wait: float
    mean_queue_length: float
    derived_mean_wait: float


@dataclass(frozen=True)
class PerformanceReport:
    discipline: str
    preemptive_H: bool
    lambdas: Dict[str, float]
    derived: DerivedQuantities
    classes: Dict[str, ClassReport]
    weighted_mean_wait_1: float
    weighted_std_wait_1: float
    cycles: CycleSummary
    residual_cycle: float
    residual_cycle_completion: Optional[float]
    residual_intervisit: Optional[float]
    identities: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "discipline": self.discipline,
            "preemptive_H": self.preemptive_H,
            "lambdas": dict(self.lambdas),
            "derived": self.derived.to_dict(),
            "classes": {k: dict(v.__dict__) for k, v in self.classes.items()},
            "weighted_mean_wait_1": self.weighted_mean_wait_1,
            "weighted_std_wait_1": self.weighted_std_wait_1,
            "cycles": self.cycles.to_dict(),
            "residual_cycle": self.residual_cycle,
            "residual_cycle_completion": self.residual_cycle_completion,
            "residual_intervisit": self.residual_intervisit,
            "identities": dict(self.identities),
        }


class WaitingTimeAnalyzer:
    """
    Waiting-time transforms and moments for one polling model

    Args:
        model: Polling model; validated on construction
        options: Moment-engine settings and report switches
        truncation: Infinite-product stopping rule
        fixed_point: Busy-period stopping rule
        cycles: Precomputed cycle summary of a model with the same
            aggregate queue-1 class, reused instead of recomputed
    """

    def __init__(
        self,
        model: PollingModel,
        options: ReportOptions = ReportOptions(),
        truncation: ProductTruncation = ProductTruncation(),
        fixed_point: FixedPointConfig = FixedPointConfig(),
        cycles: Optional[CycleSummary] = None,
    ):
        self.derived = require_valid(model)
        self.model = model
        self.options = options
        self.tf = ModelTransforms(model, truncation, fixed_point)
        self.discipline = self.tf.discipline
        self.threshold = singularity_threshold(self.derived.mean_cycle)
        self._cycles = cycles

    # ── Building blocks ─────────────────────────────────────────────────

    def _rate(self, cls: WaitClass) -> float:
        m = self.model
        return {"H": m.lambda_H, "L": m.lambda_L, "2": m.lambda_2, "1": m.lambda_1}[cls.value]

    def _bc(self, cls: WaitClass) -> Callable[[float], float]:
        key = cls.value
        return lambda w: self.tf.service_complement(key, w)

    def _ratio(self, num, den, omega: float) -> float:
        return safe_ratio(num, den, omega, self.threshold, limit=1.0)

    def _gamma_c(self, anchor: CycleAnchor, form: TransformForm = TransformForm.AUTO):
        return lambda w: self.tf.cycle_complement(w, anchor, form)

    def _mg1(self, cls: WaitClass, omega: float) -> float:
        rho = {
            "H": self.derived.rho_H,
            "L": self.derived.rho_L,
            "2": self.derived.rho_2,
            "1": self.derived.rho_1,
        }[cls.value]
        return self._mg1_with(rho, self._rate(cls), self._bc(cls), omega)

    def _mg1_with(self, rho: float, rate: float, service_c, omega: float) -> float:
        """M/G/1 waiting-time LST (1 - rho) w / (w - rate (1 - beta(w)))"""
        return self._ratio(
            lambda w: (1.0 - rho) * w, lambda w: w - rate * service_c(w), omega
        )

    def _residual_intervisit(self, queue: int, omega: float, extended: bool = False,
                             form: TransformForm = TransformForm.AUTO) -> float:
        d = self.derived
        mean = d.mean_intervisit_1 if queue == 1 else d.mean_intervisit_2
        if extended:
            mean /= 1.0 - d.rho_H
        return residual_lst(
            None,
            mean,
            omega,
            complement=lambda w: self.tf.intervisit_complement(w, queue, extended, form),
        )

    def _residual_completion_cycle(self, queue: int, omega: float) -> float:
        anchor = CycleAnchor.END_Q1 if queue == 1 else CycleAnchor.END_Q2
        return residual_lst(
            None,
            self.derived.mean_cycle,
            omega,
            complement=self._gamma_c(anchor, TransformForm.GENERAL),
        )

    # ── Gated and globally gated ────────────────────────────────────────

    def _gated_numerator(self, cls: WaitClass, gamma_c):
        lam_H, lam_L = self.model.lambda_H, self.model.lambda_L
        bHc, bLc = self._bc(WaitClass.H), self._bc(WaitClass.L)
        if cls is WaitClass.H:
            return lambda w: gamma_c(w) - gamma_c(lam_H * bHc(w))
        if cls is WaitClass.L:
            return lambda w: gamma_c(w + lam_H * bHc(w)) - gamma_c(lam_H * bHc(w) + lam_L * bLc(w))
        rate, bc = self._rate(cls), self._bc(cls)
        return lambda w: gamma_c(w) - gamma_c(rate * bc(w))

    def _gated_denominator(self, cls: WaitClass, scale: float = 1.0):
        rate, bc = self._rate(cls), self._bc(cls)
        mean_cycle = self.derived.mean_cycle
        return lambda w: (w - rate * bc(w)) * mean_cycle * scale

    def _gg_q2_numerator(self):
        lam_H, lam_L = self.model.lambda_H, self.model.lambda_L
        bHc, bLc = self._bc(WaitClass.H), self._bc(WaitClass.L)
        gamma_c = self._gamma_c(CycleAnchor.START_Q1)
        return lambda w: (
            gamma_c(w + lam_H * bHc(w) + lam_L * bLc(w)) - gamma_c(self.tf.delta(w))
        )

    def wait_lst_gated(self, cls: WaitClass, omega: float) -> float:
        """
        Waiting-time LST under gated service

        A customer waits for the residual cycle plus the service of those
        customers gated ahead of it; the H/L forms use the cycle starting at
        a queue-1 visit and class 2 the cycle starting at a queue-2 visit.
        """
        if self.discipline is not Discipline.GATED:
            raise DisciplineMismatchError(f"model is {self.discipline.value}, not gated")
        cls = WaitClass(cls)
        anchor = CycleAnchor.START_Q2 if cls is WaitClass.Q2 else CycleAnchor.START_Q1
        num = self._gated_numerator(cls, self._gamma_c(anchor))
        return self._ratio(num, self._gated_denominator(cls), omega)

    def wait_lst_globally_gated(self, cls: WaitClass, omega: float) -> float:
        """Waiting-time LST under globally gated service"""
        if self.discipline is not Discipline.GLOBALLY_GATED:
            raise DisciplineMismatchError(
                f"model is {self.discipline.value}, not globally gated"
            )
        cls = WaitClass(cls)
        if cls is WaitClass.Q2:
            ratio = self._ratio(self._gg_q2_numerator(), self._gated_denominator(cls), omega)
            return (1.0 - self.model.S_1.lst_complement(omega)) * ratio
        num = self._gated_numerator(cls, self._gamma_c(CycleAnchor.START_Q1))
        return self._ratio(num, self._gated_denominator(cls), omega)

    # ── Exhaustive ──────────────────────────────────────────────────────

    def _exhaustive_H_mixture(self, omega: float, preemptive: bool) -> float:
        d = self.derived
        r_I = self._residual_intervisit(1, omega)
        if preemptive:
            r_BL = 1.0
        elif d.rho_L > 0:
            B_L = self.model.B_L
            r_BL = residual_lst(B_L.lst, B_L.mean, omega, complement=B_L.lst_complement)
        else:
            r_BL = 0.0
        mix = ((1.0 - d.rho_1) * r_I + d.rho_L * r_BL) / (1.0 - d.rho_H)
        return self._mg1(WaitClass.H, omega) * mix

    def wait_lst_exhaustive(
        self, cls: WaitClass, omega: float, form: WaitForm = WaitForm.PRIMARY
    ) -> float:
        """
        Waiting-time LST under exhaustive service

        PRIMARY forms decompose into an M/G/1 part and a residual intervisit
        part (H: a mixture over delay cycles started by an intervisit time or
        an L service; L: extended intervisit and completion times).
        ALTERNATE forms use the cycle starting at a visit completion.
        """
        if self.discipline is not Discipline.EXHAUSTIVE:
            raise DisciplineMismatchError(f"model is {self.discipline.value}, not exhaustive")
        cls, form = WaitClass(cls), WaitForm(form)
        d, m = self.derived, self.model
        lam_H, lam_L = m.lambda_H, m.lambda_L

        if form is WaitForm.PRIMARY:
            if cls is WaitClass.H:
                return self._exhaustive_H_mixture(omega, preemptive=False)
            if cls is WaitClass.L:
                rho_star = d.rho_L / (1.0 - d.rho_H)
                mg1 = self._mg1_with(rho_star, lam_L, self.tf.completion_L_complement, omega)
                return mg1 * self._residual_intervisit(1, omega, extended=True)
            queue = 2 if cls is WaitClass.Q2 else 1
            return self._mg1(cls, omega) * self._residual_intervisit(queue, omega)

        if cls is WaitClass.H:
            gamma_c = self._gamma_c(CycleAnchor.END_Q1, TransformForm.GENERAL)
            b1c, bLc, bHc = self._bc(WaitClass.ONE), self._bc(WaitClass.L), self._bc(WaitClass.H)
            lam1, mean_cycle = m.lambda_1, d.mean_cycle
            return self._ratio(
                lambda w: gamma_c(w - lam1 * b1c(w)) + lam_L * bLc(w) * mean_cycle,
                lambda w: (w - lam_H * bHc(w)) * mean_cycle,
                omega,
            )
        if cls is WaitClass.L:
            u = omega - lam_L * self.tf.completion_L_complement(omega)
            return self._residual_completion_cycle(1, u)
        queue = 2 if cls is WaitClass.Q2 else 1
        u = omega - self._rate(cls) * self._bc(cls)(omega)
        return self._residual_completion_cycle(queue, u)

    def wait_lst_preemptive_H(self, omega: float) -> float:
        """H waiting-time LST when H arrivals preempt L services (exhaustive)"""
        if self.discipline is not Discipline.EXHAUSTIVE:
            raise DisciplineMismatchError("preemptive-resume priority needs exhaustive service")
        return self._exhaustive_H_mixture(omega, preemptive=True)

    def two_priority_mg1_H(self, omega: float) -> float:
        """H waiting-time LST of the two-class priority M/G/1 queue, no vacations"""
        d, m = self.derived, self.model
        bHc, bLc = self._bc(WaitClass.H), self._bc(WaitClass.L)
        return self._ratio(
            lambda w: (1.0 - d.rho_1) * w + m.lambda_L * bLc(w),
            lambda w: w - m.lambda_H * bHc(w),
            omega,
        )

    # ── Dispatch ────────────────────────────────────────────────────────

    def wait_lst(
        self,
        cls: WaitClass,
        omega: float,
        form: WaitForm = WaitForm.PRIMARY,
        preemptive_H: bool = False,
    ) -> float:
        cls, form = WaitClass(cls), WaitForm(form)
        if preemptive_H and cls is WaitClass.H:
            return self.wait_lst_preemptive_H(omega)
        if self.discipline is Discipline.EXHAUSTIVE:
            return self.wait_lst_exhaustive(cls, omega, form)
        if form is WaitForm.ALTERNATE:
            raise DomainError(f"no alternate waiting-time form under {self.discipline.value} service")
        if self.discipline is Discipline.GATED:
            return self.wait_lst_gated(cls, omega)
        return self.wait_lst_globally_gated(cls, omega)

    def fuhrmann_cooper_factors(self, cls: WaitClass, omega: float) -> FCFactors:
        """
        Split a waiting-time LST into its M/G/1 factor and vacation factor

        Raises:
            DomainError: For exhaustive H, whose transform is a mixture
        """
        cls = WaitClass(cls)
        d = self.derived
        if self.discipline is Discipline.EXHAUSTIVE:
            if cls is WaitClass.H:
                raise DomainError("exhaustive H waiting time has no product form")
            if cls is WaitClass.L:
                rho_star = d.rho_L / (1.0 - d.rho_H)
                mg1 = self._mg1_with(rho_star, self.model.lambda_L,
                                     self.tf.completion_L_complement, omega)
                return FCFactors(mg1, self._residual_intervisit(1, omega, extended=True))
            queue = 2 if cls is WaitClass.Q2 else 1
            return FCFactors(self._mg1(cls, omega), self._residual_intervisit(queue, omega))

        rho = {"H": d.rho_H, "L": d.rho_L, "2": d.rho_2, "1": d.rho_1}[cls.value]
        mean_cycle = d.mean_cycle
        den = lambda w: (1.0 - rho) * w * mean_cycle  # noqa: E731
        if self.discipline is Discipline.GLOBALLY_GATED and cls is WaitClass.Q2:
            vac = self._ratio(self._gg_q2_numerator(), den, omega)
            prefix = 1.0 - self.model.S_1.lst_complement(omega)
            return FCFactors(self._mg1(cls, omega), vac, prefix)
        anchor = CycleAnchor.START_Q2 if cls is WaitClass.Q2 else CycleAnchor.START_Q1
        vac = self._ratio(self._gated_numerator(cls, self._gamma_c(anchor)), den, omega)
        return FCFactors(self._mg1(cls, omega), vac)

    # ── Queue lengths ───────────────────────────────────────────────────

    def queue_length_pgf(
        self,
        cls: WaitClass,
        z: float,
        form: PgfForm = PgfForm.LITTLE,
    ) -> float:
        """
        PGF of the number of class-c customers in the system

        LITTLE applies the distributional form of Little's law to the
        sojourn time W + B. EXPLICIT evaluates the M/G/1 times intervisit
        decompositions (gated H, L, 2 and globally gated 2).
        """
        cls, form = WaitClass(cls), PgfForm(form)
        if not 0.0 <= z <= 1.0:
            raise DomainError(f"z must lie in [0, 1], got {z}")
        rate = self._rate(cls)
        x = rate * (1.0 - z)
        if rate == 0 or x == 0.0:
            return 1.0

        service = {"H": self.model.B_H, "L": self.model.B_L, "2": self.model.B_2,
                   "1": self.model.B_1}[cls.value]
        if form is PgfForm.LITTLE:
            return self.wait_lst(cls, x) * service.lst(x)
        return self._explicit_pgf(cls, x, service)

    def _explicit_pgf(self, cls: WaitClass, x: float, service) -> float:
        d, m = self.derived, self.model
        gated = self.discipline is Discipline.GATED
        gg_q2 = self.discipline is Discipline.GLOBALLY_GATED and cls is WaitClass.Q2
        if not (gg_q2 or (gated and cls is not WaitClass.ONE)):
            raise DomainError(
                f"no explicit queue-length form for class {cls.value} under "
                f"{self.discipline.value} service"
            )
        rate, bc = self._rate(cls), self._bc(cls)
        rho = {"H": d.rho_H, "L": d.rho_L, "2": d.rho_2}[cls.value]
        mean_cycle = d.mean_cycle

        mg1 = self._ratio(
            lambda u: (1.0 - rho) * u * service.lst(u),
            lambda u: u - rate * bc(u),
            x,
        )
        intervisit_den = lambda u: u * (1.0 - rho) * mean_cycle  # noqa: E731
        if gg_q2:
            vac = self._ratio(self._gg_q2_numerator(), intervisit_den, x)
            return (1.0 - m.S_1.lst_complement(x)) * mg1 * vac

        if cls is WaitClass.L:
            gamma_c = self._gamma_c(CycleAnchor.START_Q1)
            bHc, bLc = self._bc(WaitClass.H), self._bc(WaitClass.L)
            lam_H, lam_L = m.lambda_H, m.lambda_L
            # queue-L contents at the completion and the start of its visit
            vac = self._ratio(
                lambda u: gamma_c(lam_H * bHc(u) + u) - gamma_c(lam_H * bHc(u) + lam_L * bLc(u)),
                intervisit_den,
                x,
            )
            return mg1 * vac
        anchor = CycleAnchor.START_Q2 if cls is WaitClass.Q2 else CycleAnchor.START_Q1
        vac = self._ratio(self._gated_numerator(cls, self._gamma_c(anchor)), intervisit_den, x)
        return mg1 * vac

    # ── Moments ─────────────────────────────────────────────────────────

    def _request(self, target: float) -> MomentRequest:
        return MomentRequest(
            order=2,
            target_relative_error=target,
            initial_step_factor=self.options.initial_step_factor,
            max_depth=self.options.richardson_depth,
        )

    def _anchor_moments(self, complement, mean: float) -> AnchorMoments:
        m1, m2 = lst_moments(
            None, self._request(self.options.cycle_moment_target),
            mean_hint=mean, complement=complement,
        )
        return AnchorMoments(m1, m2)

    def cycle_summary(self) -> CycleSummary:
        """Cycle and intervisit moments by differentiation of their transforms"""
        if self._cycles is not None:
            return self._cycles
        d, tf = self.derived, self.tf
        mean_cycle = d.mean_cycle

        def cycle(anchor, form=TransformForm.AUTO):
            return self._anchor_moments(lambda w: tf.cycle_complement(w, anchor, form), mean_cycle)

        if self.discipline is Discipline.GLOBALLY_GATED:
            summary = CycleSummary(start_q1=cycle(CycleAnchor.START_Q1))
        elif self.discipline is Discipline.GATED:
            summary = CycleSummary(
                start_q1=cycle(CycleAnchor.START_Q1),
                end_q1=cycle(CycleAnchor.END_Q1),
                start_q2=cycle(CycleAnchor.START_Q2),
            )
        else:
            summary = CycleSummary(
                start_q1=cycle(CycleAnchor.START_Q1),
                end_q1=cycle(CycleAnchor.END_Q1),
                intervisit_1=self._anchor_moments(
                    lambda w: tf.intervisit_complement(w, 1), d.mean_intervisit_1
                ),
                intervisit_2=self._anchor_moments(
                    lambda w: tf.intervisit_complement(w, 2), d.mean_intervisit_2
                ),
            )
        logger.info("cycle summary computed for %s service", self.discipline.value)
        self._cycles = summary
        return summary

    def closed_form_means(self, cycles: Optional[CycleSummary] = None,
                          preemptive_H: bool = False) -> Dict[str, float]:
        """Mean waiting time per class from the mean-value formulas"""
        cycles = cycles or self.cycle_summary()
        d, m = self.derived, self.model
        rho_H, rho_L, rho_1, rho_2 = d.rho_H, d.rho_L, d.rho_1, d.rho_2

        if self.discipline is Discipline.EXHAUSTIVE:
            i_res = cycles.intervisit_1.residual
            i2_res = cycles.intervisit_2.residual
            bh_res, bl_res = m.B_H.residual_mean, m.B_L.residual_mean
            priority_work = rho_H * bh_res + rho_L * bl_res
            if preemptive_H:
                wait_H = rho_H * bh_res / (1 - rho_H) + (1 - rho_1) / (1 - rho_H) * i_res
            else:
                wait_H = priority_work / (1 - rho_H) + (1 - rho_1) / (1 - rho_H) * i_res
            return {
                "H": wait_H,
                "L": priority_work / ((1 - rho_H) * (1 - rho_1)) + i_res / (1 - rho_H),
                "2": i2_res + rho_2 / (1 - rho_2) * m.B_2.residual_mean,
                "1": i_res + rho_1 / (1 - rho_1) * m.B_1.residual_mean,
            }

        c_res = cycles.start_q1.residual
        means = {
            "H": (1 + rho_H) * c_res,
            "L": (1 + 2 * rho_H + rho_L) * c_res,
            "1": (1 + rho_1) * c_res,
        }
        if self.discipline is Discipline.GATED:
            means["2"] = (1 + rho_2) * cycles.start_q2.residual
        else:
            means["2"] = m.S_1.mean + (1 + 2 * rho_H + 2 * rho_L + rho_2) * c_res
        return means

    def completion_cycle_means(self, cycles: Optional[CycleSummary] = None) -> Dict[str, float]:
        """Exhaustive H and L means written with the completion-anchored cycle"""
        if self.discipline is not Discipline.EXHAUSTIVE:
            raise DisciplineMismatchError("completion-cycle means apply to exhaustive service")
        cycles = cycles or self.cycle_summary()
        d = self.derived
        c_star = cycles.end_q1.residual
        return {
            "H": (1 - d.rho_1) ** 2 / (1 - d.rho_H) * c_star,
            "L": (1 - d.rho_1) / (1 - d.rho_H) * c_star,
        }

    def wait_moments(self, cls: WaitClass, mean_hint: float, preemptive_H: bool = False):
        """(E(W), E(W^2)) by differentiating the waiting-time LST"""
        f = lambda w: self.wait_lst(cls, w, preemptive_H=preemptive_H)  # noqa: E731
        return lst_moments(f, self._request(self.options.moment_target), mean_hint=mean_hint)

    def report(self) -> PerformanceReport:
        """
        Means, second moments and standard deviations for every class

        Every closed-form mean is recomputed from the derivative of its
        transform; the two must agree within options.agreement_tolerance.

        Raises:
            InternalDisagreementError: Naming the first quantity that disagrees
        """
        opts, d, m = self.options, self.derived, self.model
        tol = opts.agreement_tolerance
        cycles = self.cycle_summary()

        self._check("E(C) at the start of a queue-1 visit", d.mean_cycle, cycles.start_q1.mean)
        if cycles.end_q1 is not None:
            self._check("E(C) at the end of a queue-1 visit", d.mean_cycle, cycles.end_q1.mean)
        if cycles.intervisit_1 is not None:
            self._check("E(I_1)", d.mean_intervisit_1, cycles.intervisit_1.mean)

        means = self.closed_form_means(cycles, preemptive_H=opts.preemptive_H)
        if self.discipline is Discipline.EXHAUSTIVE:
            alt = self.completion_cycle_means(cycles)
            if not opts.preemptive_H:
                self._check("E(W_H) completion-cycle form", means["H"], alt["H"])
            self._check("E(W_L) completion-cycle form", means["L"], alt["L"])

        services = {"H": m.B_H, "L": m.B_L, "2": m.B_2, "1": m.B_1}
        rates = {"H": m.lambda_H, "L": m.lambda_L, "2": m.lambda_2, "1": m.lambda_1}
        classes = {}
        for key in opts.classes:
            logger.info("differentiating the %s waiting-time transform", key)
            m1, m2 = self.wait_moments(WaitClass(key), means[key], opts.preemptive_H and key == "H")
            self._check(f"E(W_{key})", means[key], m1, tol)
            var = max(m2 - means[key] ** 2, 0.0)
            service_mean = services[key].mean
            if opts.preemptive_H and key == "L":
                # an interrupted L service lasts for its completion time
                service_mean /= 1.0 - d.rho_H
            queue_length = rates[key] * (means[key] + service_mean)
            classes[key] = ClassReport(
                mean_wait=means[key],
                second_moment=m2,
                std_wait=math.sqrt(var),
                mean_queue_length=queue_length,
                derived_mean_wait=m1,
            )

        lam1 = m.lambda_1
        w_mean = w_std = math.nan
        has_priorities = "H" in classes and "L" in classes
        if lam1 > 0 and has_priorities:
            w_mean = (m.lambda_H * classes["H"].mean_wait + m.lambda_L * classes["L"].mean_wait) / lam1
            w_second = (
                m.lambda_H * classes["H"].second_moment + m.lambda_L * classes["L"].second_moment
            ) / lam1
            w_std = math.sqrt(max(w_second - w_mean ** 2, 0.0))

        return PerformanceReport(
            discipline=self.discipline.value,
            preemptive_H=opts.preemptive_H,
            lambdas=dict(rates),
            derived=d,
            classes=classes,
            weighted_mean_wait_1=w_mean,
            weighted_std_wait_1=w_std,
            cycles=cycles,
            residual_cycle=cycles.start_q1.residual,
            residual_cycle_completion=cycles.end_q1.residual if cycles.end_q1 else None,
            residual_intervisit=cycles.intervisit_1.residual if cycles.intervisit_1 else None,
            identities=self._identities(classes, cycles) if has_priorities else {},
        )

    def _identities(self, classes: Dict[str, ClassReport], cycles: CycleSummary) -> Dict[str, float]:
        d = self.derived
        gap = classes["L"].mean_wait - classes["H"].mean_wait
        if self.discipline is Discipline.EXHAUSTIVE:
            ratio = classes["H"].mean_wait / classes["L"].mean_wait
            return {
                "EW_L - EW_H": gap,
                "rho_1 (1 - rho_1) / (1 - rho_H) E(C*_res)":
                    d.rho_1 * (1 - d.rho_1) / (1 - d.rho_H) * cycles.end_q1.residual,
                "EW_H / EW_L": ratio,
                "1 - rho_1": 1 - d.rho_1,
            }
        return {
            "EW_L - EW_H": gap,
            "rho_1 E(C_res)": d.rho_1 * cycles.start_q1.residual,
        }

    def _check(self, quantity: str, closed_form: float, derived: float,
               tol: Optional[float] = None):
        tol = self.options.agreement_tolerance if tol is None else tol
        scale = max(abs(closed_form), 1e-300)
        if not abs(closed_form - derived) <= tol * scale:
            raise InternalDisagreementError(quantity, closed_form, derived)


# ── Module-level operations ──────────────────────────────────────────────

def wait_lst_gated(m: PollingModel, cls: WaitClass, omega: float) -> float:
    return WaitingTimeAnalyzer(m).wait_lst_gated(cls, omega)


def wait_lst_globally_gated(m: PollingModel, cls: WaitClass, omega: float) -> float:
    return WaitingTimeAnalyzer(m).wait_lst_globally_gated(cls, omega)


def wait_lst_exhaustive(
    m: PollingModel, cls: WaitClass, omega: float, form: WaitForm = WaitForm.PRIMARY
) -> float:
    return WaitingTimeAnalyzer(m).wait_lst_exhaustive(cls, omega, form)


def wait_lst_preemptive_H(m: PollingModel, omega: float) -> float:
    return WaitingTimeAnalyzer(m).wait_lst_preemptive_H(omega)


def queue_length_pgf(m: PollingModel, cls: WaitClass, z: float,
                     form: PgfForm = PgfForm.LITTLE) -> float:
    return WaitingTimeAnalyzer(m).queue_length_pgf(cls, z, form)


def report(m: PollingModel, options: ReportOptions = ReportOptions()) -> PerformanceReport:
    return WaitingTimeAnalyzer(m, options).report()
