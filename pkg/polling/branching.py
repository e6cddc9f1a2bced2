"""
Branching-process transforms of the polling model
Offspring and immigration PGFs, the infinite-product queue-length PGF at
the start of a queue-1 visit, visit-epoch PGFs, cycle and intervisit LSTs

Everything is evaluated internally in complement form. A PGF argument
(z1, z2) is carried as x = (lambda_1 (1 - z1), lambda_2 (1 - z2)) and every
function returns 1 minus its value, so that transforms near their
normalization point keep full relative precision.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from .errors import DisciplineMismatchError, DomainError, TruncationError
from .model import Discipline, PollingModel, derive
from .transforms import FixedPointConfig, busy_period_complement

logger = logging.getLogger(__name__)

# Public transforms accept omega down to -NEGATIVE_REACH / E(C) so that
# central-difference stencils can straddle 0.
NEGATIVE_REACH = 0.1


class CycleAnchor(str, Enum):
    START_Q1 = "start-q1"
    END_Q1 = "end-q1"
    START_Q2 = "start-q2"
    END_Q2 = "end-q2"


class TransformForm(str, Enum):
    AUTO = "auto"
    GENERAL = "general"
    SHORTCUT = "shortcut"


@dataclass(frozen=True)
class ProductTruncation:
    """Stopping rule for the infinite products"""
    epsilon: float = 1e-14
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


@dataclass(frozen=True)
class ComponentValues:
    h1: float
    h2: float
    f1: float
    f2: float
    g1: float
    g2: float
    g: float


@dataclass(frozen=True)
class VisitValues:
    vb1: float
    vb2: float
    vc1: float
    vc2: float


def merge(*complements: float) -> float:
    """Complement of a product given the complements of its factors"""
    out = 0.0
    for c in complements:
        out = out + c - out * c
    return out


class ModelTransforms:
    """
    Every transform of a polling model, evaluable at real arguments

    Args:
        model: Validated polling model
        truncation: Stopping rule for the infinite products
        fixed_point: Stopping rule for busy-period iterations
    """

    def __init__(
        self,
        model: PollingModel,
        truncation: ProductTruncation = ProductTruncation(),
        fixed_point: FixedPointConfig = FixedPointConfig(),
    ):
        self.model = model
        self.discipline = Discipline(model.discipline)
        self.derived = derive(model)
        self.truncation = truncation
        self.fixed_point = fixed_point

        self.lam_H = model.lambda_H
        self.lam_L = model.lambda_L
        self.lam1 = model.lambda_1
        self.lam2 = model.lambda_2
        self._B1 = model.B_1
        self.min_omega = -NEGATIVE_REACH / self.derived.mean_cycle

    # ── Single-class transforms ─────────────────────────────────────────

    def service_complement(self, cls: str, omega: float) -> float:
        """1 - beta_c(omega) for c in H, L, 1, 2"""
        return self._service(cls).lst_complement(omega)

    def _service(self, cls: str):
        dists = {
            "H": self.model.B_H,
            "L": self.model.B_L,
            "1": self._B1,
            "2": self.model.B_2,
        }
        if cls not in dists:
            raise DomainError(f"unknown class {cls!r}")
        return dists[cls]

    def _rate(self, cls: str) -> float:
        return {"H": self.lam_H, "L": self.lam_L, "1": self.lam1, "2": self.lam2}[cls]

    def busy_complement(self, cls: str, omega: float) -> float:
        """1 - pi_c(omega), busy period of class c alone"""
        return busy_period_complement(
            self._service(cls).lst_complement, self._rate(cls), omega, self.fixed_point
        )

    def busy_period(self, cls: str, omega: float) -> float:
        self._check_omega(omega)
        return 1.0 - self.busy_complement(cls, omega)

    def _s1c(self, omega: float) -> float:
        return self.model.S_1.lst_complement(omega)

    def _s2c(self, omega: float) -> float:
        return self.model.S_2.lst_complement(omega)

    def _b1c(self, omega: float) -> float:
        return self._B1.lst_complement(omega)

    def _b2c(self, omega: float) -> float:
        return self.model.B_2.lst_complement(omega)

    def _p1c(self, omega: float) -> float:
        return self.busy_complement("1", omega)

    def _p2c(self, omega: float) -> float:
        return self.busy_complement("2", omega)

    def phi_complement(self, queue: int, omega: float) -> float:
        """Complement of the LST of one customer's contribution to a visit"""
        if self.discipline is Discipline.EXHAUSTIVE:
            return self._p1c(omega) if queue == 1 else self._p2c(omega)
        return self._b1c(omega) if queue == 1 else self._b2c(omega)

    def delta(self, omega: float) -> float:
        """Total Poisson thinning of omega by one round of service"""
        m = self.model
        return (
            self.lam_H * m.B_H.lst_complement(omega)
            + self.lam_L * m.B_L.lst_complement(omega)
            + self.lam2 * m.B_2.lst_complement(omega)
        )

    def completion_L_complement(self, omega: float) -> float:
        """1 - beta*_L: an L service extended by the H busy periods it triggers"""
        return self.model.B_L.lst_complement(omega + self.lam_H * self.busy_complement("H", omega))

    def completion_L_lst(self, omega: float) -> float:
        self._check_omega(omega)
        return 1.0 - self.completion_L_complement(omega)

    # ── Branching components ────────────────────────────────────────────

    def _replacement_x(self, x1: float, x2: float) -> Tuple[float, float]:
        if self.discipline is Discipline.EXHAUSTIVE:
            return self._p1c(x2), self._p2c(x1)
        return self._b1c(x1 + x2), self._b2c(x1 + x2)

    def _offspring_x(self, x1: float, x2: float) -> Tuple[float, float, float, float]:
        """(1-f1, 1-f2, 1-g1, 1-g2) at x"""
        if self.discipline is Discipline.GLOBALLY_GATED:
            s = x1 + x2
            return self._b1c(s), self._b2c(s), self._s1c(s), self._s2c(s)

        if self.discipline is Discipline.EXHAUSTIVE:
            f2c = self._p2c(x1)
            f1c = self._p1c(self.lam2 * f2c)
        else:
            f2c = self._b2c(x1 + x2)
            f1c = self._b1c(x1 + self.lam2 * f2c)
        return f1c, f2c, self._s1c(x1 + self.lam2 * f2c), self._s2c(x1 + x2)

    def component_pgfs(self, z1: float, z2: float) -> ComponentValues:
        """Offspring and immigration PGFs at (z1, z2)"""
        x1, x2 = self._to_x(z1, z2)
        h1c, h2c = self._replacement_x(x1, x2)
        f1c, f2c, g1c, g2c = self._offspring_x(x1, x2)
        return ComponentValues(
            h1=1.0 - h1c,
            h2=1.0 - h2c,
            f1=1.0 - f1c,
            f2=1.0 - f2c,
            g1=1.0 - g1c,
            g2=1.0 - g2c,
            g=1.0 - merge(g1c, g2c),
        )

    # ── Joint queue-length PGFs at polling epochs ───────────────────────

    def p1_complement_x(self, x1: float, x2: float) -> float:
        """
        1 - P1 at x, with P1 the joint PGF at the start of a queue-1 visit

        P1(z) is the product of g(f_n(z)) over n >= 0. The iterates f_n are
        formed by forward composition; the product stops once a term's gap
        |1 - g(f_n)| is below epsilon relative to the accumulated log.

        Raises:
            TruncationError: If max_terms is exceeded
        """
        eps = self.truncation.epsilon
        log_p = 0.0
        gap = math.inf
        for n in range(self.truncation.max_terms):
            f1c, f2c, g1c, g2c = self._offspring_x(x1, x2)
            gap = merge(g1c, g2c)
            if gap >= 1.0:
                return 1.0
            log_p += math.log1p(-gap)
            if gap == 0.0 or abs(gap) <= eps * abs(log_p):
                logger.debug("P1 product stopped after %d terms", n + 1)
                return -math.expm1(log_p)
            x1, x2 = self.lam1 * f1c, self.lam2 * f2c
        raise TruncationError(
            f"P1 product needed more than {self.truncation.max_terms} terms",
            partial=math.exp(log_p),
            gap=gap,
        )

    def _vc1_complement_x(self, x1: float, x2: float) -> float:
        h1c, _ = self._replacement_x(x1, x2)
        return self.p1_complement_x(self.lam1 * h1c, x2)

    def _vb2_complement_x(self, x1: float, x2: float) -> float:
        return merge(self._vc1_complement_x(x1, x2), self._s1c(x1 + x2))

    def _vc2_complement_x(self, x1: float, x2: float) -> float:
        if self.discipline is Discipline.GLOBALLY_GATED:
            # V_c2 = P1 / sigma_2
            s2c = self._s2c(x1 + x2)
            return (self.p1_complement_x(x1, x2) - s2c) / (1.0 - s2c)
        _, h2c = self._replacement_x(x1, x2)
        return self._vb2_complement_x(x1, self.lam2 * h2c)

    def p1_eval(self, z1: float, z2: float) -> float:
        """Joint PGF of (N1, N2) at the start of a queue-1 visit"""
        return 1.0 - self.p1_complement_x(*self._to_x(z1, z2))

    def p1_priority_eval(self, z_H: float, z_L: float, z_2: float) -> float:
        """Joint PGF of (N_H, N_L, N_2) at the start of a queue-1 visit"""
        for name, z in (("z_H", z_H), ("z_L", z_L)):
            if not 0.0 <= z <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {z}")
        if z_H == z_L or self.lam1 == 0:
            z1 = z_H
        else:
            z1 = (self.lam_H * z_H + self.lam_L * z_L) / self.lam1
        return self.p1_eval(z1, z_2)

    def visit_pgfs(self, z1: float, z2: float) -> VisitValues:
        """Joint queue-length PGFs at the four polling epochs"""
        x = self._to_x(z1, z2)
        return VisitValues(
            vb1=1.0 - self.p1_complement_x(*x),
            vb2=1.0 - self._vb2_complement_x(*x),
            vc1=1.0 - self._vc1_complement_x(*x),
            vc2=1.0 - self._vc2_complement_x(*x),
        )

    # ── Cycle times ─────────────────────────────────────────────────────

    def cycle_complement(
        self,
        omega: float,
        anchor: CycleAnchor = CycleAnchor.START_Q1,
        form: TransformForm = TransformForm.AUTO,
    ) -> float:
        """1 - LST of the cycle time starting at the given polling epoch"""
        self._check_omega(omega)
        anchor, form = CycleAnchor(anchor), TransformForm(form)

        if self.discipline is Discipline.GLOBALLY_GATED:
            if anchor is not CycleAnchor.START_Q1:
                raise DisciplineMismatchError(
                    f"globally gated cycle transforms are anchored at {CycleAnchor.START_Q1.value}"
                )
            if form is TransformForm.GENERAL:
                return merge(
                    self._s1c(omega),
                    self._s2c(omega),
                    self.p1_complement_x(self.lam1 * self._b1c(omega), self.lam2 * self._b2c(omega)),
                )
            return self.gg_cycle_complement(omega)

        shortcut = self._shortcut(omega, anchor, form)
        if shortcut is not None:
            return shortcut
        return self._general_cycle(omega, anchor)

    def cycle_lst(
        self,
        omega: float,
        anchor: CycleAnchor = CycleAnchor.START_Q1,
        form: TransformForm = TransformForm.AUTO,
    ) -> float:
        """
        LST of the cycle time

        Args:
            omega: Transform argument
            anchor: Polling epoch at which the cycle starts
            form: GENERAL composition, the discipline SHORTCUT, or AUTO
                (shortcut where its PGF argument is admissible)

        Raises:
            DomainError: If SHORTCUT is requested outside its domain or none exists
            DisciplineMismatchError: For anchors a discipline does not support
        """
        return 1.0 - self.cycle_complement(omega, anchor, form)

    def _shortcut(self, omega: float, anchor: CycleAnchor, form: TransformForm):
        """Shortcut complement, or None where AUTO falls back to the general form"""
        if form is TransformForm.GENERAL:
            return None
        x = None
        if self.discipline is Discipline.GATED:
            if anchor is CycleAnchor.START_Q1 and self.lam1 > 0:
                x, lam = (omega, 0.0), self.lam1
            elif anchor is CycleAnchor.START_Q2 and self.lam2 > 0:
                x, lam = (0.0, omega), self.lam2
        elif self.discipline is Discipline.EXHAUSTIVE:
            if anchor is CycleAnchor.END_Q1 and self.lam1 > 0:
                x, lam = (omega + self.lam1 * self._p1c(omega), 0.0), self.lam1
            elif anchor is CycleAnchor.END_Q2 and self.lam2 > 0:
                x, lam = (0.0, omega + self.lam2 * self._p2c(omega)), self.lam2

        if x is None:
            if form is TransformForm.SHORTCUT:
                raise DomainError(
                    f"no {self.discipline.value} shortcut for anchor {anchor.value}; "
                    "use the general form"
                )
            return None

        arg = x[0] + x[1]
        if form is TransformForm.SHORTCUT and not 0.0 <= arg <= lam:
            raise DomainError(
                f"shortcut PGF argument {1.0 - arg / lam:.6g} outside [0, 1]; "
                "use the general form"
            )
        if arg > lam:
            return None

        if anchor in (CycleAnchor.START_Q1, CycleAnchor.END_Q1):
            return self.p1_complement_x(*x)
        return self._vb2_complement_x(*x)

    def _general_cycle(self, omega: float, anchor: CycleAnchor) -> float:
        lam1, lam2 = self.lam1, self.lam2
        phi = self.phi_complement

        if anchor is CycleAnchor.START_Q1:
            a = omega + lam2 * phi(2, omega)
            return merge(
                self._s1c(a),
                self._s2c(omega),
                self.p1_complement_x(lam1 * phi(1, a), lam2 * phi(2, omega)),
            )
        if anchor is CycleAnchor.START_Q2:
            a = omega + lam1 * phi(1, omega)
            return merge(
                self._s2c(a),
                self._s1c(omega),
                self._vb2_complement_x(lam1 * phi(1, omega), lam2 * phi(2, a)),
            )
        if anchor is CycleAnchor.END_Q1:
            phi1 = phi(1, omega)
            b = omega + lam1 * phi1
            phi2 = phi(2, b)
            c = b + lam2 * phi2
            return merge(
                self._s1c(c),
                self._s2c(b),
                self._vc1_complement_x(lam1 * phi1, lam2 * phi2),
            )
        phi2 = phi(2, omega)
        b = omega + lam2 * phi2
        phi1 = phi(1, b)
        c = b + lam1 * phi1
        return merge(
            self._s2c(c),
            self._s1c(b),
            self._vc2_complement_x(lam1 * phi1, lam2 * phi2),
        )

    def gg_cycle_complement(self, omega: float) -> float:
        """
        1 - gamma_1 under globally gated service

        gamma_1(omega) is the product of sigma_1 sigma_2 over the iterates
        delta^i(omega), i >= 0.
        """
        if self.discipline is not Discipline.GLOBALLY_GATED:
            raise DisciplineMismatchError("the delta recursion applies to globally gated service only")
        self._check_omega(omega)
        eps = self.truncation.epsilon
        log_g, gap, w = 0.0, math.inf, omega
        for n in range(self.truncation.max_terms):
            gap = merge(self._s1c(w), self._s2c(w))
            if gap >= 1.0:
                return 1.0
            log_g += math.log1p(-gap)
            if gap == 0.0 or abs(gap) <= eps * abs(log_g):
                logger.debug("delta product stopped after %d terms", n + 1)
                return -math.expm1(log_g)
            w = self.delta(w)
        raise TruncationError(
            f"delta product needed more than {self.truncation.max_terms} terms",
            partial=math.exp(log_g),
            gap=gap,
        )

    def gg_cycle_lst(self, omega: float) -> float:
        return 1.0 - self.gg_cycle_complement(omega)

    # ── Intervisit times (exhaustive) ───────────────────────────────────

    def intervisit_complement(
        self,
        omega: float,
        queue: int = 1,
        extended: bool = False,
        form: TransformForm = TransformForm.AUTO,
    ) -> float:
        """
        1 - LST of the intervisit time of a queue under exhaustive service

        SHORTCUT reads the intervisit time off the queue-length PGF at the
        visit start; GENERAL goes through the cycle starting at the visit
        completion. extended (queue 1 only) adds the H busy periods
        triggered during the intervisit time.
        """
        if self.discipline is not Discipline.EXHAUSTIVE:
            raise DisciplineMismatchError("intervisit transforms are defined for exhaustive service")
        if queue not in (1, 2):
            raise DomainError(f"queue must be 1 or 2, got {queue}")
        self._check_omega(omega)
        form = TransformForm(form)
        if extended:
            if queue != 1:
                raise DomainError("the extended intervisit time is defined for queue 1")
            omega = omega + self.lam_H * self.busy_complement("H", omega)

        lam = self.lam1 if queue == 1 else self.lam2
        direct_ok = lam > 0 and omega <= lam
        if form is TransformForm.SHORTCUT and not (direct_ok and omega >= 0):
            raise DomainError(
                f"intervisit PGF argument outside [0, 1] at omega={omega}; use the general form"
            )
        if form is not TransformForm.GENERAL and direct_ok:
            if queue == 1:
                return self.p1_complement_x(omega, 0.0)
            return self._vb2_complement_x(0.0, omega)

        cls = "1" if queue == 1 else "2"
        inner = omega - lam * self.service_complement(cls, omega)
        anchor = CycleAnchor.END_Q1 if queue == 1 else CycleAnchor.END_Q2
        return self._general_cycle(inner, anchor)

    def intervisit_lst(
        self,
        omega: float,
        queue: int = 1,
        extended: bool = False,
        form: TransformForm = TransformForm.AUTO,
    ) -> float:
        return 1.0 - self.intervisit_complement(omega, queue, extended, form)

    # ── Helpers ─────────────────────────────────────────────────────────

    def _to_x(self, z1: float, z2: float) -> Tuple[float, float]:
        for name, z in (("z1", z1), ("z2", z2)):
            if not 0.0 <= z <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {z}")
        return self.lam1 * (1.0 - z1), self.lam2 * (1.0 - z2)

    def _check_omega(self, omega: float):
        if not omega >= self.min_omega:
            raise DomainError(f"transform argument {omega} below {self.min_omega:.3g}")
