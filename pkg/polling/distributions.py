"""
Service and switch-over distributions
Closed-form LSTs, moments and numpy samplers, plus the threshold splitter
that turns one exponential service class into high/low priority classes
"""

import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np
from scipy.special import gammainc

from .errors import DomainError, UnsupportedKindError


class _Distribution:
    """Shared behaviour of every distribution kind"""

    kind = ""

    def lst(self, omega: float) -> float:
        return 1.0 - self.lst_complement(omega)

    def lst_complement(self, omega: float) -> float:
        raise NotImplementedError

    def moments(self, order: int = 3) -> List[float]:
        if order not in (1, 2, 3):
            raise DomainError(f"moment order must be 1, 2 or 3, got {order}")
        return [self._raw_moment(k) for k in range(1, order + 1)]

    def _raw_moment(self, k: int) -> float:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return self._raw_moment(1)

    @property
    def residual_mean(self) -> float:
        """E(X^2) / 2E(X), the mean residual lifetime"""
        return self._raw_moment(2) / (2.0 * self.mean) if self.mean > 0 else 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(_Distribution):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"exponential rate must be positive, got {self.rate}")

    def lst(self, omega: float) -> float:
        return self.rate / (self.rate + omega)

    def lst_complement(self, omega: float) -> float:
        if omega <= -self.rate:
            raise DomainError(f"exponential LST has a pole at {-self.rate}")
        return omega / (self.rate + omega)

    def _raw_moment(self, k: int) -> float:
        return math.factorial(k) / self.rate ** k

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Deterministic(_Distribution):
    value: float
    kind = "deterministic"

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise DomainError(f"deterministic value must be >= 0, got {self.value}")

    def lst(self, omega: float) -> float:
        return math.exp(-omega * self.value)

    def lst_complement(self, omega: float) -> float:
        return -math.expm1(-omega * self.value)

    def _raw_moment(self, k: int) -> float:
        return self.value ** k

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.value)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class TruncatedExponential(_Distribution):
    """Exponential(rate) conditioned on a value below upper"""
    rate: float
    upper: float
    kind = "truncated-exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"truncated exponential rate must be positive, got {self.rate}")
        if not self.upper > 0:
            raise DomainError(f"truncation bound must be positive, got {self.upper}")

    @property
    def _mass(self) -> float:
        return -math.expm1(-self.rate * self.upper)

    def lst(self, omega: float) -> float:
        r, t = self.rate, self.upper
        return -r * math.expm1(-(r + omega) * t) / ((r + omega) * self._mass)

    def lst_complement(self, omega: float) -> float:
        r, t, p = self.rate, self.upper, self._mass
        if omega == -r:
            raise DomainError("truncated exponential complement undefined at -rate")
        num = omega * p + r * math.exp(-r * t) * math.expm1(-t * omega)
        return num / ((r + omega) * p)

    def _raw_moment(self, k: int) -> float:
        a = self.rate * self.upper
        # E X^k = k!/r^k * P(k+1, rt) / P(1, rt), P the regularized lower gamma
        return (
            math.factorial(k) / self.rate ** k
            * float(gammainc(k + 1, a)) / float(gammainc(1, a))
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        draws = -np.log1p(-u * self._mass) / self.rate
        return np.minimum(draws, np.nextafter(self.upper, 0.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rate": self.rate, "upper": self.upper}


@dataclass(frozen=True)
class ShiftedExponential(_Distribution):
    """shift + Exponential(rate)"""
    shift: float
    rate: float
    kind = "shifted-exponential"

    def __post_init__(self):
        if not self.shift >= 0:
            raise DomainError(f"shift must be >= 0, got {self.shift}")
        if not self.rate > 0:
            raise DomainError(f"shifted exponential rate must be positive, got {self.rate}")

    def lst(self, omega: float) -> float:
        return math.exp(-omega * self.shift) * self.rate / (self.rate + omega)

    def lst_complement(self, omega: float) -> float:
        if omega <= -self.rate:
            raise DomainError(f"shifted exponential LST has a pole at {-self.rate}")
        return (omega - self.rate * math.expm1(-omega * self.shift)) / (self.rate + omega)

    def _raw_moment(self, k: int) -> float:
        return sum(
            math.comb(k, j) * self.shift ** (k - j) * math.factorial(j) / self.rate ** j
            for j in range(k + 1)
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.shift + rng.exponential(1.0 / self.rate, size)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "shift": self.shift, "rate": self.rate}


@dataclass(frozen=True)
class Mixture(_Distribution):
    weights: Tuple[float, ...]
    components: Tuple["Distribution", ...]
    kind = "mixture"

    def __post_init__(self):
        if len(self.weights) != len(self.components) or not self.components:
            raise DomainError("mixture needs one weight per component")
        if any(w < 0 for w in self.weights):
            raise DomainError("mixture weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise DomainError(f"mixture weights sum to {math.fsum(self.weights)}, not 1")

    def _active(self):
        return [(w, c) for w, c in zip(self.weights, self.components) if w > 0]

    def lst(self, omega: float) -> float:
        return math.fsum(w * c.lst(omega) for w, c in self._active())

    def lst_complement(self, omega: float) -> float:
        return math.fsum(w * c.lst_complement(omega) for w, c in self._active())

    def _raw_moment(self, k: int) -> float:
        return math.fsum(w * c._raw_moment(k) for w, c in self._active())

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        picks = rng.choice(len(self.components), size=size, p=np.asarray(self.weights))
        out = np.empty(size)
        for idx, component in enumerate(self.components):
            mask = picks == idx
            count = int(mask.sum())
            if count:
                out[mask] = component.sample(rng, count)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "weights": list(self.weights),
            "components": [c.to_dict() for c in self.components],
        }


Distribution = Union[Exponential, Deterministic, TruncatedExponential, ShiftedExponential, Mixture]


@dataclass(frozen=True)
class ThresholdSplit:
    """High/low priority classes obtained by splitting jobs at a service threshold"""
    lambda_H: float
    dist_H: Distribution
    lambda_L: float
    dist_L: Distribution
    threshold: float

    @property
    def lambda_1(self) -> float:
        return self.lambda_H + self.lambda_L

    def aggregate(self) -> Mixture:
        """Class-1 service distribution seen without priorities"""
        lam = self.lambda_1
        return Mixture(
            (self.lambda_H / lam, self.lambda_L / lam), (self.dist_H, self.dist_L)
        )


# ── Module-level operations ──────────────────────────────────────────────

def lst_eval(d: Distribution, omega: float) -> float:
    """LST of d at omega >= 0"""
    if omega < 0:
        raise DomainError(f"LST argument must be >= 0, got {omega}")
    return d.lst(omega)


def moments(d: Distribution, order: int = 3) -> List[float]:
    """First `order` raw moments of d in closed form"""
    return d.moments(order)


def sample(d: Distribution, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draws from d using the caller-owned generator"""
    return d.sample(rng, size)


def split_by_threshold(base: Distribution, lambda1: float, t: float) -> ThresholdSplit:
    """
    Give high priority to jobs whose service time is below t

    Args:
        base: Exponential service distribution of the class
        lambda1: Arrival rate of the class
        t: Threshold

    Returns:
        ThresholdSplit with truncated-exponential H jobs and, by
        memorylessness, shifted-exponential L jobs

    Raises:
        UnsupportedKindError: If base is not exponential
        DomainError: If t <= 0 or lambda1 <= 0
    """
    if not isinstance(base, Exponential):
        raise UnsupportedKindError(
            f"threshold split needs an exponential base, got {base.kind}"
        )
    if not t > 0:
        raise DomainError(f"threshold must be positive, got {t}")
    if not lambda1 > 0:
        raise DomainError(f"arrival rate must be positive, got {lambda1}")

    r = base.rate
    return ThresholdSplit(
        lambda_H=lambda1 * -math.expm1(-r * t),
        dist_H=TruncatedExponential(r, t),
        lambda_L=lambda1 * math.exp(-r * t),
        dist_L=ShiftedExponential(t, r),
        threshold=t,
    )
