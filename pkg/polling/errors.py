"""
Exception hierarchy for the polling analysis kit
Every error carries the data needed to diagnose it without re-running
"""

from typing import List, Optional


class PollingError(Exception):
    """Base class for every error raised by the kit"""

    kind = "polling"

    def details(self) -> dict:
        """Machine-readable payload used by the CLI diagnostics"""
        return {}


class DomainError(PollingError, ValueError):
    """Argument outside the domain of an operation"""

    kind = "domain"


class UnsupportedKindError(DomainError):
    """Distribution kind not supported by an operation"""

    kind = "unsupported-kind"


class IterationLimitError(PollingError):
    """Fixed-point iteration did not converge"""

    kind = "iteration-limit"

    def __init__(self, message: str, last: float, gap: float, iterations: int):
        super().__init__(message)
        self.last = last
        self.gap = gap
        self.iterations = iterations

    def details(self) -> dict:
        return {"last": self.last, "gap": self.gap, "iterations": self.iterations}


class TruncationError(PollingError):
    """Infinite product did not reach its truncation criterion"""

    kind = "truncation"

    def __init__(self, message: str, partial: float, gap: float):
        super().__init__(message)
        self.partial = partial
        self.gap = gap

    def details(self) -> dict:
        return {"partial": self.partial, "gap": self.gap}


class AccuracyError(PollingError):
    """Moment extraction could not reach the requested accuracy"""

    kind = "accuracy"

    def __init__(self, message: str, best: List[float], achieved: float):
        super().__init__(message)
        self.best = best
        self.achieved = achieved

    def details(self) -> dict:
        return {"best": self.best, "achieved": self.achieved}


class EvaluationError(PollingError):
    """Zero denominator outside the removable-singularity region"""

    kind = "evaluation"


class DisciplineMismatchError(PollingError):
    """Operation requested for a discipline it does not apply to"""

    kind = "discipline-mismatch"


class InstabilityError(PollingError):
    """Total load is not below one"""

    kind = "instability"

    def __init__(self, rho: float):
        super().__init__(f"model is unstable: rho = {rho:.12g} >= 1")
        self.rho = rho

    def details(self) -> dict:
        return {"rho": self.rho}


class ModelValidationError(PollingError):
    """Model violates one or more invariants"""

    kind = "validation"

    def __init__(self, violations: List[str]):
        super().__init__("; ".join(violations))
        self.violations = violations

    def details(self) -> dict:
        return {"violations": self.violations}


class InternalDisagreementError(PollingError):
    """Closed-form and transform-derived values of a quantity disagree"""

    kind = "internal-disagreement"

    def __init__(self, quantity: str, closed_form: float, derived: float):
        super().__init__(
            f"{quantity}: closed form {closed_form:.12g} vs derived {derived:.12g}"
        )
        self.quantity = quantity
        self.closed_form = closed_form
        self.derived = derived

    def details(self) -> dict:
        return {
            "quantity": self.quantity,
            "closed_form": self.closed_form,
            "derived": self.derived,
        }


class SweepRowError(PollingError):
    """One threshold of a sweep failed; the sweep is aborted"""

    kind = "sweep-row"

    def __init__(self, threshold: float, cause_kind: str, message: str, cause_details: dict):
        super().__init__(f"t = {threshold:.12g}: {message}")
        self.threshold = threshold
        self.cause_kind = cause_kind
        self.cause_details = cause_details

    def details(self) -> dict:
        return {"t": self.threshold, "cause": self.cause_kind, **self.cause_details}


class ScenarioError(PollingError):
    """Scenario file does not match the schema"""

    kind = "schema"

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.message = message

    def details(self) -> dict:
        return {"pointer": self.pointer}


class ConfigError(PollingError):
    """Defaults file missing or malformed"""

    kind = "config"

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path

    def details(self) -> dict:
        return {"path": self.path}
