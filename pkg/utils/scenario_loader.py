"""
Scenario loader
Parses JSON scenario files into models, threshold studies and run options;
every schema problem names the JSON pointer of the offending value
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from polling.distributions import (
    Deterministic,
    Distribution,
    Exponential,
    Mixture,
    ShiftedExponential,
    TruncatedExponential,
)
from polling.errors import PollingError, ScenarioError
from polling.model import Discipline, PollingModel
from polling.simulator import InjectedArrival
from polling.sweep import ThresholdStudy, threshold_grid

_PARAMS = {
    "exponential": ("rate",),
    "deterministic": ("value",),
    "truncated-exponential": ("rate", "upper"),
    "shifted-exponential": ("shift", "rate"),
}
_KINDS = {
    "exponential": Exponential,
    "deterministic": Deterministic,
    "truncated-exponential": TruncatedExponential,
    "shifted-exponential": ShiftedExponential,
}
_SIM_KEYS = ("seed", "warmup_customers", "measured_customers", "replications")


@dataclass(frozen=True)
class GridSpec:
    t_min: float
    t_max: float
    step: float

    def values(self) -> List[float]:
        return threshold_grid(self.t_min, self.t_max, self.step)


@dataclass(frozen=True)
class Queue1Spec:
    """Either a base class split at a threshold, or explicit H and L classes"""
    lambda_H: float = 0.0
    lambda_L: float = 0.0
    B_H: Optional[Distribution] = None
    B_L: Optional[Distribution] = None
    lambda_1: float = 0.0
    base_service: Optional[Distribution] = None
    threshold: Optional[float] = None

    @property
    def split(self) -> bool:
        return self.base_service is not None


@dataclass(frozen=True)
class Scenario:
    name: str
    discipline: Discipline
    queue_1: Queue1Spec
    lambda_2: float
    B_2: Distribution
    S_1: Distribution
    S_2: Distribution
    preemptive_H: bool = False
    sweep: Optional[GridSpec] = None
    with_std: bool = True
    simulation: Dict[str, int] = field(default_factory=dict)
    injected: Tuple[InjectedArrival, ...] = ()
    outputs: Dict[str, str] = field(default_factory=dict)

    def model(self, threshold: Optional[float] = None,
              discipline: Optional[Discipline] = None) -> PollingModel:
        """
        The polling model of this scenario

        Args:
            threshold: Overrides the scenario threshold of a split queue 1
            discipline: Overrides the scenario discipline

        Raises:
            ScenarioError: If a threshold is needed but none is known
        """
        q1 = self.queue_1
        disc = Discipline(discipline or self.discipline)
        if not q1.split:
            if threshold is not None:
                raise ScenarioError("/queue_1", "a threshold needs a 'base_service' queue 1")
            return PollingModel(q1.lambda_H, q1.lambda_L, self.lambda_2, q1.B_H, q1.B_L,
                                self.B_2, self.S_1, self.S_2, disc)
        t = threshold if threshold is not None else q1.threshold
        if t is None:
            raise ScenarioError("/queue_1/threshold", "required for a single-point run")
        return self.study(disc).model_at(t)

    def study(self, discipline: Optional[Discipline] = None) -> ThresholdStudy:
        q1 = self.queue_1
        if not q1.split:
            raise ScenarioError("/queue_1", "a threshold sweep needs 'base_service'")
        if not isinstance(q1.base_service, Exponential):
            raise ScenarioError("/queue_1/base_service/kind",
                                "threshold split needs an exponential base")
        return ThresholdStudy(q1.base_service, q1.lambda_1, self.lambda_2, self.B_2,
                              self.S_1, self.S_2, Discipline(discipline or self.discipline))


# ── Schema helpers ──────────────────────────────────────────────────────

def _get(obj: dict, key: str, pointer: str, required: bool = True) -> Any:
    if not isinstance(obj, dict):
        raise ScenarioError(pointer, "expected an object")
    if key not in obj:
        if required:
            raise ScenarioError(f"{pointer}/{key}", "missing required field")
        return None
    return obj[key]


def _number(obj: dict, key: str, pointer: str, required: bool = True,
            default: Optional[float] = None) -> Optional[float]:
    value = _get(obj, key, pointer, required)
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{pointer}/{key}", f"expected a number, got {value!r}")
    return float(value)


def _integer(obj: dict, key: str, pointer: str) -> Optional[int]:
    value = _get(obj, key, pointer, required=False)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{pointer}/{key}", f"expected an integer, got {value!r}")
    return value


def parse_distribution(obj: Any, pointer: str) -> Distribution:
    """Tagged object {"kind": ..., params} to a distribution"""
    kind = _get(obj, "kind", pointer)
    if kind == "mixture":
        weights = _get(obj, "weights", pointer)
        components = _get(obj, "components", pointer)
        if not isinstance(weights, list) or not isinstance(components, list):
            raise ScenarioError(f"{pointer}/weights", "weights and components must be arrays")
        parsed = tuple(
            parse_distribution(c, f"{pointer}/components/{i}") for i, c in enumerate(components)
        )
        try:
            return Mixture(tuple(float(w) for w in weights), parsed)
        except (PollingError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{pointer}/weights", str(exc))

    if kind not in _KINDS:
        raise ScenarioError(f"{pointer}/kind", f"unknown distribution kind {kind!r}")
    params = [_number(obj, p, pointer) for p in _PARAMS[kind]]
    try:
        return _KINDS[kind](*params)
    except PollingError as exc:
        raise ScenarioError(pointer, str(exc))


def parse_grid(text: str, pointer: str = "--grid") -> GridSpec:
    """'min:max:step' to a GridSpec"""
    parts = text.split(":")
    if len(parts) != 3:
        raise ScenarioError(pointer, f"expected min:max:step, got {text!r}")
    try:
        t_min, t_max, step = (float(p) for p in parts)
    except ValueError:
        raise ScenarioError(pointer, f"grid bounds must be numbers, got {text!r}")
    return _grid(t_min, t_max, step, pointer)


def _grid(t_min: float, t_max: float, step: float, pointer: str) -> GridSpec:
    if not t_min > 0:
        raise ScenarioError(pointer, f"t_min must be > 0, got {t_min}")
    if not step > 0:
        raise ScenarioError(pointer, f"step must be > 0, got {step}")
    if t_max < t_min:
        raise ScenarioError(pointer, f"t_max {t_max} is below t_min {t_min}")
    return GridSpec(t_min, t_max, step)


def _queue_1(obj: Any) -> Queue1Spec:
    pointer = "/queue_1"
    if not isinstance(obj, dict):
        raise ScenarioError(pointer, "expected an object")
    if "base_service" in obj:
        threshold = _number(obj, "threshold", pointer, required=False)
        if threshold is not None and not threshold > 0:
            raise ScenarioError(f"{pointer}/threshold", f"must be > 0, got {threshold}")
        return Queue1Spec(
            lambda_1=_number(obj, "lambda", pointer),
            base_service=parse_distribution(obj["base_service"], f"{pointer}/base_service"),
            threshold=threshold,
        )
    return Queue1Spec(
        lambda_H=_number(obj, "lambda_H", pointer),
        lambda_L=_number(obj, "lambda_L", pointer),
        B_H=parse_distribution(_get(obj, "service_H", pointer), f"{pointer}/service_H"),
        B_L=parse_distribution(_get(obj, "service_L", pointer), f"{pointer}/service_L"),
    )


def _injected(items: Any, pointer: str) -> Tuple[InjectedArrival, ...]:
    if not isinstance(items, list):
        raise ScenarioError(pointer, "expected an array")
    out = []
    for i, item in enumerate(items):
        p = f"{pointer}/{i}"
        try:
            out.append(InjectedArrival(
                time=_number(item, "time", p),
                cls=str(_get(item, "class", p)),
                service=_number(item, "service", p),
            ))
        except ScenarioError:
            raise
        except PollingError as exc:
            raise ScenarioError(p, str(exc))
    return tuple(out)


def parse_scenario(data: Any, name: str = "scenario") -> Scenario:
    """
    Validate a decoded scenario document

    Raises:
        ScenarioError: With the JSON pointer of the first problem
    """
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a JSON object")

    disc = _get(data, "discipline", "")
    try:
        discipline = Discipline(disc)
    except ValueError:
        raise ScenarioError("/discipline", f"unknown discipline {disc!r}")

    q2 = _get(data, "queue_2", "")
    switch = _get(data, "switch_over", "")

    preemptive = data.get("preemptive_H", False)
    if not isinstance(preemptive, bool):
        raise ScenarioError("/preemptive_H", "expected true or false")

    grid, with_std = None, True
    if data.get("sweep") is not None:
        sweep = data["sweep"]
        grid = _grid(
            _number(sweep, "t_min", "/sweep"),
            _number(sweep, "t_max", "/sweep"),
            _number(sweep, "step", "/sweep"),
            "/sweep",
        )
        with_std = bool(sweep.get("with_std", True))

    simulation, injected = {}, ()
    if data.get("simulation") is not None:
        sim = data["simulation"]
        for key in _SIM_KEYS:
            value = _integer(sim, key, "/simulation")
            if value is not None:
                simulation[key] = value
        if "injected" in sim:
            injected = _injected(sim["injected"], "/simulation/injected")

    outputs = data.get("output") or {}
    if not isinstance(outputs, dict) or not all(isinstance(v, str) for v in outputs.values()):
        raise ScenarioError("/output", "expected an object of file paths")

    return Scenario(
        name=str(data.get("name", name)),
        discipline=discipline,
        queue_1=_queue_1(_get(data, "queue_1", "")),
        lambda_2=_number(q2, "lambda", "/queue_2"),
        B_2=parse_distribution(_get(q2, "service", "/queue_2"), "/queue_2/service"),
        S_1=parse_distribution(_get(switch, "S_1", "/switch_over"), "/switch_over/S_1"),
        S_2=parse_distribution(_get(switch, "S_2", "/switch_over"), "/switch_over/S_2"),
        preemptive_H=preemptive,
        sweep=grid,
        with_std=with_std,
        simulation=simulation,
        injected=injected,
        outputs=dict(outputs),
    )


def load_scenario(path: str) -> Scenario:
    """Read and validate a scenario file"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ScenarioError("", f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON at line {exc.lineno}: {exc.msg}")
    default_name = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_scenario(data, default_name)
