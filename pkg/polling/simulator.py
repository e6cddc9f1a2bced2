"""
Discrete-event simulator of the two-queue polling system
Cyclic server with gate semantics, H-before-L priority in queue 1,
switch-over times and replication statistics
"""

import csv
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .analysis import PerformanceReport
from .distributions import Distribution, Exponential
from .errors import DisciplineMismatchError, DomainError
from .model import Discipline, PollingModel, require_valid

logger = logging.getLogger(__name__)

LOW_PRECISION_CUSTOMERS = 10_000
CLASSES = ("H", "L", "2")
_CHUNK = 4096

EventRecord = Tuple[float, str, int, str, int]


@dataclass(frozen=True)
class InjectedArrival:
    """A customer placed by hand, on top of the Poisson streams"""
    time: float
    cls: str
    service: float

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise DomainError(f"injected class must be one of {CLASSES}, got {self.cls!r}")
        if self.time < 0 or self.service < 0:
            raise DomainError("injected arrival time and service must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    model: PollingModel
    seed: int = 20_240_101
    warmup_customers: int = 100_000
    measured_customers: int = 1_000_000
    replications: int = 10
    preemptive_H: bool = False
    injected: Tuple[InjectedArrival, ...] = ()
    record_events: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications}")
        if self.measured_customers < 1 or self.warmup_customers < 0:
            raise DomainError("measured_customers must be >= 1 and warmup_customers >= 0")
        if self.preemptive_H and self.model.discipline is not Discipline.EXHAUSTIVE:
            raise DisciplineMismatchError("preemptive-resume priority needs exhaustive service")


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    def to_dict(self) -> dict:
        return {"value": self.value, "se": self.se}


@dataclass(frozen=True)
class ClassEstimate:
    mean_wait: Estimate
    wait_second_moment: Estimate
    std_wait: Estimate
    served: int

    def to_dict(self) -> dict:
        return {
            "mean_wait": self.mean_wait.to_dict(),
            "wait_second_moment": self.wait_second_moment.to_dict(),
            "std_wait": self.std_wait.to_dict(),
            "served": self.served,
        }


@dataclass(frozen=True)
class CycleEstimate:
    cycle_start_mean: Estimate
    cycle_start_second_moment: Estimate
    cycle_end_mean: Estimate
    cycle_end_second_moment: Estimate
    intervisit_mean: Estimate
    intervisit_second_moment: Estimate
    customers_at_q1_start: Estimate

    def to_dict(self) -> dict:
        return {name: getattr(self, name).to_dict() for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class SimulationEstimate:
    discipline: str
    seed: int
    replications: int
    warmup_customers: int
    measured_customers: int
    preemptive_H: bool
    classes: Dict[str, ClassEstimate]
    cycles: CycleEstimate
    flags: Tuple[str, ...] = ()
    events: Optional[List[EventRecord]] = None

    @property
    def low_precision(self) -> bool:
        return "low-precision" in self.flags

    def to_dict(self) -> dict:
        return {
            "discipline": self.discipline,
            "seed": self.seed,
            "replications": self.replications,
            "warmup_customers": self.warmup_customers,
            "measured_customers": self.measured_customers,
            "preemptive_H": self.preemptive_H,
            "classes": {k: v.to_dict() for k, v in self.classes.items()},
            "cycles": self.cycles.to_dict(),
            "flags": list(self.flags),
        }


# ── One replication ──────────────────────────────────────────────────────

class _Draws:
    """Chunked draws from one distribution and one generator"""

    def __init__(self, dist: Distribution, rng: np.random.Generator):
        self.dist = dist
        self.rng = rng
        self._buf: List[float] = []
        self._i = 0

    def next(self) -> float:
        if self._i >= len(self._buf):
            self._buf = self.dist.sample(self.rng, _CHUNK).tolist()
            self._i = 0
        value = self._buf[self._i]
        self._i += 1
        return value


class _ArrivalSource:
    """Poisson stream of one class merged with its injected customers"""

    def __init__(self, rate: float, service: Distribution, rngs, injected: Sequence[InjectedArrival]):
        arrival_rng, service_rng = rngs
        self._gaps = _Draws(Exponential(rate), arrival_rng) if rate > 0 else None
        self._service = _Draws(service, service_rng)
        self._poisson_next = self._gaps.next() if self._gaps else math.inf
        self._injected = deque(sorted(injected, key=lambda a: a.time))

    def peek(self) -> float:
        inj = self._injected[0].time if self._injected else math.inf
        return min(self._poisson_next, inj)

    def pop(self) -> Tuple[float, float]:
        """(arrival time, service requirement) of the next arrival"""
        if self._injected and self._injected[0].time <= self._poisson_next:
            a = self._injected.popleft()
            return a.time, a.service
        t = self._poisson_next
        self._poisson_next = t + self._gaps.next()
        return t, self._service.next()


class _Moments:
    __slots__ = ("n", "s1", "s2")

    def __init__(self):
        self.n, self.s1, self.s2 = 0, 0.0, 0.0

    def add(self, x: float):
        self.n += 1
        self.s1 += x
        self.s2 += x * x

    def mean(self) -> float:
        return self.s1 / self.n if self.n else math.nan

    def second(self) -> float:
        return self.s2 / self.n if self.n else math.nan

    def std(self) -> float:
        if not self.n:
            return math.nan
        return math.sqrt(max(self.second() - self.mean() ** 2, 0.0))


class PollingSimulator:
    """
    One replication of the polling system

    The server starts at time 0 at the beginning of a queue-1 visit with
    all queues empty.

    Args:
        cfg: Simulation configuration
        seed_seq: Seed of this replication; spawned into one generator per
            arrival stream, service stream and switch-over
    """

    def __init__(self, cfg: SimConfig, seed_seq: np.random.SeedSequence):
        self.cfg = cfg
        self.model = cfg.model
        self.discipline = Discipline(cfg.model.discipline)
        m = self.model
        rngs = [np.random.default_rng(s) for s in seed_seq.spawn(8)]
        rates = {"H": m.lambda_H, "L": m.lambda_L, "2": m.lambda_2}
        services = {"H": m.B_H, "L": m.B_L, "2": m.B_2}
        self.sources = {
            c: _ArrivalSource(
                rates[c], services[c], (rngs[i], rngs[3 + i]),
                [a for a in cfg.injected if a.cls == c],
            )
            for i, c in enumerate(CLASSES)
        }
        self.switch = (_Draws(m.S_1, rngs[6]), _Draws(m.S_2, rngs[7]))
        self.queues: Dict[str, deque] = {c: deque() for c in CLASSES}

        self.limit = cfg.warmup_customers + cfg.measured_customers
        self.served = 0
        self.done = False
        self._next_id = 0
        self.waits = {c: _Moments() for c in CLASSES}
        self.waits["1"] = _Moments()
        self.cycle_start, self.cycle_end = _Moments(), _Moments()
        self.intervisit, self.q1_population = _Moments(), _Moments()
        self.events: Optional[List[EventRecord]] = [] if cfg.record_events else None

    @property
    def measuring(self) -> bool:
        return self.served >= self.cfg.warmup_customers

    def _log(self, t: float, event: str, queue: int, cls: str = "", cid: int = -1):
        if self.events is not None:
            self.events.append((t, event, queue, cls, cid))

    def _admit(self, until: float):
        """Move every arrival up to time `until` into its queue, in time order"""
        while True:
            cls = min(CLASSES, key=lambda c: self.sources[c].peek())
            if self.sources[cls].peek() > until:
                return
            arrival, service = self.sources[cls].pop()
            cid = self._next_id
            self._next_id += 1
            # [arrival, remaining work, id, started]
            self.queues[cls].append([arrival, service, cid, False])
            self._log(arrival, "arrive", 2 if cls == "2" else 1, cls, cid)

    def _idle_forever(self) -> bool:
        return all(
            not q for q in self.queues.values()
        ) and all(math.isinf(s.peek()) for s in self.sources.values())

    def _start(self, t: float, cls: str, customer: list):
        queue = 2 if cls == "2" else 1
        if customer[3]:
            self._log(t, "resume", queue, cls, customer[2])
            return
        customer[3] = True
        if self.measuring:
            wait = t - customer[0]
            self.waits[cls].add(wait)
            if cls != "2":
                self.waits["1"].add(wait)
        self._log(t, "start", queue, cls, customer[2])
        self.served += 1
        if self.served >= self.limit:
            self.done = True

    def _serve(self, t: float, cls: str) -> float:
        customer = self.queues[cls].popleft()
        self._start(t, cls, customer)
        if self.done:
            return t
        queue = 2 if cls == "2" else 1

        if cls == "L" and self.cfg.preemptive_H:
            next_H = self.sources["H"].peek()
            if next_H < t + customer[1]:
                customer[1] -= next_H - t
                self.queues["L"].appendleft(customer)
                self._log(next_H, "preempt", queue, cls, customer[2])
                return next_H

        t += customer[1]
        self._log(t, "depart", queue, cls, customer[2])
        return t

    def _serve_gated(self, t: float, cls: str, count: int) -> float:
        for _ in range(count):
            self._admit(t)
            t = self._serve(t, cls)
            if self.done:
                break
        return t

    def _serve_exhaustive(self, t: float, order: Sequence[str]) -> float:
        while not self.done:
            self._admit(t)
            cls = next((c for c in order if self.queues[c]), None)
            if cls is None:
                break
            t = self._serve(t, cls)
        return t

    def run(self) -> dict:
        """Simulate until the configured number of customers started service"""
        t = 0.0
        last_start = last_end = None
        while not self.done:
            self._admit(t)
            if self._idle_forever():
                break

            self._log(t, "poll", 1)
            if self.measuring:
                if last_start is not None:
                    self.cycle_start.add(t - last_start)
                if last_end is not None:
                    self.intervisit.add(t - last_end)
                self.q1_population.add(len(self.queues["H"]) + len(self.queues["L"]))
            last_start = t

            gate = {c: len(self.queues[c]) for c in CLASSES}
            if self.discipline is Discipline.EXHAUSTIVE:
                t = self._serve_exhaustive(t, ("H", "L"))
            else:
                t = self._serve_gated(t, "H", gate["H"])
                if not self.done:
                    t = self._serve_gated(t, "L", gate["L"])
            if self.done:
                break
            if self.measuring and last_end is not None:
                self.cycle_end.add(t - last_end)
            last_end = t
            self._log(t, "leave", 1)

            t += self.switch[0].next()
            self._admit(t)
            self._log(t, "poll", 2)
            if self.discipline is Discipline.EXHAUSTIVE:
                t = self._serve_exhaustive(t, ("2",))
            elif self.discipline is Discipline.GATED:
                t = self._serve_gated(t, "2", len(self.queues["2"]))
            else:
                t = self._serve_gated(t, "2", gate["2"])
            if self.done:
                break
            self._log(t, "leave", 2)
            t += self.switch[1].next()

        return {
            "waits": {c: (w.n, w.mean(), w.second(), w.std()) for c, w in self.waits.items()},
            "cycles": {
                "cycle_start": (self.cycle_start.mean(), self.cycle_start.second()),
                "cycle_end": (self.cycle_end.mean(), self.cycle_end.second()),
                "intervisit": (self.intervisit.mean(), self.intervisit.second()),
                "customers_at_q1_start": (self.q1_population.mean(), math.nan),
            },
            "events": self.events,
        }


# ── Replications and estimates ───────────────────────────────────────────

def _replicate(args) -> dict:
    cfg, seed_seq = args
    return PollingSimulator(cfg, seed_seq).run()


def _estimate(values: Iterable[float]) -> Estimate:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0 or np.isnan(arr).any():
        return Estimate(math.nan, math.nan)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.nan
    return Estimate(float(arr.mean()), se)


def run(cfg: SimConfig, threads: int = 1) -> SimulationEstimate:
    """
    Run every replication and combine them

    Replication r uses the r-th child of SeedSequence(cfg.seed), so results
    do not depend on `threads`.

    Raises:
        InstabilityError: If the model is unstable
        ModelValidationError: If the model is otherwise invalid
    """
    require_valid(cfg.model)
    m = cfg.model
    flags = []
    if cfg.measured_customers < LOW_PRECISION_CUSTOMERS:
        logger.warning("only %d measured customers; estimates are low precision",
                       cfg.measured_customers)
        flags.append("low-precision")
    if m.lambda_H == m.lambda_L == m.lambda_2 == 0 and not cfg.injected:
        flags.append("no-customers")

    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    jobs = [(cfg, s) for s in seeds]
    if "no-customers" in flags:
        results = []
    elif threads > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=min(threads, cfg.replications)) as pool:
            results = list(pool.map(_replicate, jobs))
    else:
        results = [_replicate(job) for job in jobs]
    logger.info("finished %d replication(s)", len(results))

    classes = {}
    for c in ("H", "L", "2", "1"):
        served = sum(r["waits"][c][0] for r in results)
        if results and served == 0:
            flags.append(f"empty:{c}")
        classes[c] = ClassEstimate(
            mean_wait=_estimate(r["waits"][c][1] for r in results),
            wait_second_moment=_estimate(r["waits"][c][2] for r in results),
            std_wait=_estimate(r["waits"][c][3] for r in results),
            served=served,
        )

    def cyc(name: str, idx: int) -> Estimate:
        return _estimate(r["cycles"][name][idx] for r in results)

    cycles = CycleEstimate(
        cycle_start_mean=cyc("cycle_start", 0),
        cycle_start_second_moment=cyc("cycle_start", 1),
        cycle_end_mean=cyc("cycle_end", 0),
        cycle_end_second_moment=cyc("cycle_end", 1),
        intervisit_mean=cyc("intervisit", 0),
        intervisit_second_moment=cyc("intervisit", 1),
        customers_at_q1_start=cyc("customers_at_q1_start", 0),
    )
    return SimulationEstimate(
        discipline=Discipline(m.discipline).value,
        seed=cfg.seed,
        replications=cfg.replications,
        warmup_customers=cfg.warmup_customers,
        measured_customers=cfg.measured_customers,
        preemptive_H=cfg.preemptive_H,
        classes=classes,
        cycles=cycles,
        flags=tuple(flags),
        events=results[0]["events"] if results and cfg.record_events else None,
    )


def estimate_cycles(cfg: SimConfig, threads: int = 1) -> CycleEstimate:
    """Cycle, intervisit and queue-1 population estimates at polling epochs"""
    return run(cfg, threads).cycles


# ── Comparison with the analysis ─────────────────────────────────────────

@dataclass(frozen=True)
class Discrepancy:
    quantity: str
    analysis: float
    simulation: float
    se: float
    z: float
    status: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class DiscrepancyTable:
    rows: List[Discrepancy]
    z_threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "passed", all(r.status != "fail" for r in self.rows)
        )

    def failures(self) -> List[str]:
        return [r.quantity for r in self.rows if r.status == "fail"]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "z_threshold": self.z_threshold,
            "rows": [r.to_dict() for r in self.rows],
        }


def compare(
    sim: Union[SimConfig, SimulationEstimate],
    report: PerformanceReport,
    z_threshold: float = 4.0,
    threads: int = 1,
) -> DiscrepancyTable:
    """
    z-scores |analysis - simulation| / SE for the headline quantities

    Quantities flagged empty by the simulator, or whose SE is not a
    positive finite number, are skipped.
    """
    estimate = run(sim, threads) if isinstance(sim, SimConfig) else sim
    empty = {f.split(":", 1)[1] for f in estimate.flags if f.startswith("empty:")}
    pairs = []
    for key in ("H", "L", "2"):
        if key in report.classes:
            pairs.append((f"EW_{key}", key, report.classes[key].mean_wait,
                          estimate.classes[key].mean_wait))
    for key in ("H", "L"):
        if key in report.classes:
            pairs.append((f"sd_W{key}", key, report.classes[key].std_wait,
                          estimate.classes[key].std_wait))
    pairs.append(("E(C)", None, report.derived.mean_cycle, estimate.cycles.cycle_start_mean))
    pairs.append(("E(I1)", None, report.derived.mean_intervisit_1, estimate.cycles.intervisit_mean))

    rows = []
    for name, cls, expected, est in pairs:
        skip = cls in empty or not (math.isfinite(est.se) and est.se > 0)
        if skip:
            rows.append(Discrepancy(name, expected, est.value, est.se, math.nan, "skipped"))
            continue
        z = abs(expected - est.value) / est.se
        rows.append(Discrepancy(name, expected, est.value, est.se, z,
                                "pass" if z < z_threshold else "fail"))
    return DiscrepancyTable(rows, z_threshold)


def write_event_log(records: Iterable[EventRecord], path: str):
    """Write a `time,event,queue,class,customer_id` trace"""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["time", "event", "queue", "class", "customer_id"])
        for t, event, queue, cls, cid in records:
            writer.writerow([repr(float(t)), event, queue, cls, cid])
