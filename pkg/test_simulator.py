"""
Test the discrete-event simulator and its comparison with the analysis
"""

import csv
import math

import pytest

from polling.analysis import ReportOptions, report
from polling.distributions import Deterministic, Exponential
from polling.errors import DisciplineMismatchError, DomainError, InstabilityError
from polling.model import Discipline, PollingModel
from polling.simulator import (
    InjectedArrival,
    SimConfig,
    compare,
    estimate_cycles,
    run,
    write_event_log,
)

UNIT = Exponential(1.0)


def threshold_model(discipline, t=1.0):
    return PollingModel.from_threshold(UNIT, 0.6, t, 0.2, UNIT, UNIT, UNIT, discipline)


def empty_model(discipline=Discipline.GATED):
    one = Deterministic(1.0)
    return PollingModel(0.0, 0.0, 0.0, Deterministic(2.0), one, one, one, one, discipline)


def small_config(model, **kw):
    params = dict(warmup_customers=2_000, measured_customers=20_000, replications=4)
    params.update(kw)
    return SimConfig(model, **params)


def traced(discipline, **kw):
    cfg = SimConfig(threshold_model(discipline), warmup_customers=0, measured_customers=3_000,
                    replications=1, record_events=True, **kw)
    return run(cfg).events


def visits(events):
    """Walk the trace; yield (record, arrival times, last poll time per queue)"""
    arrivals, polls = {}, {1: 0.0, 2: 0.0}
    for rec in events:
        t, event, queue, cls, cid = rec
        if event == "arrive":
            arrivals[cid] = t
        elif event == "poll":
            polls[queue] = t
        yield rec, arrivals, dict(polls)


def test_hand_trace_single_injected_customer():
    cfg = SimConfig(
        empty_model(),
        warmup_customers=0,
        measured_customers=1,
        replications=1,
        injected=(InjectedArrival(0.5, "H", 2.0),),
        record_events=True,
    )
    est = run(cfg)
    # the gate at t = 0 is empty; the customer is served at the next visit, t = 2
    assert est.classes["H"].mean_wait.value == pytest.approx(1.5, abs=1e-12)
    assert est.classes["H"].served == 1
    assert math.isnan(est.classes["H"].mean_wait.se)
    assert "low-precision" in est.flags
    assert {"empty:L", "empty:2"} <= set(est.flags)
    starts = [r for r in est.events if r[1] == "start"]
    assert starts == [(2.0, "start", 1, "H", 0)]


def test_model_without_customers_is_flagged():
    est = run(SimConfig(empty_model(), replications=2))
    assert "no-customers" in est.flags
    assert math.isnan(est.classes["H"].mean_wait.value)
    assert est.classes["2"].served == 0


def test_low_precision_flag(gated_model):
    est = run(small_config(gated_model, warmup_customers=100, measured_customers=1_000,
                           replications=2))
    assert est.low_precision
    assert sum(est.classes[c].served for c in ("H", "L", "2")) == 2_000
    assert est.classes["1"].served == est.classes["H"].served + est.classes["L"].served


def test_unstable_model_is_refused():
    with pytest.raises(InstabilityError):
        run(SimConfig(threshold_model(Discipline.GATED).scaled(1.5)))


def test_config_validation(gated_model, exhaustive_model):
    with pytest.raises(DisciplineMismatchError):
        SimConfig(gated_model, preemptive_H=True)
    with pytest.raises(DomainError):
        SimConfig(gated_model, replications=0)
    with pytest.raises(DomainError):
        InjectedArrival(1.0, "X", 1.0)
    assert SimConfig(exhaustive_model, preemptive_H=True).preemptive_H


def test_same_seed_same_trace():
    assert traced(Discipline.GATED) == traced(Discipline.GATED)
    assert traced(Discipline.GATED) != traced(Discipline.GATED, seed=7)


def test_replications_do_not_depend_on_the_pool(gated_model):
    cfg = small_config(gated_model, warmup_customers=500, measured_customers=5_000, replications=2)
    inline, pooled = run(cfg, threads=1), run(cfg, threads=2)
    for c in ("H", "L", "2"):
        assert inline.classes[c].mean_wait == pooled.classes[c].mean_wait


def test_gated_serves_only_customers_behind_the_gate():
    served_L_in_visit = False
    for (t, event, queue, cls, cid), arrivals, polls in visits(traced(Discipline.GATED)):
        if event == "poll" and queue == 1:
            served_L_in_visit = False
        if event != "start":
            continue
        assert arrivals[cid] <= polls[queue]
        if cls == "L":
            served_L_in_visit = True
        if cls == "H":
            assert not served_L_in_visit


def test_globally_gated_queue_2_uses_the_queue_1_gate():
    for (t, event, queue, cls, cid), arrivals, polls in visits(traced(Discipline.GLOBALLY_GATED)):
        if event == "start":
            assert arrivals[cid] <= polls[1]


@pytest.mark.parametrize("preemptive", [False, True])
def test_exhaustive_empties_queue_1_and_respects_priority(preemptive):
    waiting = {"H": set(), "L": set(), "2": set()}
    preempted, resumed = set(), set()
    for t, event, queue, cls, cid in traced(Discipline.EXHAUSTIVE, preemptive_H=preemptive):
        if event == "arrive":
            waiting[cls].add(cid)
        elif event == "start":
            waiting[cls].discard(cid)
            if cls == "L":
                assert not waiting["H"]
        elif event == "preempt":
            preempted.add(cid)
        elif event == "resume":
            assert not waiting["H"]
            resumed.add(cid)
        elif event == "leave" and queue == 1:
            assert not waiting["H"] and not waiting["L"]
    if preemptive:
        assert preempted
        assert resumed <= preempted
    else:
        assert not preempted


def test_event_log_file(tmp_path):
    events = traced(Discipline.GATED)
    path = tmp_path / "events.csv"
    write_event_log(events, str(path))
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["time", "event", "queue", "class", "customer_id"]
    assert len(rows) == len(events) + 1
    assert float(rows[1][0]) == events[0][0]


def test_short_run_is_close_to_the_analysis(gated_model):
    est = run(small_config(gated_model))
    rep = report(gated_model, ReportOptions(classes=("H", "L", "2")))
    assert est.cycles.cycle_start_mean.value == pytest.approx(10.0, rel=0.1)
    assert est.cycles.intervisit_mean.value == pytest.approx(4.0, rel=0.1)
    for c in ("H", "L", "2"):
        assert est.classes[c].mean_wait.value == pytest.approx(rep.classes[c].mean_wait, rel=0.15)


def test_cycle_estimates_of_an_exhaustive_run(exhaustive_model):
    cycles = estimate_cycles(small_config(exhaustive_model, measured_customers=10_000, replications=2))
    assert cycles.cycle_start_mean.value == pytest.approx(10.0, rel=0.1)
    assert cycles.cycle_end_mean.value == pytest.approx(10.0, rel=0.1)
    assert cycles.intervisit_mean.value == pytest.approx(4.0, rel=0.1)
    assert cycles.customers_at_q1_start.value == pytest.approx(0.6 * 4.0, rel=0.15)


def test_comparison_table(gated_model):
    est = run(small_config(gated_model))
    rep = report(gated_model, ReportOptions(classes=("H", "L", "2")))
    table = compare(est, rep)
    names = [r.quantity for r in table.rows]
    assert names == ["EW_H", "EW_L", "EW_2", "sd_WH", "sd_WL", "E(C)", "E(I1)"]
    for r in table.rows:
        assert r.status in ("pass", "fail")
        assert r.se > 0
    assert table.to_dict()["z_threshold"] == 4.0


def test_comparison_detects_a_wrong_model(gated_model):
    est = run(small_config(gated_model))
    wrong = report(gated_model.scaled(1.05), ReportOptions(classes=("H", "L", "2")))
    table = compare(est, wrong)
    assert not table.passed
    assert "E(C)" in table.failures()


def test_comparison_skips_classes_without_customers():
    m = PollingModel.without_priorities(0.6, UNIT, 0.2, UNIT, UNIT, UNIT, Discipline.GATED)
    est = run(small_config(m, measured_customers=5_000, replications=2))
    assert "empty:L" in est.flags
    rep = report(m, ReportOptions(classes=("H", "L", "2")))
    statuses = {r.quantity: r.status for r in compare(est, rep).rows}
    assert statuses["EW_L"] == "skipped"
    assert statuses["sd_WL"] == "skipped"


@pytest.mark.slow
@pytest.mark.parametrize("discipline", list(Discipline), ids=lambda d: d.value)
@pytest.mark.parametrize("t", [0.5, 1.0, 1.38, 2.0])
def test_full_budget_agreement(discipline, t):
    m = threshold_model(discipline, t)
    table = compare(SimConfig(m), report(m, ReportOptions(classes=("H", "L", "2"))), threads=4)
    assert table.passed, table.failures()


@pytest.mark.slow
def test_full_budget_preemptive_high_priority_wait():
    m = threshold_model(Discipline.EXHAUSTIVE, 1.0)
    rep = report(m, ReportOptions(preemptive_H=True, classes=("H",)))
    est = run(SimConfig(m, preemptive_H=True), threads=4)
    h = est.classes["H"].mean_wait
    assert abs(h.value - rep.classes["H"].derived_mean_wait) < 4 * h.se
