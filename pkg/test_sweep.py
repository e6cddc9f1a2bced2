"""
Test the threshold sweep
"""

import math

import pytest

from polling.branching import ProductTruncation
from polling.distributions import Exponential
from polling.errors import DomainError, SweepRowError
from polling.model import Discipline
from polling.sweep import (
    SweepRow,
    SweepSettings,
    ThresholdStudy,
    compute_baseline,
    run_sweep,
    summarize,
    threshold_grid,
)

UNIT = Exponential(1.0)

MEANS_ONLY = SweepSettings(with_std=False)


def make_study(discipline):
    return ThresholdStudy(UNIT, 0.6, 0.2, UNIT, UNIT, UNIT, discipline)


def row(t, ew, sd=math.nan, sd_nopriority=math.nan):
    return SweepRow(t, 0.3, 0.3, ew, ew, ew, 1.0, 1.0, sd, sd, sd, sd_nopriority)


def test_threshold_grid_is_inclusive():
    grid = threshold_grid(0.1, 5.0, 0.01)
    assert len(grid) == 491
    assert grid[0] == 0.1
    assert grid[-1] == 5.0
    assert grid[100] == 1.1


def test_threshold_grid_rejects_bad_ranges():
    with pytest.raises(DomainError):
        threshold_grid(0.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        threshold_grid(1.0, 2.0, 0.0)
    with pytest.raises(DomainError):
        threshold_grid(2.0, 1.0, 0.1)


def test_empty_grid_is_refused():
    with pytest.raises(DomainError):
        run_sweep(make_study(Discipline.GATED), [], MEANS_ONLY)


def test_rows_follow_the_grid_and_weight_the_classes(study):
    grid = [0.5, 1.0, 2.0]
    rows, _ = run_sweep(study, grid, MEANS_ONLY)
    assert [r.t for r in rows] == grid
    for r in rows:
        assert r.lambda_H + r.lambda_L == pytest.approx(0.6, rel=1e-12)
        weighted = (r.lambda_H * r.EW_H + r.lambda_L * r.EW_L) / 0.6
        assert r.EW_1_weighted == pytest.approx(weighted, rel=1e-12)
        assert r.EW_H <= r.EW_L
        assert math.isnan(r.sd_W1_weighted)
    assert len({r.EW_1_nopriority for r in rows}) == 1
    assert len({r.EW_2 for r in rows}) == 1


def test_nopriority_baseline_matches_the_unsplit_wait():
    study = make_study(Discipline.GATED)
    baseline = compute_baseline(study, MEANS_ONLY)
    c_res = baseline.cycles.start_q1.residual
    assert baseline.EW_1_nopriority == pytest.approx(1.6 * c_res, rel=1e-12)


def test_large_threshold_removes_the_priority_effect():
    rows, _ = run_sweep(make_study(Discipline.GATED), [40.0], MEANS_ONLY)
    assert rows[0].EW_1_weighted == pytest.approx(rows[0].EW_1_nopriority, rel=1e-6)


@pytest.mark.parametrize("discipline,grid,expected", [
    (Discipline.GATED, (0.8, 1.2, 0.01), 1.0),
    (Discipline.GLOBALLY_GATED, (0.8, 1.2, 0.01), 1.0),
    (Discipline.EXHAUSTIVE, (1.2, 1.6, 0.01), 1.38),
])
def test_best_threshold_near_the_known_optimum(discipline, grid, expected):
    rows, summary = run_sweep(make_study(discipline), threshold_grid(*grid), MEANS_ONLY)
    assert abs(summary.argmin_mean_t - expected) <= 0.02
    assert summary.argmin_mean == min(r.EW_1_weighted for r in rows)
    assert summary.argmin_mean < rows[0].EW_1_nopriority
    assert math.isnan(summary.argmin_std_t)


def test_sweep_with_standard_deviations():
    rows, summary = run_sweep(make_study(Discipline.GATED), [0.5, 1.0], SweepSettings())
    for r in rows:
        assert r.sd_WH > 0 and r.sd_WL > 0
        assert r.sd_W1_weighted > 0
        assert r.sd_W1_nopriority > 0
    assert summary.argmin_std_t in (0.5, 1.0)


def test_worker_pool_matches_inline():
    study = make_study(Discipline.EXHAUSTIVE)
    grid = [0.5, 1.0, 1.5, 2.0]
    inline, _ = run_sweep(study, grid, MEANS_ONLY, threads=1)
    pooled, _ = run_sweep(study, grid, MEANS_ONLY, threads=2)
    assert [(r.t, r.EW_H, r.EW_L, r.EW_2) for r in pooled] == [
        (r.t, r.EW_H, r.EW_L, r.EW_2) for r in inline]


def test_failed_row_aborts_the_sweep():
    study = make_study(Discipline.GATED)
    baseline = compute_baseline(study, MEANS_ONLY)
    broken = SweepSettings(truncation=ProductTruncation(epsilon=1e-14, max_terms=2))
    with pytest.raises(SweepRowError) as err:
        run_sweep(study, [0.7, 1.0], broken, baseline=baseline)
    assert err.value.threshold == 0.7
    assert err.value.cause_kind == "truncation"
    assert err.value.details()["t"] == 0.7


def test_summary_ties_go_to_the_smaller_threshold():
    rows = [row(0.5, 3.0), row(1.0, 2.0), row(1.5, 2.0), row(2.0, 4.0)]
    summary = summarize(rows)
    assert summary.argmin_mean_t == 1.0
    assert summary.argmin_mean == 2.0


def test_summary_lists_local_minima_of_the_std_curve():
    values = [5.0, 4.0, 4.5, 3.0, 3.5, 3.5]
    rows = [row(0.1 * (k + 1), 1.0, sd) for k, sd in enumerate(values)]
    summary = summarize(rows)
    assert summary.std_local_minima == pytest.approx((0.2, 0.4))
    assert summary.argmin_std_t == pytest.approx(0.4)
    assert summary.to_dict()["argmin_sd_W1_weighted"]["value"] == 3.0


def std_rows(values, sd_nopriority):
    return [row(0.1 * (k + 1), 1.0, sd, sd_nopriority) for k, sd in enumerate(values)]


def test_curve_rising_from_the_nopriority_limit_has_a_minimum_at_zero():
    summary = summarize(std_rows([5.0, 5.5, 4.0, 4.5], sd_nopriority=4.8))
    assert summary.std_local_minima == pytest.approx((0.0, 0.3))
    assert summary.argmin_std_t == pytest.approx(0.3)


def test_first_grid_point_below_the_nopriority_limit_is_a_minimum():
    summary = summarize(std_rows([5.0, 5.5, 4.0, 4.5], sd_nopriority=6.0))
    assert summary.std_local_minima == pytest.approx((0.1, 0.3))


def test_curve_falling_from_the_nopriority_limit_has_no_boundary_minimum():
    summary = summarize(std_rows([5.0, 4.5, 4.0, 4.5], sd_nopriority=6.0))
    assert summary.std_local_minima == pytest.approx((0.3,))


def test_row_header_matches_values():
    r = row(1.0, 2.0)
    assert SweepRow.header()[0] == "t"
    assert len(SweepRow.header()) == len(r.values())


@pytest.mark.slow
@pytest.mark.parametrize("discipline,expected", [
    (Discipline.GATED, 1.0),
    (Discipline.GLOBALLY_GATED, 1.0),
    (Discipline.EXHAUSTIVE, 1.38),
])
def test_full_grid_optimum(discipline, expected):
    _, summary = run_sweep(make_study(discipline), threshold_grid(0.1, 5.0, 0.01), threads=4)
    assert abs(summary.argmin_mean_t - expected) <= 0.02


@pytest.mark.slow
@pytest.mark.parametrize("discipline", [Discipline.GATED, Discipline.EXHAUSTIVE])
def test_std_curve_has_two_local_minima(discipline):
    _, summary = run_sweep(make_study(discipline), threshold_grid(0.1, 5.0, 0.005), threads=4)
    assert len(summary.std_local_minima) >= 2


@pytest.mark.slow
def test_gated_std_curve_rises_from_the_nopriority_limit():
    study = make_study(Discipline.GATED)
    rows, summary = run_sweep(study, threshold_grid(0.005, 0.3, 0.005), threads=4)
    assert summary.std_local_minima[0] == 0.0
    assert rows[0].sd_W1_nopriority < rows[0].sd_W1_weighted
    assert rows[0].sd_W1_weighted == pytest.approx(rows[0].sd_W1_nopriority, rel=1e-4)
