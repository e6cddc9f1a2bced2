"""
Test the waiting-time analysis and the performance report
"""

import pytest

from polling.analysis import (
    PgfForm,
    ReportOptions,
    WaitClass,
    WaitForm,
    WaitingTimeAnalyzer,
    queue_length_pgf,
    report,
    wait_lst_exhaustive,
    wait_lst_gated,
    wait_lst_globally_gated,
    wait_lst_preemptive_H,
)
from polling.distributions import Exponential
from polling.errors import DisciplineMismatchError, DomainError
from polling.model import Discipline, PollingModel

UNIT = Exponential(1.0)
OMEGA_GRID = [0.01, 0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0]
FINE_GRID = [20.0 * k / 50 for k in range(1, 51)]


def threshold_model(discipline, t=1.0):
    return PollingModel.from_threshold(UNIT, 0.6, t, 0.2, UNIT, UNIT, UNIT, discipline)


@pytest.mark.parametrize("cls", ["H", "L", "2", "1"])
def test_wait_lst_normalised(study, cls):
    analyzer = WaitingTimeAnalyzer(study.model_at(1.0))
    assert analyzer.wait_lst(cls, 0.0) == pytest.approx(1.0, abs=1e-14)
    if study.discipline is Discipline.EXHAUSTIVE:
        assert analyzer.wait_lst(cls, 0.0, WaitForm.ALTERNATE) == pytest.approx(1.0, abs=1e-14)


def test_gated_means_match_derivatives(gated_model):
    rep = report(gated_model)
    c_res = rep.residual_cycle
    d = rep.derived
    assert rep.classes["H"].mean_wait == pytest.approx((1 + d.rho_H) * c_res, rel=1e-12)
    assert rep.classes["L"].mean_wait == pytest.approx((1 + 2 * d.rho_H + d.rho_L) * c_res, rel=1e-12)
    for c in rep.classes.values():
        assert c.derived_mean_wait == pytest.approx(c.mean_wait, rel=1e-6)
        assert c.std_wait >= 0.0
    gap = rep.classes["L"].mean_wait - rep.classes["H"].mean_wait
    assert gap == pytest.approx(d.rho_1 * c_res, rel=1e-8)
    assert rep.identities["EW_L - EW_H"] == pytest.approx(rep.identities["rho_1 E(C_res)"], rel=1e-8)


def test_gated_lst_near_zero_is_first_order(gated_model):
    analyzer = WaitingTimeAnalyzer(gated_model)
    mean_H = analyzer.closed_form_means()["H"]
    omega = 1e-9
    assert abs(wait_lst_gated(gated_model, WaitClass.H, omega) - (1 - omega * mean_H)) < 1e-6


def test_globally_gated_queue_2_mean(gg_model):
    rep = report(gg_model, ReportOptions(classes=("2",)))
    d = rep.derived
    expected = 1.0 + (1 + 2 * d.rho_H + 2 * d.rho_L + d.rho_2) * rep.residual_cycle
    assert rep.classes["2"].mean_wait == pytest.approx(expected, rel=1e-12)
    assert rep.classes["2"].derived_mean_wait == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("discipline", [Discipline.GATED, Discipline.GLOBALLY_GATED])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_constant_gap_between_classes(discipline, t):
    analyzer = WaitingTimeAnalyzer(threshold_model(discipline, t))
    cycles = analyzer.cycle_summary()
    means = analyzer.closed_form_means(cycles)
    rho_1 = analyzer.derived.rho_1
    assert means["L"] - means["H"] == pytest.approx(rho_1 * cycles.start_q1.residual, rel=1e-8)


@pytest.mark.parametrize("t", [0.5, 1.0, 1.38, 3.0])
def test_exhaustive_ratio_does_not_depend_on_threshold(t):
    analyzer = WaitingTimeAnalyzer(threshold_model(Discipline.EXHAUSTIVE, t))
    means = analyzer.closed_form_means()
    assert means["H"] / means["L"] == pytest.approx(0.4, rel=1e-8)


def test_exhaustive_completion_cycle_means(exhaustive_model):
    analyzer = WaitingTimeAnalyzer(exhaustive_model)
    cycles = analyzer.cycle_summary()
    primary = analyzer.closed_form_means(cycles)
    completion = analyzer.completion_cycle_means(cycles)
    assert completion["H"] == pytest.approx(primary["H"], rel=1e-8)
    assert completion["L"] == pytest.approx(primary["L"], rel=1e-8)


@pytest.mark.parametrize("cls", ["H", "L", "2", "1"])
def test_exhaustive_forms_agree(exhaustive_model, cls):
    for omega in FINE_GRID:
        primary = wait_lst_exhaustive(exhaustive_model, cls, omega, WaitForm.PRIMARY)
        alternate = wait_lst_exhaustive(exhaustive_model, cls, omega, WaitForm.ALTERNATE)
        assert abs(primary - alternate) < 1e-10


def test_alternate_form_needs_exhaustive(gated_model):
    with pytest.raises(DomainError):
        WaitingTimeAnalyzer(gated_model).wait_lst("H", 0.5, WaitForm.ALTERNATE)


def test_discipline_mismatch(gated_model, exhaustive_model):
    with pytest.raises(DisciplineMismatchError):
        wait_lst_exhaustive(gated_model, "H", 0.5)
    with pytest.raises(DisciplineMismatchError):
        wait_lst_globally_gated(gated_model, "H", 0.5)
    with pytest.raises(DisciplineMismatchError):
        wait_lst_gated(exhaustive_model, "L", 0.5)
    with pytest.raises(DisciplineMismatchError):
        wait_lst_preemptive_H(gated_model, 0.5)


def test_preemptive_without_low_class_is_nonpreemptive():
    m = PollingModel.without_priorities(0.6, UNIT, 0.2, UNIT, UNIT, UNIT, Discipline.EXHAUSTIVE)
    for omega in OMEGA_GRID:
        assert abs(wait_lst_preemptive_H(m, omega) - wait_lst_exhaustive(m, "H", omega)) < 1e-12


def test_preemption_shortens_high_priority_waits(exhaustive_model):
    assert wait_lst_preemptive_H(exhaustive_model, 0.5) >= wait_lst_exhaustive(
        exhaustive_model, "H", 0.5)
    analyzer = WaitingTimeAnalyzer(exhaustive_model)
    assert (analyzer.closed_form_means(preemptive_H=True)["H"]
            < analyzer.closed_form_means()["H"])


def test_two_priority_queue_without_vacations(exhaustive_model):
    analyzer = WaitingTimeAnalyzer(exhaustive_model)
    d, m = analyzer.derived, exhaustive_model
    for omega in (0.05, 0.5, 3.0):
        mg1 = (1 - d.rho_H) * omega / (omega - m.lambda_H * m.B_H.lst_complement(omega))
        r_BL = m.B_L.lst_complement(omega) / (omega * m.B_L.mean)
        mixture = mg1 * ((1 - d.rho_1) + d.rho_L * r_BL) / (1 - d.rho_H)
        assert analyzer.two_priority_mg1_H(omega) == pytest.approx(mixture, abs=1e-12)


@pytest.mark.parametrize("cls", ["H", "L", "2"])
def test_fuhrmann_cooper_product_gated(gated_model, cls):
    analyzer = WaitingTimeAnalyzer(gated_model)
    vacations = []
    for omega in OMEGA_GRID:
        f = analyzer.fuhrmann_cooper_factors(cls, omega)
        assert f.product == pytest.approx(analyzer.wait_lst(cls, omega), abs=1e-12)
        assert 0.0 <= f.vacation <= 1.0
        vacations.append(f.vacation)
    assert all(a >= b - 1e-12 for a, b in zip(vacations, vacations[1:]))


@pytest.mark.parametrize("cls", ["L", "2", "1"])
def test_fuhrmann_cooper_product_exhaustive(exhaustive_model, cls):
    analyzer = WaitingTimeAnalyzer(exhaustive_model)
    for omega in OMEGA_GRID:
        f = analyzer.fuhrmann_cooper_factors(cls, omega)
        assert f.product == pytest.approx(analyzer.wait_lst(cls, omega), abs=1e-12)
        assert 0.0 <= f.vacation <= 1.0


def test_fuhrmann_cooper_globally_gated_queue_2(gg_model):
    analyzer = WaitingTimeAnalyzer(gg_model)
    f = analyzer.fuhrmann_cooper_factors("2", 0.4)
    assert f.product == pytest.approx(analyzer.wait_lst("2", 0.4), abs=1e-12)


def test_exhaustive_high_priority_has_no_product_form(exhaustive_model):
    with pytest.raises(DomainError):
        WaitingTimeAnalyzer(exhaustive_model).fuhrmann_cooper_factors("H", 0.5)


def test_queue_length_pgf_normalised(study):
    assert queue_length_pgf(study.model_at(1.0), "L", 1.0) == 1.0


@pytest.mark.parametrize("cls", ["H", "L", "2"])
def test_gated_explicit_pgf_matches_little(gated_model, cls):
    for z in (0.0, 0.3, 0.7, 0.95):
        little = queue_length_pgf(gated_model, cls, z, PgfForm.LITTLE)
        explicit = queue_length_pgf(gated_model, cls, z, PgfForm.EXPLICIT)
        assert abs(little - explicit) < 1e-10


def test_explicit_pgf_not_available_for_exhaustive(exhaustive_model):
    with pytest.raises(DomainError):
        queue_length_pgf(exhaustive_model, "L", 0.5, PgfForm.EXPLICIT)


def test_mean_queue_2_population(gated_model):
    analyzer = WaitingTimeAnalyzer(gated_model)
    mean_wait = analyzer.closed_form_means()["2"]

    def slope(h):
        return (1.0 - analyzer.queue_length_pgf("2", 1.0 - h)) / h

    h = 1e-4
    mean_n = 2 * slope(h / 2) - slope(h)
    assert mean_n == pytest.approx(0.2 * (mean_wait + 1.0), rel=1e-5)


def test_degenerate_split_recovers_nonpriority_wait():
    analyzer = WaitingTimeAnalyzer(threshold_model(Discipline.GATED, 1e-3))
    means = analyzer.closed_form_means()
    assert means["L"] == pytest.approx(means["1"], rel=1e-4)


def test_means_grow_with_load(gated_model):
    previous = None
    for kappa in (0.25, 0.5, 0.75, 1.0, 1.1):
        means = WaitingTimeAnalyzer(gated_model.scaled(kappa)).closed_form_means()
        if previous is not None:
            assert all(means[k] >= previous[k] for k in means)
        previous = means


def test_exhaustive_report_cross_checks_pass():
    m = threshold_model(Discipline.EXHAUSTIVE, 1.38)
    rep = report(m)
    ids = rep.identities
    assert ids["EW_H / EW_L"] == pytest.approx(ids["1 - rho_1"], rel=1e-8)
    assert ids["EW_L - EW_H"] == pytest.approx(
        ids["rho_1 (1 - rho_1) / (1 - rho_H) E(C*_res)"], rel=1e-8)
    assert rep.weighted_mean_wait_1 == pytest.approx(
        (rep.lambdas["H"] * rep.classes["H"].mean_wait
         + rep.lambdas["L"] * rep.classes["L"].mean_wait) / 0.6, rel=1e-12)
    services = {"H": m.B_H.mean, "L": m.B_L.mean, "2": 1.0, "1": 1.0}
    for key, c in rep.classes.items():
        assert c.second_moment >= c.mean_wait ** 2 - 1e-9
        assert c.mean_queue_length == pytest.approx(
            rep.lambdas[key] * (c.mean_wait + services[key]), rel=1e-12)


def test_preemptive_report_uses_preemptive_mean(exhaustive_model):
    rep = report(exhaustive_model, ReportOptions(preemptive_H=True, classes=("H",)))
    expected = WaitingTimeAnalyzer(exhaustive_model).closed_form_means(preemptive_H=True)["H"]
    assert rep.preemptive_H
    assert rep.classes["H"].mean_wait == pytest.approx(expected, rel=1e-12)
    assert rep.classes["H"].derived_mean_wait == pytest.approx(expected, rel=1e-6)
