"""
Test the polling model, derived quantities and validation
"""

import pytest

from polling.distributions import Exponential
from polling.errors import InstabilityError, ModelValidationError
from polling.model import Discipline, PollingModel, derive, require_valid, validate

UNIT = Exponential(1.0)


def unsplit(lam1=0.6, lam2=0.2, discipline=Discipline.GATED):
    return PollingModel.without_priorities(lam1, UNIT, lam2, UNIT, UNIT, UNIT, discipline)


def test_derive_threshold_model(gated_model):
    d = derive(gated_model)
    assert d.rho == pytest.approx(0.8, rel=1e-12)
    assert d.mean_cycle == pytest.approx(10.0, rel=1e-12)
    assert d.mean_intervisit_1 == pytest.approx(4.0, rel=1e-12)
    assert d.mean_visit_1 == pytest.approx(6.0, rel=1e-12)


def test_derive_empty_queue_1():
    m = PollingModel(0.0, 0.0, 0.2, UNIT, UNIT, UNIT, UNIT, UNIT)
    d = derive(m)
    assert d.rho_1 == 0.0
    assert d.mean_visit_1 == 0.0
    assert validate(m) == []


def test_derive_symmetric_model():
    d = derive(unsplit(0.3, 0.3))
    assert d.mean_visit_1 == pytest.approx(d.mean_visit_2, rel=1e-15)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_split_does_not_change_cycle_quantities(t):
    split = PollingModel.from_threshold(UNIT, 0.6, t, 0.2, UNIT, UNIT, UNIT)
    a, b = derive(split), derive(unsplit())
    assert a.rho_1 == pytest.approx(b.rho_1, rel=1e-12)
    assert a.rho == pytest.approx(b.rho, rel=1e-12)
    assert a.mean_cycle == pytest.approx(b.mean_cycle, rel=1e-12)


def test_validate_threshold_model(gated_model):
    assert validate(gated_model) == []


def test_validate_flags_instability():
    m = unsplit().scaled(2.0)
    violations = validate(m)
    assert len(violations) == 1
    assert "rho = 1.6" in violations[0]
    with pytest.raises(InstabilityError) as err:
        require_valid(m)
    assert err.value.rho == pytest.approx(1.6)


def test_validate_flags_negative_rate():
    m = PollingModel(-0.1, 0.2, 0.2, UNIT, UNIT, UNIT, UNIT, UNIT)
    violations = validate(m)
    assert any("lambda_H" in v for v in violations)
    with pytest.raises(ModelValidationError) as err:
        require_valid(m)
    assert err.value.kind == "validation"


def test_queue_1_service_is_the_mixture(gated_model):
    for w in (0.0, 0.3, 2.0):
        assert gated_model.B_1.lst(w) == pytest.approx(UNIT.lst(w), abs=1e-12)


def test_with_discipline_keeps_rates(gated_model):
    m = gated_model.with_discipline("exhaustive")
    assert m.discipline is Discipline.EXHAUSTIVE
    assert m.lambda_H == gated_model.lambda_H
