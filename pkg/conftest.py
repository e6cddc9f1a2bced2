"""
Shared fixtures: the threshold study (lambda_1 = 0.6, lambda_2 = 0.2,
unit-mean exponential services and switch-overs) under each discipline
"""

import os

import pytest

from polling.distributions import Exponential
from polling.model import Discipline
from polling.sweep import ThresholdStudy

UNIT = Exponential(1.0)


def pytest_collection_modifyitems(config, items):
    if os.getenv("POLLINGKIT_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="full-budget run; set POLLINGKIT_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def make_study(discipline: Discipline) -> ThresholdStudy:
    return ThresholdStudy(UNIT, 0.6, 0.2, UNIT, UNIT, UNIT, discipline)


@pytest.fixture
def gated_model():
    return make_study(Discipline.GATED).model_at(1.0)


@pytest.fixture
def gg_model():
    return make_study(Discipline.GLOBALLY_GATED).model_at(1.0)


@pytest.fixture
def exhaustive_model():
    return make_study(Discipline.EXHAUSTIVE).model_at(1.0)


@pytest.fixture(params=list(Discipline), ids=lambda d: d.value)
def study(request):
    return make_study(request.param)
