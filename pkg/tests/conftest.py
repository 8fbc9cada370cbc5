import math

import numpy as np
import pytest

from lossfluid import (
    ConstantIntensity,
    Deterministic,
    Exponential,
    LogNormal,
    ModelConfig,
    SinusoidalIntensity,
)

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:<4s} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def underload():
    return ModelConfig(ConstantIntensity(0.5), Exponential(1.0), 5.0)


@pytest.fixture
def overload():
    return ModelConfig(ConstantIntensity(3.0), Deterministic(1.0), 2.0)


@pytest.fixture
def sinusoid_model():
    return ModelConfig(SinusoidalIntensity(2 / 3, 1.0, 10.0), LogNormal(-0.5, 1.0), 20.0)


def closed_form_underload(t):
    return 0.5 * (1.0 - np.exp(-np.asarray(t)))


def poisson_mean_bracket(mean, reps, k=3.0):
    # standard error of the average of `reps` Poisson(mean) counts
    se = math.sqrt(mean / reps)
    return mean - k * se, mean + k * se
