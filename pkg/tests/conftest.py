import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ipround import PROBLEMS, standard_start
from ipround.driver import CentralityParams, StopRule, run
from ipround.precision import PrecisionConfig
from ipround.stepgen import StepConfig

REFERENCE_STOP = StopRule(mu_min=1e-18, max_iters=10, step_fraction=0.99)


def reference_trace(problem_key, formulation, solver, bits=53):
    problem, known = PROBLEMS[problem_key]()
    return run(
        problem,
        known,
        standard_start(problem_key),
        StepConfig(formulation=formulation, solver=solver),
        CentralityParams(),
        PrecisionConfig.from_bits(bits),
        REFERENCE_STOP,
    )


@pytest.fixture(scope="session")
def trace_augmented():
    return reference_trace("two-circles", "augmented", "gepp")


@pytest.fixture(scope="session")
def trace_condensed():
    return reference_trace("two-circles", "condensed", "cholesky")


@pytest.fixture(scope="session")
def trace_modified():
    return reference_trace("two-circles-mod", "condensed", "cholesky")


@pytest.fixture(scope="session")
def trace_augmented_p24():
    return reference_trace("two-circles", "augmented", "gepp", bits=24)


@pytest.fixture()
def two_circles():
    return PROBLEMS["two-circles"]()


@pytest.fixture()
def two_circles_mod():
    return PROBLEMS["two-circles-mod"]()


@pytest.fixture()
def scalar_quadratic():
    return PROBLEMS["scalar-quadratic"]()
