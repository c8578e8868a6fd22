import numpy as np
import pytest

from srg65 import fixtures
from srg65.enumeration import Enumerator
from srg65.gf2 import build_constraints, build_gauge, expand_to_D, solve_affine


@pytest.fixture(scope="session")
def printed_d():
    return expand_to_D(fixtures.example_cx())


@pytest.fixture(scope="session")
def gauged_space(printed_d):
    return solve_affine(printed_d, build_constraints(printed_d, build_gauge(printed_d)))


@pytest.fixture(scope="session")
def printed_enumerator(gauged_space, printed_d):
    return Enumerator(gauged_space, printed_d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
