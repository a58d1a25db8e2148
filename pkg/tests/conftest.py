import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from maecpolar.channel import make_distribution
from maecpolar.lattice import lattice_for

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

CASE1 = {1: 0, 2: Fraction(3, 10), 3: Fraction(3, 5), 6: Fraction(1, 10)}
RAMP_Q = 4500

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def ramp4500_input():
    """Ten-step ramp 0..9 repeated three times, then 0..5, over 1/150."""
    weights = list(range(10)) * 3 + list(range(6))
    return make_distribution(lattice_for(RAMP_Q), [Fraction(w, 150) for w in weights])


@pytest.fixture
def case1():
    return make_distribution(lattice_for(6), CASE1)


@pytest.fixture
def ramp4500():
    return ramp4500_input()


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
