import math

import pytest

from heraldkit.dispersion import CrystalSpec, load_sellmeier
from heraldkit.heralding import BeamGeometry
from heraldkit.phasematching import CollectionMode, PumpSpec, solve_central

ACCEPTANCE_LINES = {}


def record_acceptance(number, title, passed, detail):
    ACCEPTANCE_LINES[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}: {detail}"


@pytest.fixture
def acceptance():
    return record_acceptance


@pytest.fixture(scope="session")
def crystal():
    return CrystalSpec(5e-3, 7.36e-6, 131.0, load_sellmeier("jundt1997_congruent_e"))


@pytest.fixture(scope="session")
def pump():
    return PumpSpec(532.0, 144e-6)


@pytest.fixture(scope="session")
def solution(crystal, pump):
    return solve_central(crystal, pump, math.radians(1.0))


@pytest.fixture(scope="session")
def geometry(pump):
    return BeamGeometry(pump, CollectionMode(3.9e-6, 82e-6), CollectionMode(5.6e-6, 158e-6))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
