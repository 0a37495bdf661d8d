import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from thermolam.materials import derive_coefficients, sofc_phase_inputs  # noqa: E402
from thermolam.transfer import CellSpec, LayerSpec  # noqa: E402

import acceptance_log  # noqa: E402

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sofc_coeffs():
    p1, p2 = sofc_phase_inputs()
    return derive_coefficients(p1), derive_coefficients(p2)


@pytest.fixture(scope="session")
def sofc_cell(sofc_coeffs):
    c1, c2 = sofc_coeffs
    return CellSpec((LayerSpec(c1, 1e-3), LayerSpec(c2, 1e-3)))


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_log.lines()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
