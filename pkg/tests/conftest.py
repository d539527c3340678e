import numpy as np
import pytest

from quncert.core import PAULI_X, PAULI_Y, PAULI_Z, DensityState
from quncert.joint import JointPovm
from quncert.measurement import Povm

I2 = np.eye(2)

# lines collected by test_acceptance and printed after the run
ACCEPTANCE = {}


def noisy_z(eta, values=None):
    return Povm([(I2 + eta * PAULI_Z) / 2, (I2 - eta * PAULI_Z) / 2], ["+", "-"], values)


def noisy_x(eta, values=None):
    return Povm([(I2 + eta * PAULI_X) / 2, (I2 - eta * PAULI_X) / 2], ["+", "-"], values)


def akg_joint(eta, values=None):
    E = np.array([[(I2 + a * eta * PAULI_X + b * eta * PAULI_Z) / 4 for b in (1, -1)] for a in (1, -1)])
    if values is None:
        values = (np.array([1, -1]) / eta, np.array([1, -1]) / eta)
    return JointPovm(E, (["+", "-"], ["+", "-"]), values)


@pytest.fixture
def mixed():
    return DensityState(I2 / 2)


@pytest.fixture
def y_up():
    return DensityState((I2 + PAULI_Y) / 2)


@pytest.fixture
def z_up():
    return DensityState((I2 + PAULI_Z) / 2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
