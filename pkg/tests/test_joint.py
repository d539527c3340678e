import numpy as np
import pytest

from conftest import akg_joint, noisy_x, noisy_z
from quncert._validation import DimensionMismatch
from quncert.core import PAULI_X, PAULI_Z, DensityState
from quncert.joint import (JointPovm, diagonal_joint, embed, is_local_joint_description,
                           is_local_joint_measurement, marginals, projection_channel)
from quncert.measurement import Povm, StochasticChannel, projective_measurement_of, trivial_measurement
from quncert.oracle import random_joint_povm, random_state

I2 = np.eye(2)


def test_marginals_of_akg_joint():
    eta = 1 / np.sqrt(2)
    M1, M2 = marginals(akg_joint(eta))
    assert np.allclose(M1.effects, noisy_x(eta).effects)
    assert np.allclose(M2.effects, noisy_z(eta).effects)
    assert np.allclose(M1.values, [np.sqrt(2), -np.sqrt(2)])


def test_joint_labels_and_shapes():
    J = akg_joint(0.5)
    assert list(J.povm.outcomes) == ["+|+", "+|-", "-|+", "-|-"]
    assert J.effects_grid.shape == (2, 2, 2, 2)
    rho = DensityState(I2 / 2)
    assert np.allclose(J.distribution_grid(rho), 0.25)
    flat = JointPovm(J.povm.effects, J.factors)
    assert np.allclose(flat.effects_grid, J.effects_grid)


def test_embed_and_projection():
    f = np.array([1.0, 2.0])
    g = np.array([5.0, 6.0, 7.0])
    assert list(embed(f, 1, (2, 3))) == [1, 1, 1, 2, 2, 2]
    assert list(embed(g, 2, (2, 3))) == [5, 6, 7, 5, 6, 7]
    with pytest.raises(DimensionMismatch):
        embed(g, 1, (2, 3))
    J = random_joint_povm(np.random.default_rng(0), 2, 2, 3)
    K = projection_channel(J, 2)
    assert K.kernel.shape == (3, 6)
    assert np.allclose(K.kernel @ embed(g, 2, (2, 3)) / 2, g)


def test_certificate_holds_for_marginals(y_up):
    J = akg_joint(1 / np.sqrt(2))
    M, N = marginals(J)
    cert = is_local_joint_measurement(M, N, J, y_up)
    assert cert.holds and cert.pullback_holds and cert.pushforward_holds
    assert cert.global_residual < 1e-15


def test_certificate_fails_for_sharp_complementary_pair(y_up):
    # sharp X and Z have no joint measurement; the noisy joint cannot mediate them
    MX, MZ = projective_measurement_of(PAULI_X), projective_measurement_of(PAULI_Z)
    for eta in (0.5, 1 / np.sqrt(2)):
        J = akg_joint(eta)
        # order outcomes (+, -) to match the joint factors
        MXo = Povm(MX.effects[::-1], ["+", "-"])
        MZo = Povm(MZ.effects[::-1], ["+", "-"])
        cert = is_local_joint_measurement(MXo, MZo, J, y_up)
        assert not cert.holds
        assert not cert.pushforward_holds


def test_certificate_is_local(z_up):
    # over |0><0| a Z measurement is reproduced by anything diagonal that sums right
    J = JointPovm([[np.diag([1.0, 0.0]), np.zeros((2, 2))], [np.zeros((2, 2)), np.diag([0.0, 1.0])]],
                  (["+", "-"], ["+", "-"]))
    M = projective_measurement_of(PAULI_Z)
    M = Povm(M.effects[::-1], ["+", "-"])
    N = noisy_z(0.3)
    cert = is_local_joint_measurement(M, M, J, z_up)
    assert cert.holds
    assert not is_local_joint_measurement(M, N, J, DensityState(I2 / 2)).holds


@pytest.mark.parametrize("seed", range(5))
def test_random_joint_certificates(seed):
    rng = np.random.default_rng(seed)
    J = random_joint_povm(rng, 3, 2, 3)
    rho = random_state(rng, 3, "deficient")
    M, N = marginals(J)
    cert = is_local_joint_measurement(M, N, J, rho)
    assert cert.holds
    assert max(r["pullback"] for r in cert.residuals.values()) < 1e-12


def test_diagonal_joint(mixed):
    M = noisy_z(0.5, [1.0, -1.0])
    J = diagonal_joint(M)
    M1, M2 = marginals(J)
    assert np.allclose(M1.effects, M.effects) and np.allclose(M2.effects, M.effects)
    assert is_local_joint_measurement(M, M, J, mixed).holds


def test_joint_description_with_general_channel(mixed):
    # a coarse-graining of one measurement is described by it
    J = projective_measurement_of(np.diag([1.0, 2.0]))
    K = StochasticChannel([[1.0, 1.0]], J.outcomes, ["all"])
    T = trivial_measurement([1.0], 2)
    assert is_local_joint_description([T], J, mixed, [K]).holds


def test_dimension_mismatch(mixed):
    J = akg_joint(0.5)
    with pytest.raises(DimensionMismatch):
        is_local_joint_measurement(projective_measurement_of(np.diag([1.0, 2.0, 3.0])), noisy_z(0.5), J, mixed)
