import numpy as np
import pytest

from conftest import noisy_z
from quncert.core import PAULI_X, PAULI_Z, DensityState
from quncert.errors import NotRepresentable, error, error_repr
from quncert.measurement import projective_measurement_of, trivial_measurement
from quncert.oracle import (RandomSpec, minimize_gauge, partial_inverse_by_constrained_solve,
                            pushforward_by_linear_system, random_channel, random_distribution, random_instance,
                            random_joint_povm, random_povm, random_state, sample)

SQ3 = np.sqrt(3.0)


def test_minimize_gauge_fixtures(mixed):
    _, v = minimize_gauge(PAULI_Z, trivial_measurement([0.5, 0.5], 2), mixed)
    assert v == pytest.approx(1.0, abs=1e-9)
    f, v = minimize_gauge(PAULI_Z, noisy_z(0.5), mixed, constrained=True)
    assert v == pytest.approx(SQ3, abs=1e-9)
    assert np.allclose(f, [2.0, -2.0])
    f, v = minimize_gauge(PAULI_Z, projective_measurement_of(PAULI_Z), mixed)
    assert v == pytest.approx(0.0, abs=1e-9)


def test_constrained_oracle_rejects_unrepresentable(mixed):
    with pytest.raises(NotRepresentable):
        partial_inverse_by_constrained_solve(PAULI_X, projective_measurement_of(PAULI_Z), mixed)


@pytest.mark.parametrize("seed", range(4))
def test_oracles_agree_with_closed_forms(seed):
    rng = np.random.default_rng(seed)
    M = random_povm(rng, 3, 4)
    rho = random_state(rng, 3, ("full", "deficient", "pure", "full")[seed])
    A = np.einsum("w,wij->ij", rng.standard_normal(4), M.effects)
    assert minimize_gauge(A, M, rho)[1] == pytest.approx(error(A, M, rho).value, abs=1e-6)
    assert minimize_gauge(A, M, rho, constrained=True)[1] == pytest.approx(error_repr(A, M, rho).value, abs=1e-6)
    f = pushforward_by_linear_system(A, M, rho)
    assert f.shape == (4,)


def test_generators_are_deterministic():
    a = random_instance(RandomSpec(3, (2, 3), 7))
    b = random_instance(RandomSpec(3, (2, 3), 7))
    assert np.array_equal(a.rho.matrix, b.rho.matrix)
    assert np.array_equal(a.J.effects_grid, b.J.effects_grid)
    assert np.array_equal(a.f, b.f)


def test_generators_validity():
    rng = np.random.default_rng(0)
    assert random_state(rng, 4, "pure").rank == 1
    assert random_state(rng, 4, "deficient").rank < 4
    for n in (1, 2, 6):
        M = random_povm(rng, 3, n)
        assert np.abs(M.effects.sum(axis=0) - np.eye(3)).max() <= 1e-12
    J = random_joint_povm(rng, 2, 3, 2)
    assert J.effects_grid.shape == (3, 2, 2, 2)
    p = random_distribution(rng, 5, zeros=2)
    assert (p.weights == 0).sum() == 2 and p.weights.sum() == pytest.approx(1.0)
    K = random_channel(rng, 3, 4, sparsity=0.5)
    assert np.allclose(K.kernel.sum(axis=0), 1.0)


def test_random_spec_validation():
    with pytest.raises(ValueError):
        RandomSpec(0, (2, 2), 0)
    with pytest.raises(ValueError):
        RandomSpec(2, (0, 2), 0)


def test_sample_deterministic_distribution():
    rho = DensityState((np.eye(2) + PAULI_Z) / 2)
    run = sample(projective_measurement_of(PAULI_Z), rho, 1000, functions={"id": [-1.0, 1.0]})
    assert run.means["id"] == 1.0 and run.variances["id"] == 0.0
    assert run.passed


def test_sample_sigma_z_mean(mixed):
    P = projective_measurement_of(PAULI_Z)
    run = sample(P, mixed, 10 ** 6, seed=3, functions={"z": P.values})
    assert abs(run.means["z"]) <= 5e-3
    assert run.passed
    assert run.counts.sum() == 10 ** 6


def test_sample_rejects_empty(mixed):
    with pytest.raises(ValueError):
        sample(noisy_z(0.5), mixed, 0)
