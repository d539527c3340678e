import numpy as np
import pytest

from quncert._validation import DimensionMismatch, ValidationError
from quncert.core import (DEFAULT_TOL, PAULI_X, PAULI_Y, PAULI_Z, DensityState, ProbDist, Tolerances,
                          build_localized_space, classical_norm, commutator_term, covariance, equivalent,
                          expectation, hermitian, hermitian_basis, quantum_inner, quantum_norm, std_dev,
                          trace_products)

I2 = np.eye(2)


def test_tolerances_defaults_and_replace():
    tol = Tolerances()
    assert tol.to_dict() == {"rank_tol": 1e-10, "eq_tol": 1e-8, "prob_tol": 1e-12, "ineq_tol": 1e-9}
    assert tol.replace(eq_tol=1e-6).eq_tol == 1e-6
    with pytest.raises(ValidationError):
        Tolerances(eq_tol=0.0)
    with pytest.raises(ValidationError):
        Tolerances(rank_tol=float("nan"))


def test_density_state_validation():
    with pytest.raises(ValidationError, match="trace"):
        DensityState(I2)
    with pytest.raises(ValidationError, match="negative"):
        DensityState(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        DensityState([[0.5, 1.0], [0.0, 0.5]])
    with pytest.raises(ValidationError):
        DensityState(np.ones((2, 3)) / 2)


def test_density_state_round_off_is_cleaned():
    psi = np.array([1, 1j]) / np.sqrt(2)
    rho = DensityState.pure(psi)
    assert rho.rank == 1
    # null eigenvalues are exact zeros, so the square root is the projector itself
    assert np.allclose(rho.sqrt, rho.matrix, atol=1e-15)
    assert DensityState.maximally_mixed(3).rank == 3


def test_prob_dist():
    p = ProbDist([0.5, 0.5, 0.0], ["a", "b", "c"])
    assert list(p.support) == [True, True, False]
    assert len(p) == 3
    with pytest.raises(ValidationError):
        ProbDist([0.7, 0.7])
    with pytest.raises(ValidationError):
        ProbDist([1.2, -0.2])
    with pytest.raises(ValidationError):
        ProbDist([0.5, 0.5], ["a", "a"])


def test_hermitian_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hermitian([[0, 1], [0, 0]])


def test_inner_products_and_moments(z_up):
    assert quantum_inner(PAULI_X, PAULI_X, z_up) == pytest.approx(1.0)
    # <{X, Y}>/2 vanishes, the commutator term is <Z> = 1
    assert quantum_inner(PAULI_X, PAULI_Y, z_up) == pytest.approx(0.0)
    assert commutator_term(PAULI_X, PAULI_Y, z_up) == pytest.approx(1.0)
    assert expectation(PAULI_Z, z_up) == pytest.approx(1.0)
    assert std_dev(PAULI_Z, z_up) < 1e-15
    assert std_dev(PAULI_X, z_up) == pytest.approx(1.0)
    assert covariance(PAULI_X, PAULI_X, z_up) == pytest.approx(1.0)
    assert quantum_norm(PAULI_X, z_up) == pytest.approx(1.0)


def test_classical_moments():
    p = ProbDist([0.25, 0.75])
    f = np.array([2.0, -2.0])
    assert classical_norm(f, p) == pytest.approx(2.0)
    assert expectation(f, p) == pytest.approx(-1.0)
    assert std_dev(f, p) == pytest.approx(np.sqrt(3.0))


def test_dimension_checks(z_up):
    with pytest.raises(DimensionMismatch):
        quantum_inner(np.eye(3), np.eye(3), z_up)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_hermitian_basis_is_frobenius_orthonormal(d):
    H = hermitian_basis(d)
    assert H.shape == (d * d, d, d)
    G = np.real(np.einsum("kij,lji->kl", H, H))
    assert np.allclose(G, np.eye(d * d), atol=1e-14)
    assert np.allclose(H, np.conj(np.swapaxes(H, 1, 2)))


def test_trace_products_matches_direct_traces():
    rng = np.random.default_rng(0)
    E = rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2))
    B = rng.standard_normal((4, 2, 2)) + 1j * rng.standard_normal((4, 2, 2))
    R = rng.standard_normal((2, 2))
    direct = np.array([[np.real(np.trace(e @ b @ R)) for b in B] for e in E])
    assert np.allclose(trace_products(E, B, R), direct)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_localized_space_ranks(d):
    rng = np.random.default_rng(d)
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    assert build_localized_space(DensityState.pure(psi)).rank == 2 * d - 1
    assert build_localized_space(DensityState.maximally_mixed(d)).rank == d * d
    # rank-r state: d^2 - (d - r)^2
    v = np.zeros(d)
    v[:2] = 0.5
    assert build_localized_space(DensityState(np.diag(v))).rank == d * d - (d - 2) ** 2


def test_localized_space_basis_orthonormal(y_up):
    S = build_localized_space(y_up)
    G = np.array([[quantum_inner(a, b, y_up) for b in S.basis] for a in S.basis])
    assert np.allclose(G, np.eye(S.rank), atol=1e-12)
    # coords of a representative reproduce the class
    A = PAULI_X + 0.3 * PAULI_Z
    assert equivalent(S.element(S.coords(A)), A, y_up)
    assert S.norm(A) == pytest.approx(quantum_norm(A, y_up))


def test_classical_localized_space():
    p = ProbDist([0.5, 0.0, 0.5])
    S = build_localized_space(p)
    assert S.rank == 2
    f = np.array([1.0, 7.0, -1.0])
    g = S.element(S.coords(f))
    assert g[1] == 0.0
    assert equivalent(f, g, p)
    assert S.norm(f) == pytest.approx(1.0)


def test_equivalent_ignores_null_directions(z_up):
    # the (2,2) entry is invisible to the state |0><0|
    D = np.diag([0.0, 5.0])
    assert equivalent(PAULI_Z, PAULI_Z + D, z_up)
    assert not equivalent(PAULI_Z, PAULI_Z + PAULI_X, z_up)


def test_default_tolerance_is_attached(z_up):
    assert z_up.tol is DEFAULT_TOL
