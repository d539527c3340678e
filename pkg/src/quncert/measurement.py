"""POVMs, classical channels, and their pullbacks and pushforwards."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._validation import DimensionMismatch, ValidationError, check_labels, check_real_vector
from .core import DEFAULT_TOL, DensityState, ProbDist, _freeze, hermitian

__all__ = [
    "Povm",
    "StochasticChannel",
    "PushforwardResult",
    "apply",
    "adjoint_apply",
    "pushforward",
    "pullback",
    "classical_apply",
    "classical_pullback",
    "classical_pushforward",
    "projective_measurement_of",
    "trivial_measurement",
    "identity_channel",
    "binary_symmetric_channel",
]


class Povm:
    """Finite POVM: positive semidefinite effects summing to the identity.

    Parameters
    ----------
    effects : array_like, shape (n, d, d)
    outcomes : sequence of str, optional
        Opaque outcome labels; defaults to ``"0", "1", ...``.
    values : array_like, shape (n,), optional
        Numeric value attached to each outcome.  Only value-based error
        comparisons need it.
    """

    def __init__(self, effects, outcomes=None, values=None, tol=DEFAULT_TOL):
        E = np.asarray(effects, dtype=complex)
        if E.ndim != 3 or E.shape[1] != E.shape[2] or E.shape[0] == 0:
            raise ValidationError(f"effects must have shape (n, d, d), got {E.shape}")
        labels = check_labels(outcomes, E.shape[0])
        E = np.array([hermitian(e, tol, f"effect {lab!r}") for e, lab in zip(E, labels)])
        w, v = np.linalg.eigh(E)
        scale = max(1.0, float(np.abs(w).max()))
        for k, lab in enumerate(labels):
            if w[k].min() < -tol.rank_tol * scale:
                raise ValidationError(
                    f"effect {lab!r} is not positive semidefinite (min eigenvalue {w[k].min():.3g})")
        dev = np.abs(E.sum(axis=0) - np.eye(E.shape[1])).max()
        if dev > tol.eq_tol:
            raise ValidationError(f"effects do not sum to the identity (max deviation {dev:.3g})")
        self.effects = _freeze(E)
        self.outcomes = labels
        self.values = None if values is None else _freeze(check_real_vector(values, "values", E.shape[0]))
        self.tol = tol
        # round-off eigenvalues would put ~1e-8 junk into sqrt_effects
        self._eig = (np.where(w > tol.rank_tol * scale, w, 0.0), v)

    def __repr__(self):
        return f"Povm(dim={self.dim}, outcomes={list(self.outcomes)})"

    def __len__(self):
        return self.effects.shape[0]

    @property
    def dim(self):
        return self.effects.shape[1]

    @cached_property
    def sqrt_effects(self):
        w, v = self._eig
        return _freeze(np.einsum("wij,wj,wkj->wik", v, np.sqrt(w), v.conj()))

    def with_values(self, values):
        return Povm(self.effects, self.outcomes, values, self.tol)


class StochasticChannel:
    """Column-stochastic kernel ``kernel[j, i] = K(out_j | in_i)``."""

    def __init__(self, kernel, in_outcomes=None, out_outcomes=None, tol=DEFAULT_TOL):
        K = np.asarray(kernel, dtype=float)
        if K.ndim != 2 or K.size == 0:
            raise ValidationError(f"kernel must be a non-empty 2-D array, got shape {K.shape}")
        if not np.all(np.isfinite(K)) or K.min() < -tol.prob_tol:
            raise ValidationError("kernel entries must be finite and nonnegative")
        dev = np.abs(K.sum(axis=0) - 1).max()
        if dev > tol.eq_tol:
            raise ValidationError(f"kernel columns do not sum to 1 (max deviation {dev:.3g})")
        self.kernel = _freeze(np.clip(K, 0, None))
        self.in_outcomes = check_labels(in_outcomes, K.shape[1], "in_outcomes")
        self.out_outcomes = check_labels(out_outcomes, K.shape[0], "out_outcomes")
        self.tol = tol

    def __repr__(self):
        return f"StochasticChannel({len(self.in_outcomes)} -> {len(self.out_outcomes)})"


@dataclass(frozen=True)
class PushforwardResult:
    """Pushforward of an observable, defined on the support of the outcome law.

    ``values`` has one entry per outcome; off-support entries are zero by
    convention since they are null directions of the localized space.
    """

    values: np.ndarray
    support: np.ndarray
    distribution: ProbDist

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _check_state(M, rho):
    if not isinstance(rho, DensityState):
        raise ValidationError("expected a DensityState")
    if M.dim != rho.dim:
        raise DimensionMismatch(f"POVM on dimension {M.dim} applied to a {rho.dim}-dimensional state")


def _check_function(f, n, what="function"):
    f = check_real_vector(f, what)
    if f.shape[0] != n:
        raise DimensionMismatch(f"{what} has {f.shape[0]} entries for {n} outcomes")
    return f


def apply(M, rho):
    """Outcome distribution ``p(w) = Tr[E_w rho]``."""
    _check_state(M, rho)
    p = np.real(np.einsum("wij,ji->w", M.effects, rho.matrix))
    p = np.clip(p, 0, None)
    return ProbDist(p / p.sum(), M.outcomes, M.tol)


def adjoint_apply(M, f):
    """Operator ``sum_w f(w) E_w``."""
    f = _check_function(f, len(M))
    return np.einsum("w,wij->ij", f, M.effects)


def pushforward(M, rho, A, p=None):
    """Pushforward by the discrete Radon-Nikodym quotient.

    ``f(w) = Re Tr[E_w A rho] / Tr[E_w rho]`` on the support of ``M rho``.
    """
    _check_state(M, rho)
    A = np.asarray(A)
    if A.shape != (rho.dim, rho.dim):
        raise DimensionMismatch(f"observable of shape {A.shape} on a {rho.dim}-dimensional state")
    p = p if p is not None else apply(M, rho)
    supp = p.support
    num = np.real(np.einsum("wij,jk,ki->w", M.effects, A, rho.matrix))
    vals = np.zeros(len(M))
    vals[supp] = num[supp] / p.weights[supp]
    return PushforwardResult(_freeze(vals), supp, p)


def pullback(M, rho, f):
    """Representative ``sum_w f(w) E_w`` of the pulled-back class over ``rho``."""
    _check_state(M, rho)
    return adjoint_apply(M, f)


def _check_channel_input(K, p):
    if not isinstance(p, ProbDist):
        raise ValidationError("expected a ProbDist")
    if len(p) != K.kernel.shape[1]:
        raise DimensionMismatch(f"channel expects {K.kernel.shape[1]} input outcomes, got {len(p)}")


def classical_apply(K, p):
    _check_channel_input(K, p)
    q = K.kernel @ p.weights
    return ProbDist(q / q.sum(), K.out_outcomes, K.tol)


def classical_pullback(K, p, g):
    """``(K'g)(w) = sum_w' K(w'|w) g(w')``."""
    _check_channel_input(K, p)
    g = _check_function(g, K.kernel.shape[0])
    return K.kernel.T @ g


def classical_pushforward(K, p, a, q=None):
    """Conditional expectation of ``a`` given the channel output."""
    _check_channel_input(K, p)
    a = _check_function(a, len(p))
    q = q if q is not None else classical_apply(K, p)
    supp = q.support
    vals = np.zeros(K.kernel.shape[0])
    vals[supp] = (K.kernel @ (p.weights * a))[supp] / q.weights[supp]
    return PushforwardResult(_freeze(vals), supp, q)


def projective_measurement_of(A, tol=DEFAULT_TOL, merge_tol=1e-8):
    """Spectral measurement of a Hermitian matrix.

    Eigenvalues closer than ``merge_tol`` times the spectral radius are
    merged into one outcome; outcome values are the (averaged) eigenvalues.
    """
    A = hermitian(A, tol)
    w, v = np.linalg.eigh(A)
    radius = max(np.abs(w).max(), 1e-300)
    groups = [[0]]
    for k in range(1, w.size):
        if w[k] - w[groups[-1][-1]] <= merge_tol * radius:
            groups[-1].append(k)
        else:
            groups.append([k])
    values = np.array([w[g].mean() for g in groups])
    effects = np.array([v[:, g] @ v[:, g].conj().T for g in groups])
    labels = [f"{x:.12g}" for x in values]
    if len(set(labels)) != len(labels):
        labels = [f"{lab}#{i}" for i, lab in enumerate(labels)]
    return Povm(effects, labels, values, tol)


def trivial_measurement(p0, dim, tol=DEFAULT_TOL):
    """POVM with effects ``p0(w) * I``: the outcome law never depends on the state."""
    if not isinstance(p0, ProbDist):
        p0 = ProbDist(p0, tol=tol)
    effects = p0.weights[:, None, None] * np.eye(dim)[None]
    return Povm(effects, p0.outcomes, None, tol)


def identity_channel(outcomes, tol=DEFAULT_TOL):
    n = len(outcomes)
    return StochasticChannel(np.eye(n), outcomes, outcomes, tol)


def binary_symmetric_channel(q, outcomes=("+1", "-1"), tol=DEFAULT_TOL):
    """Flips the input with probability ``q``."""
    return StochasticChannel([[1 - q, q], [q, 1 - q]], outcomes, outcomes, tol)
