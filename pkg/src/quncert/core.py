"""States, distributions, state-dependent inner products and localized spaces.

Observables are plain arrays: Hermitian ``(d, d)`` matrices for quantum
observables and real vectors indexed by outcome for classical ones.  States
and distributions are small immutable wrappers that validate their input
once and cache the factorizations every downstream computation needs.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ._validation import (
    DimensionMismatch,
    ValidationError,
    as_square_matrix,
    check_hermitian,
    check_labels,
    check_real_vector,
    check_same_dim,
)

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "DensityState",
    "trace_products",
    "ProbDist",
    "LocalizedSpace",
    "hermitian",
    "quantum_inner",
    "quantum_norm",
    "classical_inner",
    "classical_norm",
    "expectation",
    "std_dev",
    "covariance",
    "commutator_term",
    "build_localized_space",
    "equivalent",
    "hermitian_basis",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "IDENTITY_2",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

for _m in (PAULI_X, PAULI_Y, PAULI_Z, IDENTITY_2):
    _m.flags.writeable = False


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the package.

    Parameters
    ----------
    rank_tol : float
        Relative cutoff on eigen/singular values below which a direction
        is treated as null.
    eq_tol : float
        Seminorm threshold for equality of observables and for range
        membership.
    prob_tol : float
        Probabilities at or below this value are treated as zero.
    ineq_tol : float
        Permitted negative slack before an inequality is declared violated.
    """

    rank_tol: float = 1e-10
    eq_tol: float = 1e-8
    prob_tol: float = 1e-12
    ineq_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rank_tol", "eq_tol", "prob_tol", "ineq_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"tolerance {name} must be strictly positive, got {v!r}")

    def replace(self, **changes):
        fields = {k: getattr(self, k) for k in ("rank_tol", "eq_tol", "prob_tol", "ineq_tol")}
        fields.update({k: v for k, v in changes.items() if v is not None})
        return Tolerances(**fields)

    def to_dict(self):
        return {"rank_tol": self.rank_tol, "eq_tol": self.eq_tol,
                "prob_tol": self.prob_tol, "ineq_tol": self.ineq_tol}


DEFAULT_TOL = Tolerances()


def _freeze(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


class DensityState:
    """A validated density matrix.

    Eigenvalues at or below ``rank_tol`` times the largest one (down to
    ``-rank_tol``) are set to zero and the matrix is renormalized; anything
    more negative is rejected.  Without this, round-off eigenvalues near
    1e-17 would leak ~1e-8 components into ``sqrt``.
    """

    def __init__(self, matrix, tol=DEFAULT_TOL):
        a = as_square_matrix(matrix, "density matrix")
        a = check_hermitian(a, tol.eq_tol, "density matrix")
        tr = np.trace(a).real
        if abs(tr - 1.0) > tol.eq_tol:
            raise ValidationError(f"density matrix has trace {tr:.12g}, expected 1")
        w, v = np.linalg.eigh(a)
        if w.min() < -tol.rank_tol:
            raise ValidationError(f"density matrix has negative eigenvalue {w.min():.3g}")
        small = w <= tol.rank_tol * w.max()
        if small.any():
            w = np.where(small, 0.0, w)
            w = w / w.sum()
            a = (v * w) @ v.conj().T
        self.matrix = _freeze(a)
        self.dim = a.shape[0]
        self.tol = tol
        self._eig = (_freeze(w), _freeze(v))

    def __repr__(self):
        return f"DensityState(dim={self.dim}, rank={self.rank})"

    @property
    def eigenvalues(self):
        return self._eig[0]

    @property
    def eigenvectors(self):
        return self._eig[1]

    @cached_property
    def sqrt(self):
        w, v = self._eig
        return _freeze((v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T)

    @cached_property
    def rank(self):
        w = self._eig[0]
        return int(np.sum(w > self.tol.rank_tol * max(w.max(), 1e-300)))

    @classmethod
    def pure(cls, psi, tol=DEFAULT_TOL):
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), tol)

    @classmethod
    def maximally_mixed(cls, dim, tol=DEFAULT_TOL):
        return cls(np.eye(dim) / dim, tol)


class ProbDist:
    """A validated probability distribution over labelled outcomes."""

    def __init__(self, weights, outcomes=None, tol=DEFAULT_TOL):
        w = check_real_vector(weights, "weights")
        if w.size == 0:
            raise ValidationError("distribution needs at least one outcome")
        if w.min() < -tol.prob_tol:
            raise ValidationError(f"negative probability {w.min():.3g}")
        s = w.sum()
        if abs(s - 1.0) > tol.eq_tol:
            raise ValidationError(f"probabilities sum to {s:.12g}, expected 1")
        w = np.clip(w, 0.0, None)
        self.weights = _freeze(w / w.sum())
        self.outcomes = check_labels(outcomes, w.size)
        self.tol = tol

    def __repr__(self):
        return f"ProbDist({dict(zip(self.outcomes, np.round(self.weights, 6)))})"

    def __len__(self):
        return self.weights.size

    @cached_property
    def support(self):
        """Boolean mask of outcomes with probability above ``prob_tol``."""
        return _freeze(self.weights > self.tol.prob_tol)


def hermitian(a, tol=DEFAULT_TOL, name="observable"):
    """Validate and symmetrize a Hermitian matrix."""
    return check_hermitian(as_square_matrix(a, name), tol.eq_tol, name)


def _check_dims(rho, *mats):
    for m in mats:
        if m.shape != (rho.dim, rho.dim):
            raise DimensionMismatch(f"observable of shape {m.shape} on a {rho.dim}-dimensional state")


def _check_len(p, *vecs):
    for v in vecs:
        if np.shape(v) != (len(p),):
            raise DimensionMismatch(f"function of shape {np.shape(v)} on {len(p)} outcomes")


def quantum_inner(A, B, rho):
    """Anticommutator inner product ``Tr[{A, B} rho] / 2`` of Hermitian matrices."""
    A = np.asarray(A)
    B = np.asarray(B)
    _check_dims(rho, A, B)
    return float(np.real(np.einsum("ij,jk,ki->", A, B, rho.matrix)))


def trace_products(E, B, rho):
    """Matrix ``Re Tr[E_w B_r rho]`` for stacks ``E`` (n, d, d) and ``B`` (r, d, d)."""
    n, d = E.shape[0], E.shape[-1]
    T = np.swapaxes(B @ rho, 1, 2).reshape(B.shape[0], d * d)
    return np.real(E.reshape(n, d * d) @ T.T)


def quantum_norm(A, rho):
    """State seminorm ``sqrt(Tr[A^H A rho])``, computed as ``||A rho^{1/2}||_F``."""
    A = np.asarray(A)
    _check_dims(rho, A)
    return float(np.linalg.norm(A @ rho.sqrt))


def classical_inner(f, g, p):
    _check_len(p, f, g)
    return float(np.dot(np.asarray(f) * np.asarray(g), p.weights))


def classical_norm(f, p):
    _check_len(p, f)
    return float(np.sqrt(np.dot(np.square(f), p.weights)))


def expectation(x, anchor):
    if isinstance(anchor, DensityState):
        x = np.asarray(x)
        _check_dims(anchor, x)
        return float(np.real(np.einsum("ij,ji->", x, anchor.matrix)))
    _check_len(anchor, x)
    return float(np.dot(x, anchor.weights))


def std_dev(x, anchor):
    """Standard deviation of an observable, via the centred seminorm.

    Centring before squaring avoids the cancellation in
    ``||x||^2 - <x>^2`` so that eigenstates give zero to machine precision.
    """
    m = expectation(x, anchor)
    if isinstance(anchor, DensityState):
        return quantum_norm(np.asarray(x) - m * np.eye(anchor.dim), anchor)
    return classical_norm(np.asarray(x, dtype=float) - m, anchor)


def covariance(A, B, rho):
    """Symmetrized quantum covariance ``<{A,B}/2> - <A><B>``."""
    return quantum_inner(A, B, rho) - expectation(A, rho) * expectation(B, rho)


def commutator_term(A, B, rho):
    """``<[A, B] / 2i>_rho``, i.e. ``Im Tr[rho A B]`` for Hermitian A, B."""
    A = np.asarray(A)
    B = np.asarray(B)
    _check_dims(rho, A, B)
    return float(np.imag(np.einsum("ij,jk,ki->", rho.matrix, A, B)))


@lru_cache(maxsize=None)
def hermitian_basis(dim):
    """Frobenius-orthonormal basis of the real space of Hermitian matrices.

    Returns an array of shape ``(dim**2, dim, dim)``: diagonal units first,
    then symmetric and antisymmetric off-diagonal pairs.
    """
    out = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1
        out.append(e)
    s = 1 / np.sqrt(2)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = e[j, i] = s
            out.append(e)
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = -1j * s
            e[j, i] = 1j * s
            out.append(e)
    return _freeze(np.array(out))


def _hermitian_coordinates(mats, dim):
    """Real coordinates of one or many Hermitian matrices in ``hermitian_basis``."""
    H = hermitian_basis(dim)
    return np.real(np.einsum("kij,...ji->...k", H, mats))


class LocalizedSpace:
    """Quotient of observables by the null space of a state seminorm.

    The quotient is realized by an orthonormal coordinate chart: ``coords``
    maps an observable to its coordinates, ``element`` maps coordinates back
    to a canonical representative, and ``basis`` lists the representatives
    of the orthonormal basis vectors.

    Use :func:`build_localized_space` to construct one.
    """

    def __init__(self, kind, anchor, analysis, synthesis, tol):
        self.kind = kind
        self.anchor = anchor
        self.tol = tol
        self._analysis = _freeze(analysis)
        self._synthesis = _freeze(synthesis)
        self.rank = analysis.shape[1]

    def __repr__(self):
        return f"LocalizedSpace(kind={self.kind!r}, rank={self.rank})"

    @property
    def ambient_dim(self):
        return self._analysis.shape[0]

    def coords(self, x):
        """Orthonormal coordinates of an observable (or a stack of them)."""
        x = np.asarray(x)
        if self.kind == "quantum":
            d = self.anchor.dim
            if x.shape[-2:] != (d, d):
                raise DimensionMismatch(f"observable of shape {x.shape} on a {d}-dimensional state")
            a = _hermitian_coordinates(x, d)
        else:
            if x.shape[-1:] != (len(self.anchor),):
                raise DimensionMismatch(f"function of shape {x.shape} on {len(self.anchor)} outcomes")
            a = x.astype(float)
        return a @ self._analysis

    def element(self, c):
        """Canonical representative of the class with coordinates ``c``."""
        c = np.asarray(c, dtype=float)
        a = c @ self._synthesis.T
        if self.kind == "quantum":
            return np.einsum("...k,kij->...ij", a, hermitian_basis(self.anchor.dim))
        return a

    @cached_property
    def basis(self):
        return [self.element(e) for e in np.eye(self.rank)]

    def norm(self, x):
        return float(np.linalg.norm(self.coords(x)))


def build_localized_space(anchor, tol=None):
    """Orthonormal chart of the localized observable space over ``anchor``.

    For a quantum state the Gram matrix of the seminorm over the Hermitian
    unit basis is diagonalized and eigendirections at or below
    ``rank_tol * max eigenvalue`` are discarded.  For a distribution the
    Gram matrix is diagonal and the chart keeps the supported outcomes.
    """
    tol = tol or anchor.tol
    if isinstance(anchor, DensityState):
        d = anchor.dim
        H = hermitian_basis(d)
        HR = H @ anchor.matrix
        G = np.real(np.einsum("kij,lji->kl", H, HR))
        G = (G + G.T) / 2
        lam, V = np.linalg.eigh(G)
        keep = lam > tol.rank_tol * lam.max()
        lam, V = lam[keep][::-1], V[:, keep][:, ::-1]
        return LocalizedSpace("quantum", anchor, V * np.sqrt(lam), V / np.sqrt(lam), tol)
    if isinstance(anchor, ProbDist):
        w = anchor.weights
        idx = np.flatnonzero(w > tol.prob_tol)
        n = w.size
        analysis = np.zeros((n, idx.size))
        synthesis = np.zeros((n, idx.size))
        analysis[idx, np.arange(idx.size)] = np.sqrt(w[idx])
        synthesis[idx, np.arange(idx.size)] = 1 / np.sqrt(w[idx])
        return LocalizedSpace("classical", anchor, analysis, synthesis, tol)
    raise ValidationError(f"anchor must be a DensityState or ProbDist, got {type(anchor).__name__}")


def equivalent(x, y, anchor, tol=None):
    """True when ``x`` and ``y`` differ by a null direction of the anchor seminorm."""
    tol = tol or anchor.tol
    x = np.asarray(x)
    y = np.asarray(y)
    check_same_dim(x, y)
    if isinstance(anchor, DensityState):
        return quantum_norm(x - y, anchor) <= tol.eq_tol
    return classical_norm(x - y, anchor) <= tol.eq_tol
