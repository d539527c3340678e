"""Linear maps between localized spaces and their standard partial inverses.

Every map is stored as a real matrix in the orthonormal charts of its
domain and codomain, so adjoints are transposes and the partial inverse
(inverse of the restriction to the orthogonal complement of the kernel) is
the truncated-SVD pseudo-inverse.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._validation import DimensionMismatch, ValidationError
from .core import DensityState, ProbDist, _freeze, build_localized_space, trace_products as _trace_products
from .measurement import Povm, StochasticChannel, apply, classical_apply

__all__ = [
    "NotInRange",
    "LocalizedLinearMap",
    "PartialInverseMap",
    "build_map",
    "partial_inverse",
    "apply_inverse",
    "adjoint_of",
    "adjoint_identity_residual",
    "range_residual",
]

MAP_KINDS = ("pullback", "pushforward", "classical-pullback", "classical-pushforward")


class NotInRange(ValueError):
    """The argument of a partial inverse lies outside the range of the map."""

    def __init__(self, residual, message=None):
        self.residual = residual
        super().__init__(message or f"not in range (relative residual {residual:.3g})")


@dataclass(frozen=True)
class LocalizedLinearMap:
    """Matrix of a linear map in orthonormal localized coordinates."""

    domain: object
    codomain: object
    matrix: np.ndarray
    tol: object
    kind: str = "generic"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.codomain.rank, self.domain.rank):
            raise DimensionMismatch(
                f"matrix shape {m.shape} does not match ranks "
                f"({self.codomain.rank}, {self.domain.rank})")
        object.__setattr__(self, "matrix", _freeze(m))

    def __call__(self, x):
        """Apply to an observable of the domain; returns a codomain representative."""
        return self.codomain.element(self.matrix @ self.domain.coords(x))

    @cached_property
    def singular_values(self):
        return np.linalg.svd(self.matrix, compute_uv=False)


@dataclass(frozen=True)
class PartialInverseMap:
    """Standard partial inverse of a :class:`LocalizedLinearMap`.

    Attributes
    ----------
    matrix : ndarray
        Domain-rank by codomain-rank matrix of the inverse.
    range_projector : ndarray
        Orthogonal projector onto the range, in codomain coordinates.
    coimage_projector : ndarray
        Orthogonal projector onto the complement of the kernel, in domain
        coordinates.
    condition_number : float
        Ratio of largest to smallest retained singular value (1 for a
        zero map).
    """

    source: LocalizedLinearMap
    matrix: np.ndarray
    range_projector: np.ndarray
    coimage_projector: np.ndarray
    rank: int
    condition_number: float

    def range_residual(self, c):
        """Relative distance of codomain coordinates ``c`` from the range."""
        c = np.asarray(c, dtype=float)
        res = np.linalg.norm(c - self.range_projector @ c)
        return float(res / max(np.linalg.norm(c), 1.0))

    def apply_coords(self, c, check=True):
        c = np.asarray(c, dtype=float)
        if check:
            r = self.range_residual(c)
            if r > self.source.tol.eq_tol:
                raise NotInRange(r)
        return self.matrix @ c

    def __call__(self, y):
        return apply_inverse(self, y)


def _spaces_for(kind, measurement, anchor, spaces):
    if spaces is not None:
        return spaces
    if kind in ("pullback", "pushforward"):
        q = build_localized_space(anchor)
        c = build_localized_space(apply(measurement, anchor))
        return (c, q) if kind == "pullback" else (q, c)
    out = build_localized_space(classical_apply(measurement, anchor))
    inp = build_localized_space(anchor)
    return (out, inp) if kind == "classical-pullback" else (inp, out)


def build_map(kind, measurement, anchor, spaces=None):
    """Coordinate realization of a pullback or pushforward.

    Parameters
    ----------
    kind : {"pullback", "pushforward", "classical-pullback", "classical-pushforward"}
    measurement : Povm or StochasticChannel
    anchor : DensityState or ProbDist
        The state (or input distribution) over which the map is localized.
    spaces : tuple of LocalizedSpace, optional
        Pre-built ``(domain, codomain)`` to reuse.

    Entries are ``m[i, j] = <codomain_basis_i, map(domain_basis_j)>``.
    """
    if kind not in MAP_KINDS:
        raise ValidationError(f"unknown map kind {kind!r}; expected one of {MAP_KINDS}")
    quantum = kind in ("pullback", "pushforward")
    if quantum and not (isinstance(measurement, Povm) and isinstance(anchor, DensityState)):
        raise ValidationError(f"{kind} needs a Povm and a DensityState")
    if not quantum and not (isinstance(measurement, StochasticChannel) and isinstance(anchor, ProbDist)):
        raise ValidationError(f"{kind} needs a StochasticChannel and a ProbDist")
    domain, codomain = _spaces_for(kind, measurement, anchor, spaces)

    if kind == "pullback":
        p = domain.anchor.weights
        idx = np.flatnonzero(domain._analysis.any(axis=1))
        # basis element j of the classical space is 1_w / sqrt(p_w)
        m = codomain.coords(measurement.effects[idx]) / np.sqrt(p[idx])[:, None]
        m = m.T
    elif kind == "pushforward":
        p = codomain.anchor.weights
        idx = np.flatnonzero(codomain._analysis.any(axis=1))
        B = np.array(domain.basis) if domain.rank else np.zeros((0, anchor.dim, anchor.dim))
        num = _trace_products(measurement.effects[idx], B, anchor.matrix)
        m = num / np.sqrt(p[idx])[:, None]
    elif kind == "classical-pullback":
        q = domain.anchor.weights
        idx = np.flatnonzero(domain._analysis.any(axis=1))
        m = codomain.coords(measurement.kernel[idx]) / np.sqrt(q[idx])[:, None]
        m = m.T
    else:
        p = domain.anchor.weights
        q = codomain.anchor.weights
        i_in = np.flatnonzero(domain._analysis.any(axis=1))
        i_out = np.flatnonzero(codomain._analysis.any(axis=1))
        m = measurement.kernel[np.ix_(i_out, i_in)] * np.sqrt(p[i_in])[None, :] / np.sqrt(q[i_out])[:, None]
    m = np.asarray(m, dtype=float).reshape(codomain.rank, domain.rank)
    return LocalizedLinearMap(domain, codomain, m, domain.tol, kind)


def partial_inverse(lmap):
    """Inverse of ``lmap`` restricted to the orthogonal complement of its kernel.

    Singular values at or below ``rank_tol * sigma_max`` are treated as zero.
    """
    A = lmap.matrix
    if A.size == 0:
        r = 0
        U = np.zeros((A.shape[0], 0))
        s = np.zeros(0)
        Vt = np.zeros((0, A.shape[1]))
    else:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        r = int(np.sum(s > lmap.tol.rank_tol * s[0])) if s.size and s[0] > 0 else 0
    Ur, sr, Vr = U[:, :r], s[:r], Vt[:r].T
    inv = (Vr / sr) @ Ur.T if r else np.zeros((A.shape[1], A.shape[0]))
    cond = float(sr[0] / sr[-1]) if r else 1.0
    return PartialInverseMap(lmap, _freeze(inv), _freeze(Ur @ Ur.T), _freeze(Vr @ Vr.T), r, cond)


def range_residual(pinv, y):
    """Relative residual of the observable ``y`` outside the range of the source map."""
    return pinv.range_residual(pinv.source.codomain.coords(y))


def apply_inverse(pinv, y):
    """Minimal-norm preimage of the observable ``y``.

    Raises
    ------
    NotInRange
        When ``y`` is farther than ``eq_tol`` (relative) from the range.
    """
    c = pinv.apply_coords(pinv.source.codomain.coords(y))
    return pinv.source.domain.element(c)


def adjoint_of(lmap):
    """Metric adjoint: the transpose in orthonormal coordinates."""
    kind = {"pullback": "pushforward", "pushforward": "pullback",
            "classical-pullback": "classical-pushforward",
            "classical-pushforward": "classical-pullback"}.get(lmap.kind, "generic")
    return LocalizedLinearMap(lmap.codomain, lmap.domain, lmap.matrix.T, lmap.tol, kind)


def adjoint_identity_residual(lmap):
    """Max-entry residual of ``(A*)^- - (A^-)*``."""
    left = partial_inverse(adjoint_of(lmap)).matrix
    right = partial_inverse(lmap).matrix.T
    return float(np.abs(left - right).max()) if left.size else 0.0
