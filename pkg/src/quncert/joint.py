"""Joint POVMs on product outcome spaces, marginals, and joint-description certificates."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ._validation import DimensionMismatch, ValidationError, check_labels, check_real_vector
from .core import DEFAULT_TOL, trace_products as _trace_products
from .measurement import Povm, StochasticChannel, apply, classical_apply
from .errors import LocalizedMeasurement

__all__ = [
    "JointPovm",
    "JointDescriptionCertificate",
    "marginals",
    "embed",
    "projection_channel",
    "is_local_joint_measurement",
    "is_local_joint_description",
    "diagonal_joint",
]


class JointPovm:
    """POVM whose outcomes are all pairs ``(w1, w2)`` of two factor label sets.

    ``effects`` may be given with shape ``(n1, n2, d, d)`` or flattened in
    row-major order as ``(n1 * n2, d, d)``.
    """

    def __init__(self, effects, factors, values=None, tol=DEFAULT_TOL):
        if len(factors) != 2:
            raise ValidationError("a joint POVM needs exactly two factor label lists")
        E = np.asarray(effects, dtype=complex)
        n1, n2 = len(factors[0]), len(factors[1])
        if E.ndim == 4:
            if E.shape[:2] != (n1, n2):
                raise ValidationError(f"effects grid {E.shape[:2]} does not match factors ({n1}, {n2})")
            E = E.reshape(n1 * n2, *E.shape[2:])
        if E.ndim != 3 or E.shape[0] != n1 * n2:
            raise ValidationError(f"expected {n1 * n2} effects for factors of sizes {n1} and {n2}")
        f1 = check_labels(factors[0], n1, "factor 1")
        f2 = check_labels(factors[1], n2, "factor 2")
        labels = [f"{a}|{b}" for a, b in product(f1, f2)]
        self.povm = Povm(E, labels, None, tol)
        self.factors = (f1, f2)
        self.shape = (n1, n2)
        if values is None:
            self.values = (None, None)
        else:
            v1 = None if values[0] is None else check_real_vector(values[0], "factor 1 values", n1)
            v2 = None if values[1] is None else check_real_vector(values[1], "factor 2 values", n2)
            self.values = (v1, v2)
        self.tol = tol

    def __repr__(self):
        return f"JointPovm(dim={self.dim}, shape={self.shape})"

    @property
    def dim(self):
        return self.povm.dim

    @property
    def effects_grid(self):
        return self.povm.effects.reshape(*self.shape, self.dim, self.dim)

    def distribution_grid(self, rho):
        return apply(self.povm, rho).weights.reshape(self.shape)


def marginals(J):
    """Marginal POVMs obtained by summing the effects over the other factor."""
    G = J.effects_grid
    M1 = Povm(G.sum(axis=1), J.factors[0], J.values[0], J.tol)
    M2 = Povm(G.sum(axis=0), J.factors[1], J.values[1], J.tol)
    return M1, M2


def embed(f, side, shape):
    """Cylindrical extension of a factor function to the product, flattened row-major."""
    f = np.asarray(f, dtype=float)
    n1, n2 = shape
    if side == 1:
        if f.shape != (n1,):
            raise DimensionMismatch(f"side-1 function needs {n1} entries, got {f.shape}")
        return np.repeat(f, n2)
    if side == 2:
        if f.shape != (n2,):
            raise DimensionMismatch(f"side-2 function needs {n2} entries, got {f.shape}")
        return np.tile(f, n1)
    raise ValidationError(f"side must be 1 or 2, got {side!r}")


def projection_channel(J, side):
    """Marginal projection as a :class:`StochasticChannel` from the product outcomes."""
    n1, n2 = J.shape
    K = np.zeros((J.shape[side - 1], n1 * n2))
    for k, (i, j) in enumerate(product(range(n1), range(n2))):
        K[i if side == 1 else j, k] = 1.0
    return StochasticChannel(K, J.povm.outcomes, J.factors[side - 1], J.tol)


@dataclass(frozen=True)
class JointDescriptionCertificate:
    """Outcome of a local joint-description check over one state.

    ``residuals`` holds, per measurement, the largest normalized deviation
    of the pullback factorization (``pullback``), of the pushforward
    factorization (``pushforward``) and of the outcome law
    (``distribution``).  ``global_residual`` compares effects directly and
    certifies the factorization over every state when it vanishes.
    """

    holds: bool
    pullback_holds: bool
    pushforward_holds: bool
    residuals: dict
    global_residual: float
    mediator: JointPovm = field(repr=False)
    channels: tuple = field(repr=False)

    def to_dict(self):
        return {"holds": self.holds, "pullback_holds": self.pullback_holds,
                "pushforward_holds": self.pushforward_holds,
                "residuals": self.residuals, "global_residual": self.global_residual}


def _factorization_residuals(Mi, Ki, jctx, rho):
    """Residuals of ``Mi* = J* o Ki*`` and ``Mi_* = Ki_* o J_*`` over ``rho``."""
    tol = jctx.tol
    pm = apply(Mi, rho)
    pk = classical_apply(Ki, jctx.dist)
    dist_res = float(np.abs(pm.weights - pk.weights).max())
    supp = pm.support
    # Mi'(1_w) against J'(Ki' 1_w), all supported w at once
    diff = Mi.effects[supp] - np.einsum("vw,wij->vij", Ki.kernel[supp], jctx.M.effects)
    norms = np.linalg.norm(diff @ rho.sqrt, axis=(1, 2))
    pb_res = float((norms / np.sqrt(pm.weights[supp])).max()) if norms.size else 0.0
    # pushforward side on the orthonormal quantum basis
    q = jctx.quantum_space
    B = np.array(q.basis) if q.rank else np.zeros((0, rho.dim, rho.dim))
    num_m = _trace_products(Mi.effects, B, rho.matrix)
    num_j = _trace_products(jctx.M.effects, B, rho.matrix)
    # K_* J_* B evaluated on the support of K J rho; compare in the Mi rho norm
    pf_res = 0.0
    if supp.any():
        lhs = num_m[supp] / pm.weights[supp][:, None]
        rhs = (Ki.kernel @ num_j)[supp] / np.clip(pk.weights[supp], tol.prob_tol, None)[:, None]
        diff = (lhs - rhs) * np.sqrt(pm.weights[supp])[:, None]
        pf_res = float(np.linalg.norm(diff, axis=0).max()) if diff.size else 0.0
    return {"distribution": dist_res, "pullback": float(pb_res), "pushforward": pf_res}


def is_local_joint_description(Ms, J, rho, channels):
    """Certificate that each ``Ms[i]`` factors through the mediator ``J`` and ``channels[i]``.

    ``J`` may be a :class:`JointPovm` or a plain :class:`Povm`; the channels
    are arbitrary stochastic maps out of the mediator's outcomes.
    """
    povm = J.povm if isinstance(J, JointPovm) else J
    jctx = LocalizedMeasurement(povm, rho)
    tol = jctx.tol.eq_tol
    residuals = {}
    for i, (Mi, Ki) in enumerate(zip(Ms, channels), start=1):
        if Ki.kernel.shape != (len(Mi), len(povm)):
            raise DimensionMismatch(
                f"channel {i} has shape {Ki.kernel.shape}, expected ({len(Mi)}, {len(povm)})")
        if Mi.dim != povm.dim:
            raise DimensionMismatch(f"measurement {i} has dimension {Mi.dim}, mediator {povm.dim}")
        residuals[f"M{i}"] = _factorization_residuals(Mi, Ki, jctx, rho)
    dist_ok = all(r["distribution"] <= tol for r in residuals.values())
    pb_ok = dist_ok and all(r["pullback"] <= tol for r in residuals.values())
    pf_ok = dist_ok and all(r["pushforward"] <= tol for r in residuals.values())
    glob = 0.0
    for Mi, Ki in zip(Ms, channels):
        composed = np.einsum("vw,wij->vij", Ki.kernel, povm.effects)
        glob = max(glob, float(np.abs(composed - Mi.effects).max()))
    return JointDescriptionCertificate(pb_ok, pb_ok, pf_ok, residuals, glob, J, tuple(channels))


def is_local_joint_measurement(M, N, J, rho):
    """Certificate that ``M`` and ``N`` admit the local joint measurement ``J`` over ``rho``."""
    if not isinstance(J, JointPovm):
        raise ValidationError("is_local_joint_measurement needs a JointPovm mediator")
    if len(M) != J.shape[0] or len(N) != J.shape[1]:
        raise DimensionMismatch(
            f"factor sizes {J.shape} do not match measurements with {len(M)} and {len(N)} outcomes")
    return is_local_joint_description((M, N), J, rho,
                                      (projection_channel(J, 1), projection_channel(J, 2)))


def diagonal_joint(M):
    """Joint measurement of ``M`` with itself, supported on the diagonal."""
    n = len(M)
    E = np.zeros((n, n, M.dim, M.dim), dtype=complex)
    for k in range(n):
        E[k, k] = M.effects[k]
    return JointPovm(E, (M.outcomes, M.outcomes), (M.values, M.values), M.tol)
