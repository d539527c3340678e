"""Gauge, error, error for local representability, and errorless tests.

The heavy lifting lives on :class:`LocalizedMeasurement` (quantum) and
:class:`LocalizedChannel` (classical), which cache the outcome law, the
localized charts and the partial inverses for one measurement over one
state.  The module-level functions are thin wrappers for one-off calls.

Squared gauges are evaluated as sums of squares,

    gauge(A, f; M)^2 = sum_w || E_w^{1/2} (f(w) - A) rho^{1/2} ||_F^2,

rather than as differences of norms, so errorless cases come out at
machine precision instead of at ``sqrt(machine eps)``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import DimensionMismatch
from .core import (
    DensityState,
    ProbDist,
    build_localized_space,
    classical_norm,
    quantum_norm,
    std_dev,
)
from .measurement import (
    Povm,
    StochasticChannel,
    adjoint_apply,
    apply,
    classical_apply,
    classical_pushforward,
    pushforward,
)
from .partial_inverse import NotInRange, build_map, partial_inverse

__all__ = [
    "NotRepresentable",
    "ConstraintViolated",
    "ErrorValue",
    "ErrorlessVerdict",
    "TwoErrorsReport",
    "DecompositionReport",
    "LocalizedMeasurement",
    "LocalizedChannel",
    "localize",
    "gauge",
    "error",
    "is_representable",
    "error_repr",
    "two_errors_identity",
    "decompositions",
    "errorless_conditions",
]

ILL_CONDITIONED_FACTOR = 100.0


class NotRepresentable(NotInRange):
    """The observable is not in the image of the pullback over the state."""


class ConstraintViolated(ValueError):
    """A classical observable was required to be a local representative and is not."""


@dataclass(frozen=True)
class ErrorValue:
    """A measurement error together with its diagnostics.

    ``value`` is ``inf`` exactly when the observable is not locally
    representable (for the representability error).  ``ill_conditioned``
    marks range residuals in ``(eq_tol, 100 * eq_tol]``: such values are
    finite least-squares estimates, not certified errors.
    """

    value: float
    finite: bool = True
    residual: float = 0.0
    condition_number: float = 1.0
    ill_conditioned: bool = False

    def __float__(self):
        return self.value

    def to_dict(self):
        return {"value": self.value if self.finite else "inf", "finite": self.finite,
                "residual": self.residual, "condition_number": self.condition_number,
                "ill_conditioned": self.ill_conditioned}


@dataclass(frozen=True)
class ErrorlessVerdict:
    """The five errorless conditions with the residual behind each."""

    a: bool
    b: bool
    c: bool
    d: bool
    e: bool
    residuals: dict = field(default_factory=dict)

    @property
    def flags(self):
        return (self.a, self.b, self.c, self.d, self.e)

    @property
    def consistent(self):
        return all(self.flags) or not any(self.flags)

    def to_dict(self):
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d, "e": self.e,
                "consistent": self.consistent, "residuals": dict(self.residuals)}


@dataclass(frozen=True)
class TwoErrorsReport:
    error_sq: float
    error_repr_sq: float
    gap_sq: float

    @property
    def residual(self):
        return abs(self.error_repr_sq - self.error_sq - self.gap_sq)

    def to_dict(self):
        return {"error_sq": self.error_sq, "error_repr_sq": self.error_repr_sq,
                "gap_sq": self.gap_sq, "residual": self.residual}


@dataclass(frozen=True)
class DecompositionReport:
    """Residuals of the gauge and variance decompositions for one ``f``.

    Keys of ``residuals``: ``gauge`` always; ``gauge_repr``, ``variance``,
    ``optimal_variance`` when ``f`` is a local representative.
    ``variance_bound_slack`` is ``Var(f) - Var(A) - error_repr^2``.
    """

    gauge: float
    residuals: dict
    representative: bool
    variance_bound_slack: float = None

    @property
    def max_residual(self):
        return max(self.residuals.values())

    def to_dict(self):
        return {"gauge": self.gauge, "residuals": dict(self.residuals),
                "representative": self.representative,
                "variance_bound_slack": self.variance_bound_slack}


def _scale(x):
    return max(1.0, x)


class LocalizedMeasurement:
    """A POVM localized at a state, with every derived object cached."""

    def __init__(self, M, rho, tol=None):
        if not isinstance(M, Povm) or not isinstance(rho, DensityState):
            raise TypeError("LocalizedMeasurement needs a Povm and a DensityState")
        if M.dim != rho.dim:
            raise DimensionMismatch(f"POVM on dimension {M.dim} with a {rho.dim}-dimensional state")
        self.M = M
        self.rho = rho
        self.tol = tol or rho.tol

    @cached_property
    def dist(self):
        return apply(self.M, self.rho)

    @cached_property
    def quantum_space(self):
        return build_localized_space(self.rho, self.tol)

    @cached_property
    def classical_space(self):
        return build_localized_space(self.dist, self.tol)

    @cached_property
    def pullback_map(self):
        return build_map("pullback", self.M, self.rho, (self.classical_space, self.quantum_space))

    @cached_property
    def pushforward_map(self):
        return build_map("pushforward", self.M, self.rho, (self.quantum_space, self.classical_space))

    @cached_property
    def pullback_inverse(self):
        return partial_inverse(self.pullback_map)

    @cached_property
    def pushforward_inverse(self):
        return partial_inverse(self.pushforward_map)

    def _obs(self, A):
        A = np.asarray(A)
        if A.shape != (self.rho.dim, self.rho.dim):
            raise DimensionMismatch(f"observable of shape {A.shape} on a {self.rho.dim}-dimensional state")
        return A

    def pushforward(self, A):
        return np.asarray(pushforward(self.M, self.rho, self._obs(A), self.dist).values)

    def pullback(self, f):
        return adjoint_apply(self.M, f)

    def gauge_sq(self, A, f):
        A = self._obs(A)
        f = np.asarray(f, dtype=float)
        if f.shape != (len(self.M),):
            raise DimensionMismatch(f"function with {f.shape} entries for {len(self.M)} outcomes")
        S = self.M.sqrt_effects
        Y = f[:, None, None] * S - S @ A
        Z = Y @ self.rho.sqrt
        return float(np.sum(Z.real ** 2 + Z.imag ** 2))

    def gauge(self, A, f):
        return float(np.sqrt(self.gauge_sq(A, f)))

    def excess_sq(self, f):
        """``||f||^2 - ||M* f||^2`` as a sum of squares."""
        f = np.asarray(f, dtype=float)
        return self.gauge_sq(self.pullback(f), f)

    def error(self, A):
        return ErrorValue(self.gauge(A, self.pushforward(A)))

    def representation(self, A):
        """Least-squares representative of ``A`` and the relative range residual."""
        y = self.quantum_space.coords(self._obs(A))
        pinv = self.pullback_inverse
        res = pinv.range_residual(y)
        f = self.classical_space.element(pinv.apply_coords(y, check=False))
        return f, res

    def is_representable(self, A):
        _, res = self.representation(A)
        return res <= self.tol.eq_tol, res

    def representative(self, A):
        """Partial inverse of the pullback at ``A`` (minimal-norm representative)."""
        f, res = self.representation(A)
        if res > self.tol.eq_tol:
            raise NotRepresentable(res)
        return f

    def error_repr(self, A):
        f, res = self.representation(A)
        cond = self.pullback_inverse.condition_number
        if res > ILL_CONDITIONED_FACTOR * self.tol.eq_tol:
            return ErrorValue(float("inf"), False, res, cond)
        return ErrorValue(self.gauge(A, f), True, res, cond, ill_conditioned=res > self.tol.eq_tol)

    def is_representative(self, A, f):
        """Whether ``M* f`` equals ``A`` over the state, and the relative residual."""
        A = self._obs(A)
        res = quantum_norm(A - self.pullback(f), self.rho) / _scale(quantum_norm(A, self.rho))
        return res <= self.tol.eq_tol, res

    def norm(self, f):
        return classical_norm(f, self.dist)

    def std(self, f):
        return std_dev(f, self.dist)

    def inner(self, f, g):
        return float(np.dot(np.asarray(f) * np.asarray(g), self.dist.weights))


class LocalizedChannel:
    """Classical counterpart of :class:`LocalizedMeasurement`."""

    def __init__(self, K, p, tol=None):
        if not isinstance(K, StochasticChannel) or not isinstance(p, ProbDist):
            raise TypeError("LocalizedChannel needs a StochasticChannel and a ProbDist")
        if K.kernel.shape[1] != len(p):
            raise DimensionMismatch(f"channel expects {K.kernel.shape[1]} inputs, got {len(p)}")
        self.K = K
        self.p = p
        self.tol = tol or p.tol

    @cached_property
    def dist(self):
        return classical_apply(self.K, self.p)

    @cached_property
    def input_space(self):
        return build_localized_space(self.p, self.tol)

    @cached_property
    def output_space(self):
        return build_localized_space(self.dist, self.tol)

    @cached_property
    def pullback_map(self):
        return build_map("classical-pullback", self.K, self.p, (self.output_space, self.input_space))

    @cached_property
    def pushforward_map(self):
        return build_map("classical-pushforward", self.K, self.p, (self.input_space, self.output_space))

    @cached_property
    def pullback_inverse(self):
        return partial_inverse(self.pullback_map)

    def pushforward(self, a):
        return np.asarray(classical_pushforward(self.K, self.p, a, self.dist).values)

    def pullback(self, g):
        return self.K.kernel.T @ np.asarray(g, dtype=float)

    def gauge_sq(self, a, g):
        a = np.asarray(a, dtype=float)
        g = np.asarray(g, dtype=float)
        dev = g[:, None] - a[None, :]
        return float(np.sum(self.K.kernel * dev ** 2 * self.p.weights[None, :]))

    def gauge(self, a, g):
        return float(np.sqrt(self.gauge_sq(a, g)))

    def error(self, a):
        return ErrorValue(self.gauge(a, self.pushforward(a)))

    def representation(self, a):
        y = self.input_space.coords(np.asarray(a, dtype=float))
        pinv = self.pullback_inverse
        res = pinv.range_residual(y)
        return self.output_space.element(pinv.apply_coords(y, check=False)), res

    def is_representable(self, a):
        _, res = self.representation(a)
        return res <= self.tol.eq_tol, res

    def representative(self, a):
        g, res = self.representation(a)
        if res > self.tol.eq_tol:
            raise NotRepresentable(res)
        return g

    def error_repr(self, a):
        g, res = self.representation(a)
        cond = self.pullback_inverse.condition_number
        if res > ILL_CONDITIONED_FACTOR * self.tol.eq_tol:
            return ErrorValue(float("inf"), False, res, cond)
        return ErrorValue(self.gauge(a, g), True, res, cond, ill_conditioned=res > self.tol.eq_tol)

    def is_representative(self, a, g):
        a = np.asarray(a, dtype=float)
        res = classical_norm(a - self.pullback(g), self.p) / _scale(classical_norm(a, self.p))
        return res <= self.tol.eq_tol, res

    def norm(self, g):
        return classical_norm(g, self.dist)

    def std(self, g):
        return std_dev(g, self.dist)

    def inner(self, f, g):
        return float(np.dot(np.asarray(f) * np.asarray(g), self.dist.weights))


def localize(measurement, anchor, tol=None):
    """Localize a POVM at a state or a channel at an input distribution."""
    if isinstance(measurement, StochasticChannel):
        return LocalizedChannel(measurement, anchor, tol)
    return LocalizedMeasurement(measurement, anchor, tol)


def _ctx(M, rho):
    return M if isinstance(M, (LocalizedMeasurement, LocalizedChannel)) else localize(M, rho)


def gauge(A, f, M, rho):
    """Reconstruction gauge of ``A`` by the estimator ``f`` through ``M`` over ``rho``."""
    return _ctx(M, rho).gauge(A, f)


def error(A, M, rho):
    """Error: contraction of the localized norm of ``A`` under the pushforward."""
    return _ctx(M, rho).error(A)


def is_representable(A, M, rho):
    """``(flag, residual)``: is the class of ``A`` in the range of the pullback?"""
    return _ctx(M, rho).is_representable(A)


def error_repr(A, M, rho):
    """Error for local representability (``inf`` outside the pullback's range)."""
    return _ctx(M, rho).error_repr(A)


def two_errors_identity(A, M, rho):
    """Both squared errors and the squared distance between their optimizers.

    Raises
    ------
    NotRepresentable
    """
    ctx = _ctx(M, rho)
    f_rep = ctx.representative(A)
    f_pf = ctx.pushforward(A)
    e = ctx.gauge_sq(A, f_pf)
    er = ctx.gauge_sq(A, f_rep)
    gap = ctx.norm(f_rep - f_pf) ** 2
    return TwoErrorsReport(e, er, gap)


def decompositions(A, f, M, rho, constrained=None):
    """Residuals of the gauge decompositions at the estimator ``f``.

    Parameters
    ----------
    constrained : bool or None
        ``True`` requires ``f`` to be a local representative of ``A`` and
        raises :class:`ConstraintViolated` otherwise; ``False`` skips the
        constrained identities; ``None`` includes them when applicable.
    """
    ctx = _ctx(M, rho)
    f = np.asarray(f, dtype=float)
    g2 = ctx.gauge_sq(A, f)
    f_pf = ctx.pushforward(A)
    res = {"gauge": abs(g2 - (ctx.gauge_sq(A, f_pf) + ctx.norm(f_pf - f) ** 2))}
    is_rep, rep_res = ctx.is_representative(A, f)
    if constrained and not is_rep:
        raise ConstraintViolated(f"f is not a local representative (relative residual {rep_res:.3g})")
    slack = None
    if is_rep and constrained is not False:
        f_rep = ctx.representative(A)
        er2 = ctx.gauge_sq(A, f_rep)
        sub = ctx.norm(f_rep - f) ** 2
        var_f = ctx.std(f) ** 2
        var_a = _std(A, ctx) ** 2
        res["gauge_repr"] = abs(g2 - (er2 + sub))
        res["variance"] = abs(var_f - (var_a + er2 + sub))
        res["optimal_variance"] = abs(ctx.std(f_rep) ** 2 - (var_a + er2))
        slack = var_f - var_a - er2
    return DecompositionReport(float(np.sqrt(g2)), res, bool(is_rep), slack)


def _std(A, ctx):
    anchor = ctx.rho if isinstance(ctx, LocalizedMeasurement) else ctx.p
    return std_dev(A, anchor)


def errorless_conditions(A, M, rho):
    """Evaluate the five errorless conditions, each against ``eq_tol``.

    (a) representable and error_repr = 0;  (b) representable and A equals
    the pushforward's partial inverse applied to the optimal representative;
    (c) representable and error_repr = error;  (d) A equals the pullback of
    its pushforward;  (e) error = 0.
    """
    ctx = _ctx(M, rho)
    if not isinstance(ctx, LocalizedMeasurement):
        raise TypeError("errorless_conditions is defined for quantum measurements")
    tol = ctx.tol.eq_tol
    f_pf = ctx.pushforward(A)
    eps = ctx.gauge(A, f_pf)
    d_res = quantum_norm(np.asarray(A) - ctx.pullback(f_pf), ctx.rho)
    rep, rep_res = ctx.is_representable(A)
    residuals = {"representability": rep_res, "d": d_res, "e": eps}
    a = b = c = False
    if rep:
        f_rep = ctx.representative(A)
        eps_r = ctx.gauge(A, f_rep)
        residuals["a"] = eps_r
        residuals["c"] = abs(eps_r - eps)
        a = eps_r <= tol
        c = residuals["c"] <= tol
        fc = ctx.classical_space.coords(f_rep)
        pinv = ctx.pushforward_inverse
        b_range = pinv.range_residual(fc)
        residuals["b_range"] = b_range
        if b_range <= tol:
            x = pinv.apply_coords(fc, check=False)
            residuals["b"] = float(np.linalg.norm(ctx.quantum_space.coords(A) - x))
            b = residuals["b"] <= tol
    return ErrorlessVerdict(bool(a), bool(b), bool(c), bool(d_res <= tol), bool(eps <= tol), residuals)
