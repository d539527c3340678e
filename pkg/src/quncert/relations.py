"""Uncertainty relations for errors, representatives and standard deviations.

Every check returns a :class:`RelationReport` (or a :class:`ChainReport`
for a chain of inequalities) carrying the left-hand side, the bound, the
named bound components and a verdict.  A relation "holds" when
``lhs - bound >= -ineq_tol``; it is "inapplicable" when one of its
preconditions (representability, joint measurability, outcome values)
fails, in which case ``diagnostics["reason"]`` says which.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import commutator_term, covariance, quantum_inner, std_dev
from .errors import ConstraintViolated, LocalizedChannel, LocalizedMeasurement
from .joint import is_local_joint_measurement, marginals

__all__ = [
    "BoundComponents",
    "RelationReport",
    "ChainReport",
    "NogoReport",
    "relation_error",
    "relation_error_repr",
    "relation_representatives",
    "relation_joint_error",
    "relation_joint_repr",
    "relation_gauge",
    "relation_representatives_joint",
    "classical_relations",
    "schrodinger_and_kr",
    "ozawa_error",
    "ozawa_chain",
    "akg_chains",
    "nogo_check",
]

HOLDS, VIOLATED, INAPPLICABLE = "holds", "violated", "inapplicable"


@dataclass(frozen=True)
class BoundComponents:
    R: float = None
    I: float = None
    R_tilde: float = None
    I0: float = None
    R0: float = None

    def to_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class RelationReport:
    relation: str
    lhs: float
    bound: float
    components: BoundComponents
    verdict: str
    slack: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.verdict == HOLDS

    def to_dict(self):
        return {"relation": self.relation, "lhs": self.lhs, "bound": self.bound,
                "slack": self.slack, "verdict": self.verdict,
                "components": self.components.to_dict(), "diagnostics": _plain(self.diagnostics)}


@dataclass(frozen=True)
class ChainReport:
    """A chain ``v0 >= v1 >= ...`` checked link by link."""

    name: str
    values: list
    links: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self):
        verdicts = {link.verdict for link in self.links}
        if VIOLATED in verdicts:
            return VIOLATED
        if not verdicts or verdicts == {INAPPLICABLE}:
            return INAPPLICABLE
        return HOLDS

    def to_dict(self):
        return {"chain": self.name, "values": [float(v) for v in self.values], "verdict": self.verdict,
                "links": [link.to_dict() for link in self.links],
                "diagnostics": _plain(self.diagnostics)}


@dataclass(frozen=True)
class NogoReport:
    applicable: bool
    commutator_margin: float
    n_candidates: int
    n_certified: int
    min_max_error: float
    threshold: float
    errorless_candidates: list

    @property
    def verdict(self):
        if not self.applicable:
            return INAPPLICABLE
        return VIOLATED if self.errorless_candidates else HOLDS

    def to_dict(self):
        return {"relation": "nogo", "verdict": self.verdict, "applicable": self.applicable,
                "commutator_margin": self.commutator_margin, "n_candidates": self.n_candidates,
                "n_certified": self.n_certified, "min_max_error": self.min_max_error,
                "threshold": self.threshold, "errorless_candidates": list(self.errorless_candidates)}


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, np.bool_):
            v = bool(v)
        elif isinstance(v, dict):
            v = _plain(v)
        out[k] = v
    return out


def _report(relation, lhs, bound, components, tol, **diagnostics):
    slack = float(lhs - bound)
    verdict = HOLDS if slack >= -tol.ineq_tol else VIOLATED
    return RelationReport(relation, float(lhs), float(bound), components, verdict, slack, diagnostics)


def _inapplicable(relation, reason, **diagnostics):
    return RelationReport(relation, float("nan"), float("nan"), BoundComponents(), INAPPLICABLE,
                          float("nan"), {"reason": reason, **diagnostics})


def _ctx(M, rho):
    if isinstance(M, LocalizedMeasurement):
        return M
    return LocalizedMeasurement(M, rho)


def relation_error(A, B, M, rho):
    """``error(A) error(B) >= sqrt(R^2 + I^2)`` for one measurement.

    ``diagnostics["simplified_bound"]`` is ``|I|`` alone.
    """
    ctx = _ctx(M, rho)
    tol = ctx.tol
    fA, fB = ctx.pushforward(A), ctx.pushforward(B)
    lhs = ctx.gauge(A, fA) * ctx.gauge(B, fB)
    R = quantum_inner(A, B, rho) - ctx.inner(fA, fB)
    I = (commutator_term(A, B, rho) - commutator_term(ctx.pullback(fA), B, rho)
         - commutator_term(A, ctx.pullback(fB), rho))
    return _report("relation_error", lhs, np.hypot(R, I), BoundComponents(R=R, I=I), tol,
                   simplified_bound=abs(I), simplified_slack=lhs - abs(I))


def _representatives(ctxs, obs, relation):
    reps = []
    for ctx, X, name in zip(ctxs, obs, ("A", "B")):
        ok, res = ctx.is_representable(X)
        if not ok:
            return None, _inapplicable(relation, f"{name} is not locally representable",
                                       residual=res)
        reps.append(ctx.representative(X))
    return reps, None


def relation_error_repr(A, B, M, rho):
    """``error_repr(A) error_repr(B) >= sqrt(R_tilde^2 + I0^2)``."""
    ctx = _ctx(M, rho)
    reps, bad = _representatives((ctx, ctx), (A, B), "relation_error_repr")
    if bad:
        return bad
    fA, fB = reps
    lhs = ctx.gauge(A, fA) * ctx.gauge(B, fB)
    Rt = quantum_inner(A, B, rho) - ctx.inner(fA, fB)
    I0 = commutator_term(A, B, rho)
    return _report("relation_error_repr", lhs, np.hypot(Rt, I0), BoundComponents(R_tilde=Rt, I0=I0),
                   ctx.tol, naive_bound=abs(I0))


def _check_representative(ctx, X, f, name):
    ok, res = ctx.is_representative(X, f)
    if not ok:
        raise ConstraintViolated(f"{name} is not a local representative (relative residual {res:.3g})")


def _representative_bound(Rt, R0, I0):
    return np.sqrt((abs(Rt) + abs(R0)) ** 2 + 4 * I0 ** 2)


def relation_representatives(A, B, f, g, M, rho):
    """``std(f) std(g) >= sqrt((|R_tilde| + |R0|)^2 + 4 I0^2)`` for representatives f, g.

    Raises
    ------
    ConstraintViolated
        If ``f`` or ``g`` does not represent ``A`` or ``B``.
    """
    ctx = _ctx(M, rho)
    reps, bad = _representatives((ctx, ctx), (A, B), "relation_representatives")
    if bad:
        return bad
    _check_representative(ctx, A, f, "f")
    _check_representative(ctx, B, g, "g")
    fA, fB = reps
    lhs = ctx.std(f) * ctx.std(g)
    Rt = quantum_inner(A, B, rho) - ctx.inner(fA, fB)
    R0 = covariance(A, B, rho)
    I0 = commutator_term(A, B, rho)
    opt = ctx.std(fA) * ctx.std(fB)
    bound = _representative_bound(Rt, R0, I0)
    return _report("relation_representatives", lhs, bound, BoundComponents(R_tilde=Rt, I0=I0, R0=R0),
                   ctx.tol, optimal_lhs=opt, optimal_slack=opt - bound)


class _JointSetup:
    def __init__(self, M, N, J, rho):
        self.cert = is_local_joint_measurement(M, N, J, rho)
        self.ctxM = LocalizedMeasurement(M, rho)
        self.ctxN = LocalizedMeasurement(N, rho)
        self.P = J.distribution_grid(rho)
        self.rho = rho
        self.tol = self.ctxM.tol

    def cross(self, f, g):
        """``<pi_1* f, pi_2* g>`` over the joint outcome law."""
        return float(np.asarray(f) @ self.P @ np.asarray(g))


def _joint_setup(M, N, J, rho):
    """Shared setup per ``(M, N, J, rho)``, cached on ``J`` by object identity."""
    cache = J.__dict__.setdefault("_setup_cache", [])
    for key, js in cache:
        if key[0] is M and key[1] is N and key[2] is rho:
            return js
    js = _JointSetup(M, N, J, rho)
    cache.append(((M, N, rho), js))
    del cache[:-4]
    return js


def _gauge_terms(A, B, f, g, js):
    """LHS and the ``R``, ``I`` contributors of the gauge Cauchy-Schwarz relation."""
    rho, cM, cN = js.rho, js.ctxM, js.ctxN
    lhs = cM.gauge(A, f) * cN.gauge(B, g)
    R = (quantum_inner(A, B, rho) - cN.inner(cN.pushforward(A), g)
         - cM.inner(f, cM.pushforward(B)) + js.cross(f, g))
    I = (commutator_term(A, B, rho) - commutator_term(cM.pullback(f), B, rho)
         - commutator_term(A, cN.pullback(g), rho))
    return lhs, R, I


def _joint_or_inapplicable(M, N, J, rho, relation):
    js = _joint_setup(M, N, J, rho)
    if not js.cert.holds:
        return js, _inapplicable(relation, "no local joint measurement", certificate=js.cert.to_dict())
    return js, None


def relation_gauge(A, B, f, g, M, N, J, rho):
    """``gauge(A, f; M) gauge(B, g; N) >= sqrt(R^2 + I^2)`` under a local joint measurement."""
    js, bad = _joint_or_inapplicable(M, N, J, rho, "relation_gauge")
    if bad:
        return bad
    lhs, R, I = _gauge_terms(A, B, np.asarray(f, float), np.asarray(g, float), js)
    return _report("relation_gauge", lhs, np.hypot(R, I), BoundComponents(R=R, I=I), js.tol)


def relation_joint_error(A, B, M, N, J, rho):
    """``error(A; M) error(B; N) >= sqrt(R^2 + I^2)`` with the joint cross term."""
    js, bad = _joint_or_inapplicable(M, N, J, rho, "relation_joint_error")
    if bad:
        return bad
    f, g = js.ctxM.pushforward(A), js.ctxN.pushforward(B)
    lhs, R, I = _gauge_terms(A, B, f, g, js)
    return _report("relation_joint_error", lhs, np.hypot(R, I), BoundComponents(R=R, I=I), js.tol,
                   simplified_bound=abs(I))


def relation_joint_repr(A, B, M, N, J, rho):
    """``error_repr(A; M) error_repr(B; N) >= sqrt(R_tilde^2 + I0^2)``.

    The bound is evaluated through the gauge terms at the optimal
    representatives, where ``R = -R_tilde`` and ``I = -I0``; the reported
    components are the direct expressions.
    """
    relation = "relation_joint_repr"
    js, bad = _joint_or_inapplicable(M, N, J, rho, relation)
    if bad:
        return bad
    reps, bad = _representatives((js.ctxM, js.ctxN), (A, B), relation)
    if bad:
        return bad
    fA, fB = reps
    lhs, R, I = _gauge_terms(A, B, fA, fB, js)
    Rt = quantum_inner(A, B, rho) - js.cross(fA, fB)
    I0 = commutator_term(A, B, rho)
    return _report(relation, lhs, np.hypot(R, I), BoundComponents(R_tilde=Rt, I0=I0), js.tol,
                   naive_bound=abs(I0))


def relation_representatives_joint(A, B, f, g, M, N, J, rho):
    """``std_M(f) std_N(g) >= sqrt((|R_tilde| + |R0|)^2 + 4 I0^2)`` under a local joint measurement."""
    relation = "relation_representatives_joint"
    js, bad = _joint_or_inapplicable(M, N, J, rho, relation)
    if bad:
        return bad
    reps, bad = _representatives((js.ctxM, js.ctxN), (A, B), relation)
    if bad:
        return bad
    _check_representative(js.ctxM, A, f, "f")
    _check_representative(js.ctxN, B, g, "g")
    fA, fB = reps
    lhs = js.ctxM.std(f) * js.ctxN.std(g)
    Rt = quantum_inner(A, B, rho) - js.cross(fA, fB)
    R0 = covariance(A, B, rho)
    I0 = commutator_term(A, B, rho)
    bound = _representative_bound(Rt, R0, I0)
    opt = js.ctxM.std(fA) * js.ctxN.std(fB)
    return _report(relation, lhs, bound, BoundComponents(R_tilde=Rt, I0=I0, R0=R0), js.tol,
                   optimal_lhs=opt, optimal_slack=opt - bound)


def classical_relations(a, b, K, p, f=None, g=None):
    """The three classical relations for a channel ``K`` over the input law ``p``.

    Returns reports for ``error(a) error(b) >= |R|``, ``error_repr(a)
    error_repr(b) >= |R_tilde|`` and ``std(f) std(g) >= |R_tilde| + |R0|``.
    ``f`` and ``g`` default to the optimal representatives.
    """
    ctx = p if isinstance(p, LocalizedChannel) else LocalizedChannel(K, p)
    p = ctx.p
    tol = ctx.tol
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = float(np.dot(a * b, p.weights))
    fa, fb = ctx.pushforward(a), ctx.pushforward(b)
    R = ab - ctx.inner(fa, fb)
    out = [_report("classical_error", ctx.gauge(a, fa) * ctx.gauge(b, fb), abs(R),
                   BoundComponents(R=R), tol)]
    reps, bad = _representatives((ctx, ctx), (a, b), "classical_error_repr")
    if bad:
        out.append(bad)
        out.append(_inapplicable("classical_representatives", bad.diagnostics["reason"]))
        return out
    ra, rb = reps
    Rt = ab - ctx.inner(ra, rb)
    out.append(_report("classical_error_repr", ctx.gauge(a, ra) * ctx.gauge(b, rb), abs(Rt),
                       BoundComponents(R_tilde=Rt), tol))
    f = ra if f is None else np.asarray(f, dtype=float)
    g = rb if g is None else np.asarray(g, dtype=float)
    _check_representative(ctx, a, f, "f")
    _check_representative(ctx, b, g, "g")
    R0 = ab - float(np.dot(a, p.weights)) * float(np.dot(b, p.weights))
    out.append(_report("classical_representatives", ctx.std(f) * ctx.std(g), abs(Rt) + abs(R0),
                       BoundComponents(R_tilde=Rt, R0=R0), tol))
    return out


def _link(name, upper, lower, tol, components=None, **diag):
    return _report(name, upper, lower, components or BoundComponents(), tol, **diag)


def schrodinger_and_kr(A, B, rho):
    """Chain ``std(A) std(B) >= sqrt(R0^2 + I0^2) >= |I0|``.

    The last value is the commutator bound ``|<[A, B]>| / 2``.
    """
    tol = rho.tol
    lhs = std_dev(A, rho) * std_dev(B, rho)
    R0 = covariance(A, B, rho)
    I0 = commutator_term(A, B, rho)
    comp = BoundComponents(R0=R0, I0=I0)
    sch = np.hypot(R0, I0)
    links = [_link("schrodinger", lhs, sch, tol, comp),
             _link("kennard_robertson", lhs, abs(I0), tol, comp)]
    return ChainReport("schrodinger_kr", [lhs, sch, abs(I0)], links)


def ozawa_error(A, M, rho, values=None):
    """Value-based (noise-operator) error ``sqrt(<sum_x (x - A) E_x (x - A)>)``.

    Expands to ``<M'[x^2]> - <{M'[x], A}> + <A^2>``; the sum-of-squares
    form is used for accuracy.
    """
    values = M.values if values is None else np.asarray(values, dtype=float)
    if values is None:
        raise ValueError("the measurement carries no outcome values")
    return _ctx(M, rho).gauge(A, values)


def _chain_links(name, values, tol, comps):
    links = []
    for k in range(len(values) - 1):
        links.append(_link(f"{name}[{k}]", values[k], values[k + 1], tol, comps[k]))
    return links


def ozawa_chain(A, B, J, rho):
    """Chain from the value-based errors down to the commutator-based bound.

    ``eO(A) eO(B) >= e(A; M1) e(B; M2) >= sqrt(R^2 + I^2) >= |I|
    >= |<[A,B]>|/2 - eO(A) std(B) - std(A) eO(B)``.
    """
    if J.values[0] is None or J.values[1] is None:
        return ChainReport("ozawa", [], [_inapplicable("ozawa", "outcome values missing")])
    M1, M2 = marginals(J)
    js = _joint_setup(M1, M2, J, rho)
    tol = js.tol
    eOA = js.ctxM.gauge(A, M1.values)
    eOB = js.ctxN.gauge(B, M2.values)
    eA = js.ctxM.gauge(A, js.ctxM.pushforward(A))
    eB = js.ctxN.gauge(B, js.ctxN.pushforward(B))
    rel = relation_joint_error(A, B, M1, M2, J, rho)
    if rel.verdict == INAPPLICABLE:
        return ChainReport("ozawa", [], [rel])
    R, I = rel.components.R, rel.components.I
    I0 = commutator_term(A, B, rho)
    tail = abs(I0) - eOA * std_dev(B, rho) - std_dev(A, rho) * eOB
    values = [eOA * eOB, eA * eB, float(np.hypot(R, I)), abs(I), tail]
    comps = [BoundComponents(), BoundComponents(R=R, I=I), BoundComponents(R=R, I=I),
             BoundComponents(I=I, I0=I0)]
    return ChainReport("ozawa", values, _chain_links("ozawa", values, tol, comps),
                       {"ozawa_error_A": eOA, "ozawa_error_B": eOB, "error_A": eA, "error_B": eB})


def akg_chains(A, B, J, rho):
    """Error chain and standard-deviation chain for unbiased joint measurements.

    Returns ``(errors_chain, std_chain)``.  The first link of each chain
    compares outcome values with the optimal representatives and is
    inapplicable unless the values locally represent ``A`` and ``B``.
    """
    if J.values[0] is None or J.values[1] is None:
        bad = _inapplicable("akg", "outcome values missing")
        return ChainReport("akg_errors", [], [bad]), ChainReport("akg_std", [], [bad])
    M1, M2 = marginals(J)
    rel = relation_joint_repr(A, B, M1, M2, J, rho)
    if rel.verdict == INAPPLICABLE:
        return ChainReport("akg_errors", [], [rel]), ChainReport("akg_std", [], [rel])
    js = _joint_setup(M1, M2, J, rho)
    tol = js.tol
    x, y = M1.values, M2.values
    fA, fB = js.ctxM.representative(A), js.ctxN.representative(B)
    Rt, I0 = rel.components.R_tilde, rel.components.I0
    R0 = covariance(A, B, rho)
    unbiased = js.ctxM.is_representative(A, x)[0] and js.ctxN.is_representative(B, y)[0]

    e_values = [js.ctxM.gauge(A, x) * js.ctxN.gauge(B, y), rel.lhs, rel.bound, abs(I0)]
    comps = [BoundComponents(), BoundComponents(R_tilde=Rt, I0=I0), BoundComponents(I0=I0)]
    e_links = _chain_links("akg_errors", e_values, tol, comps)

    s_values = [js.ctxM.std(x) * js.ctxN.std(y), js.ctxM.std(fA) * js.ctxN.std(fB),
                float(_representative_bound(Rt, R0, I0)), 2 * abs(I0)]
    comps = [BoundComponents(), BoundComponents(R_tilde=Rt, R0=R0, I0=I0), BoundComponents(I0=I0)]
    s_links = _chain_links("akg_std", s_values, tol, comps)
    if not unbiased:
        reason = "outcome values do not locally represent the observables"
        e_links[0] = _inapplicable(e_links[0].relation, reason)
        s_links[0] = _inapplicable(s_links[0].relation, reason)
    diag = {"unbiased": bool(unbiased)}
    return (ChainReport("akg_errors", e_values, e_links, diag),
            ChainReport("akg_std", s_values, s_links, diag))


def nogo_check(A, B, rho, candidates, threshold=None):
    """Probe that no certified joint measurement measures both ``A`` and ``B`` errorlessly.

    Parameters
    ----------
    candidates : iterable of (Povm, Povm, JointPovm)
    threshold : float, optional
        Errors at or below this count as errorless; defaults to ``eq_tol``.
    """
    tol = rho.tol
    threshold = tol.eq_tol if threshold is None else threshold
    I0 = commutator_term(A, B, rho)
    if abs(I0) <= tol.eq_tol:
        return NogoReport(False, abs(I0), 0, 0, float("nan"), threshold, [])
    n = certified = 0
    worst = float("inf")
    bad = []
    for k, (M, N, J) in enumerate(candidates):
        n += 1
        if not is_local_joint_measurement(M, N, J, rho).holds:
            continue
        certified += 1
        cM, cN = LocalizedMeasurement(M, rho), LocalizedMeasurement(N, rho)
        m = max(cM.gauge(A, cM.pushforward(A)), cN.gauge(B, cN.pushforward(B)))
        worst = min(worst, m)
        if m <= threshold:
            bad.append(k)
    return NogoReport(True, abs(I0), n, certified, worst if certified else float("nan"), threshold, bad)
