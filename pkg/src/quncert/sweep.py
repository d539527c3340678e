"""Randomized sweeps: every relation, identity and oracle check on seeded instances."""

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import DEFAULT_TOL, quantum_inner
from .errors import (LocalizedChannel, LocalizedMeasurement, decompositions, errorless_conditions,
                     two_errors_identity)
from .joint import JointPovm
from .measurement import projective_measurement_of
from .oracle import (RandomSpec, minimize_gauge, partial_inverse_by_constrained_solve,
                     pushforward_by_linear_system, random_instance)
from .partial_inverse import adjoint_identity_residual
from .relations import (akg_chains, classical_relations, ozawa_chain, relation_error,
                        relation_error_repr, relation_gauge, relation_joint_error, relation_joint_repr,
                        relation_representatives, relation_representatives_joint, schrodinger_and_kr)

__all__ = ["instance_seeds", "instance_spec", "relation_reports", "identity_residuals",
           "errorless_checks", "oracle_checks", "check_instance", "run_sweep", "IDENTITY_LIMITS"]

# pass thresholds for the non-inequality checks
IDENTITY_LIMITS = {"identity": 1e-9, "oracle_value": 1e-6, "oracle_minimizer": 1e-6,
                   "oracle_pushforward": 1e-9, "oracle_partial_inverse": 1e-8}


def instance_seeds(seed, count):
    """Per-instance 64-bit seeds spawned from one master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def instance_spec(seed, dims=(2, 3, 4, 5), max_outcomes=8):
    """Draw dimension and factor sizes from ``seed`` itself, so specs are reproducible per instance."""
    rng = np.random.default_rng([seed, 1])
    dim = int(rng.choice(dims))
    n = tuple(int(k) for k in rng.integers(1, max_outcomes + 1, size=2))
    return RandomSpec(dim, n, seed)


def relation_reports(inst):
    """Every relation report (chain links flattened) for one random instance."""
    rho, M, N, J = inst.rho, inst.M, inst.N, inst.J
    ctx = LocalizedMeasurement(M, rho)
    out = [
        relation_error(inst.A, inst.B, ctx, rho),
        relation_error_repr(inst.A_rep, inst.C_rep, ctx, rho),
        relation_representatives(inst.A_rep, inst.C_rep, inst.f, inst.h, ctx, rho),
        relation_joint_error(inst.A, inst.B, M, N, J, rho),
        relation_joint_repr(inst.A_rep, inst.B_rep, M, N, J, rho),
        relation_representatives_joint(inst.A_rep, inst.B_rep, inst.f, inst.g, M, N, J, rho),
        relation_gauge(inst.A, inst.B, inst.f, inst.g, M, N, J, rho),
    ]
    out += schrodinger_and_kr(inst.A, inst.B, rho).links
    out += ozawa_chain(inst.A, inst.B, J, rho).links
    # values (f, g) represent (A_rep, B_rep) exactly, so the unbiased links apply
    unbiased = JointPovm(J.effects_grid, J.factors, (inst.f, inst.g), J.tol)
    for chain in akg_chains(inst.A_rep, inst.B_rep, unbiased, rho):
        out += chain.links
    cctx = LocalizedChannel(inst.K, inst.p)
    out += classical_relations(inst.a_rep, inst.b_rep, inst.K, cctx)
    out.append(classical_relations(inst.a, inst.b, inst.K, cctx)[0])
    return out


def _rel(x, scale):
    return float(x / max(1.0, scale))


def identity_residuals(inst):
    """Scaled residuals of the adjointness, inverse, two-errors and decomposition identities."""
    rho, M = inst.rho, inst.M
    ctx = LocalizedMeasurement(M, rho)
    p = ctx.dist.weights
    out = {}
    # <M'f>_rho = <f>_{M rho}
    mf = ctx.pullback(inst.f)
    out["adjoint"] = abs(float(np.real(np.trace(mf @ rho.matrix))) - float(inst.f @ p))
    # <M'g, A>_rho = <g, M_* A>_{M rho}
    pf = ctx.pushforward(inst.A)
    out["pushforward_char"] = max(
        _rel(abs(quantum_inner(ctx.pullback(g), inst.A, rho) - ctx.inner(g, pf)),
             ctx.norm(g) * ctx.quantum_space.norm(inst.A))
        for g in (inst.f, inst.h))
    X = ctx.pullback_map.matrix
    pinv = ctx.pullback_inverse
    Y = pinv.matrix
    nx = np.linalg.norm(X, 2) if X.size else 0.0
    ny = np.linalg.norm(Y, 2) if Y.size else 0.0
    if X.size:
        out["pinv_AXA"] = _rel(np.abs(X @ Y @ X - X).max(), nx * nx * ny)
        out["pinv_XAX"] = _rel(np.abs(Y @ X @ Y - Y).max(), ny * ny * nx)
        out["pinv_left"] = _rel(np.abs(Y @ X - pinv.coimage_projector).max(), nx * ny)
        out["pinv_right"] = _rel(np.abs(X @ Y - pinv.range_projector).max(), nx * ny)
        out["pinv_adjoint"] = _rel(adjoint_identity_residual(ctx.pullback_map), ny * ny * nx)
    te = two_errors_identity(inst.A_rep, ctx, rho)
    out["two_errors"] = _rel(te.residual, te.error_repr_sq)
    dec = decompositions(inst.A_rep, inst.f, ctx, rho, constrained=True)
    scale = ctx.norm(inst.f) ** 2 + ctx.quantum_space.norm(inst.A_rep) ** 2
    out["decomposition_gauge_repr"] = _rel(dec.residuals["gauge_repr"], scale)
    out["decomposition_variance"] = _rel(dec.residuals["variance"], scale)
    out["decomposition_optimal_variance"] = _rel(dec.residuals["optimal_variance"], scale)
    dec = decompositions(inst.A, inst.f, ctx, rho, constrained=False)
    out["decomposition_gauge"] = _rel(dec.residuals["gauge"],
                                      ctx.norm(inst.f) ** 2 + ctx.quantum_space.norm(inst.A) ** 2)
    cctx = LocalizedChannel(inst.K, inst.p)
    cte = two_errors_identity(inst.a_rep, cctx, inst.p)
    out["classical_two_errors"] = _rel(cte.residual, cte.error_repr_sq)
    return out


def errorless_checks(inst):
    """Consistency of the five errorless conditions on a generic and a projective measurement."""
    rho = inst.rho
    generic = errorless_conditions(inst.A, inst.M, rho)
    P = projective_measurement_of(inst.A, rho.tol)
    proj = errorless_conditions(inst.A, P, rho)
    ctx = LocalizedMeasurement(P, rho)
    return {
        "generic_consistent": generic.consistent,
        "projective_consistent": proj.consistent,
        "projective_all_true": all(proj.flags),
        "projective_error": ctx.error(inst.A).value,
        "projective_error_repr": ctx.error_repr(inst.A).value,
    }


def oracle_checks(inst):
    """Disagreements between the closed forms and the brute-force oracles."""
    rho, M = inst.rho, inst.M
    ctx = LocalizedMeasurement(M, rho)
    f_o, v_o = minimize_gauge(inst.A, M, rho)
    e = ctx.error(inst.A)
    fr_o, vr_o = minimize_gauge(inst.A_rep, M, rho, constrained=True)
    er = ctx.error_repr(inst.A_rep)
    pf = ctx.pushforward(inst.A)
    rep = ctx.representative(inst.A_rep)
    return {
        "oracle_value": max(abs(v_o - e.value), abs(vr_o - er.value)),
        "oracle_minimizer": max(ctx.norm(f_o - pf), ctx.norm(fr_o - rep)),
        "oracle_pushforward": float(np.abs(pushforward_by_linear_system(inst.A, M, rho) - pf).max()),
        "oracle_partial_inverse": _rel(ctx.norm(partial_inverse_by_constrained_solve(inst.A_rep, M, rho) - rep),
                                       ctx.norm(rep)),
        "ill_conditioned": bool(er.ill_conditioned),
    }


def check_instance(seed, dims=(2, 3, 4, 5), max_outcomes=8, tol=DEFAULT_TOL, identities=True):
    """Run all checks for the instance drawn from ``seed``; returns a plain summary dict."""
    spec = instance_spec(seed, dims, max_outcomes)
    inst = random_instance(spec, tol)
    rel = {}
    for r in relation_reports(inst):
        rel[r.relation] = (r.verdict, r.slack)
    out = {"seed": seed, "dim": spec.dim, "outcomes": list(spec.n_outcomes),
           "state": inst.state_kind, "relations": rel}
    if identities:
        out["identities"] = identity_residuals(inst)
        out["errorless"] = errorless_checks(inst)
        out["oracle"] = oracle_checks(inst)
    return out


def _chunk(args):
    seeds, dims, max_outcomes, tol, identities = args
    return [check_instance(s, dims, max_outcomes, tol, identities) for s in seeds]


def _aggregate(results, tol):
    relations, identities, oracle = {}, {}, {}
    errorless = {"generic_inconsistent": 0, "projective_not_all_true": 0, "projective_max_error": 0.0}
    ill = 0
    for res in results:
        seed = res["seed"]
        for name, (verdict, slack) in res["relations"].items():
            agg = relations.setdefault(name, {"holds": 0, "violated": 0, "inapplicable": 0,
                                              "min_slack": None, "worst_seed": None})
            agg[verdict] += 1
            if verdict != "inapplicable" and (agg["min_slack"] is None or slack < agg["min_slack"]):
                agg["min_slack"], agg["worst_seed"] = slack, seed
        for name, val in res.get("identities", {}).items():
            agg = identities.setdefault(name, {"max_residual": 0.0, "worst_seed": None})
            if val > agg["max_residual"] or agg["worst_seed"] is None:
                agg["max_residual"], agg["worst_seed"] = val, seed
        if "errorless" in res:
            el = res["errorless"]
            errorless["generic_inconsistent"] += int(not el["generic_consistent"])
            errorless["projective_not_all_true"] += int(not (el["projective_all_true"]
                                                             and el["projective_consistent"]))
            errorless["projective_max_error"] = max(errorless["projective_max_error"],
                                                    el["projective_error"], el["projective_error_repr"])
        for name, val in res.get("oracle", {}).items():
            if name == "ill_conditioned":
                ill += int(val)
                continue
            agg = oracle.setdefault(name, {"max_residual": 0.0, "worst_seed": None})
            if val > agg["max_residual"] or agg["worst_seed"] is None:
                agg["max_residual"], agg["worst_seed"] = val, seed
    failures = [f"relation {k}" for k, v in relations.items() if v["violated"]]
    failures += [f"identity {k}" for k, v in identities.items() if v["max_residual"] > IDENTITY_LIMITS["identity"]]
    failures += [f"{k}" for k, v in oracle.items() if v["max_residual"] > IDENTITY_LIMITS[k]]
    if errorless["generic_inconsistent"] or errorless["projective_not_all_true"]:
        failures.append("errorless equivalence")
    return {"relations": dict(sorted(relations.items())), "identities": dict(sorted(identities.items())),
            "oracle": dict(sorted(oracle.items())), "errorless": errorless,
            "ill_conditioned": ill, "failures": failures, "passed": not failures}


def run_sweep(count, seed=0, dims=(2, 3, 4, 5), max_outcomes=8, tol=DEFAULT_TOL,
              identities=True, jobs=1):
    """Check ``count`` seeded random instances; the summary is independent of ``jobs``."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    seeds = instance_seeds(seed, count)
    if jobs > 1 and count > 1:
        size = -(-count // (4 * jobs))
        chunks = [(seeds[i:i + size], dims, max_outcomes, tol, identities) for i in range(0, count, size)]
        with ProcessPoolExecutor(jobs) as ex:
            results = [r for part in ex.map(_chunk, chunks) for r in part]
    else:
        results = _chunk((seeds, dims, max_outcomes, tol, identities))
    summary = _aggregate(results, tol)
    return {"count": count, "seed": seed, "dims": list(dims), "max_outcomes": max_outcomes, **summary}
