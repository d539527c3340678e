"""Acceptance criteria 1-8.  Each test records one PASS/FAIL line printed after the run."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, akg_joint, noisy_z
from quncert.core import PAULI_X, PAULI_Y, PAULI_Z, DensityState, ProbDist, commutator_term, covariance
from quncert.errors import LocalizedMeasurement, error, error_repr, errorless_conditions, localize, two_errors_identity
from quncert.joint import marginals
from quncert.measurement import binary_symmetric_channel, projective_measurement_of, trivial_measurement
from quncert.oracle import minimize_gauge, random_hermitian, random_joint_povm, random_povm, random_state, sample
from quncert.relations import (akg_chains, nogo_check, ozawa_chain, ozawa_error, relation_error, relation_joint_repr,
                               relation_representatives_joint, schrodinger_and_kr)
from quncert.sweep import IDENTITY_LIMITS, run_sweep

I2 = np.eye(2)
SQ2, SQ3 = np.sqrt(2.0), np.sqrt(3.0)
DIMS = (2, 3, 4, 5)
MAX_OUTCOMES = 8


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    assert ok, detail


@pytest.fixture(scope="module")
def full_sweep():
    t0 = time.perf_counter()
    summary = run_sweep(1000, seed=2, dims=DIMS, max_outcomes=MAX_OUTCOMES)
    return summary, time.perf_counter() - t0


def test_criterion_1_inequality_suite():
    t0 = time.perf_counter()
    s = run_sweep(10 ** 4, seed=1, dims=DIMS, max_outcomes=MAX_OUTCOMES, identities=False)
    elapsed = time.perf_counter() - t0
    rels = s["relations"]
    min_slack = min(v["min_slack"] for v in rels.values() if v["min_slack"] is not None)
    violated = sum(v["violated"] for v in rels.values())
    vacuous = [k for k, v in rels.items() if not v["holds"]]
    ok = violated == 0 and min_slack >= -1e-9 and not vacuous and elapsed <= 300
    record(1, ok, f"{len(rels)} relations x 10^4 instances, min slack {min_slack:.2e}, "
                  f"violations {violated}, never-applicable {vacuous}, {elapsed:.0f}s")


def test_criterion_2_identity_suite(full_sweep):
    s, _ = full_sweep
    worst = max(s["identities"].items(), key=lambda kv: kv[1]["max_residual"])
    ok = worst[1]["max_residual"] <= 1e-9 and len(s["identities"]) >= 12
    record(2, ok, f"{len(s['identities'])} identities x 10^3 instances, max residual "
                  f"{worst[1]['max_residual']:.2e} ({worst[0]})")


def test_criterion_3_errorless_equivalence(full_sweep):
    s, _ = full_sweep
    el = s["errorless"]
    rng = np.random.default_rng(3)
    worst, all_true = 0.0, True
    for i in range(100):
        d = int(rng.integers(2, 6))
        rho = random_state(rng, d, ("full", "deficient", "pure")[i % 3])
        A = random_hermitian(rng, d)
        P = projective_measurement_of(A)
        v = errorless_conditions(A, P, rho)
        all_true &= all(v.flags)
        worst = max(worst, error(A, P, rho).value, error_repr(A, P, rho).value)
    ok = (el["generic_inconsistent"] == 0 and el["projective_not_all_true"] == 0
          and el["projective_max_error"] <= 1e-8 and all_true and worst <= 1e-8)
    record(3, ok, f"inconsistent {el['generic_inconsistent']}/10^3, projective all-true on 10^3 + 100 states, "
                  f"max projective error {max(worst, el['projective_max_error']):.2e}")


def test_criterion_4_trivial_reduction():
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(200):
        d = int(rng.integers(2, 6))
        rho = random_state(rng, d, ("full", "deficient", "pure")[i % 3])
        A, B = random_hermitian(rng, d), random_hermitian(rng, d)
        T = trivial_measurement(rng.dirichlet(np.ones(int(rng.integers(1, 5)))), d)
        r = relation_error(A, B, T, rho)
        chain = schrodinger_and_kr(A, B, rho)
        c = r.components
        R0, I0 = covariance(A, B, rho), commutator_term(A, B, rho)
        worst = max(worst, abs(c.R - R0), abs(c.I - I0), abs(r.bound - chain.values[1]),
                    abs(r.lhs - chain.values[0]), abs(chain.values[2] - abs(I0)))
    record(4, worst <= 1e-10, f"trivial measurement on 200 instances, max |R-R0|, |I-I0|, bound gaps {worst:.2e}")


def test_criterion_5_oracle_equivalence(full_sweep):
    s, _ = full_sweep
    o = s["oracle"]
    ok = all(v["max_residual"] <= IDENTITY_LIMITS[k] for k, v in o.items())
    ok &= max(v["max_residual"] for v in o.values()) <= 1e-6
    detail = ", ".join(f"{k} {v['max_residual']:.1e}" for k, v in o.items())
    record(5, ok, f"10^3 instances: {detail}")


def test_criterion_6_worked_fixtures():
    mixed = DensityState(I2 / 2)
    y_up = DensityState((I2 + PAULI_Y) / 2)
    gaps = []
    for eta in (0.5, 0.3, 0.8):
        M = noisy_z(eta)
        gaps.append(abs(error(PAULI_Z, M, mixed).value - np.sqrt(1 - eta ** 2)))
        gaps.append(abs(error_repr(PAULI_Z, M, mixed).value - np.sqrt(1 / eta ** 2 - 1)))
        gaps.append(abs(two_errors_identity(PAULI_Z, M, mixed).gap_sq - (1 / eta - eta) ** 2))
    gaps.append(abs(two_errors_identity(PAULI_Z, noisy_z(0.5), mixed).gap_sq - 2.25))
    # oracle re-verification of the frozen noisy-qubit values
    gaps.append(abs(minimize_gauge(PAULI_Z, noisy_z(0.5), mixed)[1] - SQ3 / 2))
    gaps.append(abs(minimize_gauge(PAULI_Z, noisy_z(0.5), mixed, constrained=True)[1] - SQ3))
    J = akg_joint(1 / SQ2)
    M, N = marginals(J)
    r = relation_joint_repr(PAULI_X, PAULI_Z, M, N, J, y_up)
    gaps += [abs(r.lhs - 1), abs(r.bound - 1), abs(r.slack)]
    rs = relation_representatives_joint(PAULI_X, PAULI_Z, [SQ2, -SQ2], [SQ2, -SQ2], M, N, J, y_up)
    gaps += [abs(rs.lhs - 2), abs(rs.bound - 2)]
    e_chain, s_chain = akg_chains(PAULI_X, PAULI_Z, J, y_up)
    gaps += [abs(v - 1) for v in e_chain.values] + [abs(v - 2) for v in s_chain.values]
    gaps.append(abs(ozawa_error(PAULI_Z, noisy_z(0.5, [1, -1]), mixed) - 1))
    gaps.append(abs(ozawa_error(PAULI_Z, noisy_z(0.5, [2, -2]), mixed) - SQ3))
    oz = ozawa_chain(PAULI_X, PAULI_Z, akg_joint(0.6, ([1, -1], [1, -1])), y_up)
    ok_chain = oz.verdict == "holds"
    ctx = localize(binary_symmetric_channel(0.25), ProbDist([0.5, 0.5]))
    a = np.array([1.0, -1.0])
    gaps += [abs(ctx.error(a).value - SQ3 / 2), abs(ctx.error_repr(a).value - SQ3)]
    worst = max(gaps)
    record(6, worst <= 1e-9 and ok_chain, f"noisy qubit, AKG, Ozawa, BSC fixtures: max deviation {worst:.2e}")


def test_criterion_7_nogo_probe():
    y_up = DensityState((I2 + PAULI_Y) / 2)
    rng = np.random.default_rng(7)
    cands = []
    for _ in range(1000):
        J = random_joint_povm(rng, 2, int(rng.integers(2, 9)), int(rng.integers(2, 9)), values=False)
        cands.append((*marginals(J), J))
    rep = nogo_check(PAULI_X, PAULI_Z, y_up, cands, threshold=1e-3)
    ok = rep.applicable and rep.n_certified == 1000 and rep.min_max_error >= 1e-3
    record(7, ok, f"{rep.n_certified}/1000 certified candidates, min max-error {rep.min_max_error:.4f}")


def test_criterion_8_monte_carlo():
    n = 10 ** 6
    mixed = DensityState(I2 / 2)
    y_up = DensityState((I2 + PAULI_Y) / 2)
    J = akg_joint(1 / SQ2)
    MX, MZ = marginals(J)
    runs = {
        "noisy-qubit": sample(noisy_z(0.5), mixed, n, seed=81, functions={"rep": [2.0, -2.0], "id": [1.0, -1.0]}),
        "akg-x": sample(MX, y_up, n, seed=82, functions={"rep": [SQ2, -SQ2]}),
        "akg-z": sample(MZ, y_up, n, seed=83, functions={"rep": [SQ2, -SQ2]}),
        "projective": sample(projective_measurement_of(PAULI_Z), mixed, n, seed=84, functions={"z": [-1.0, 1.0]}),
    }
    # closed forms: representative variance 4 (noisy qubit) and 2 (AKG marginals)
    ctx = LocalizedMeasurement(noisy_z(0.5), mixed)
    exact_ok = (abs(runs["noisy-qubit"].checks["rep"]["variance"] - ctx.std([2.0, -2.0]) ** 2) < 1e-12
                and abs(runs["akg-x"].checks["rep"]["variance"] - 2.0) < 1e-12)
    ok = exact_ok and all(r.passed for r in runs.values())
    detail = ", ".join(f"{k} mean {next(iter(r.means.values())):+.4f}" for k, r in runs.items())
    record(8, ok, f"n=10^6 within 5 SE: {detail}")
