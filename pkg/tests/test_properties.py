import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from quncert.core import DensityState
from quncert.errors import error, error_repr, two_errors_identity
from quncert.oracle import random_hermitian, random_povm, random_state
from quncert.relations import relation_error, schrodinger_and_kr
from quncert.sweep import check_instance, IDENTITY_LIMITS

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_random_instance_relations_hold(seed):
    res = check_instance(seed, identities=False)
    for name, (verdict, slack) in res["relations"].items():
        assert verdict != "violated", (name, slack)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_random_instance_identities(seed):
    res = check_instance(seed)
    assert max(res["identities"].values()) <= IDENTITY_LIMITS["identity"]
    assert res["errorless"]["generic_consistent"]
    assert res["errorless"]["projective_all_true"]


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(1, 6), st.sampled_from(["full", "deficient", "pure"]))
def test_repr_error_dominates_error(seed, dim, n, kind):
    rng = np.random.default_rng(seed)
    M = random_povm(rng, dim, n)
    rho = random_state(rng, dim, kind)
    A = random_hermitian(rng, dim)
    e = error(A, M, rho).value
    assert e >= -1e-15
    er = error_repr(A, M, rho)
    if er.finite:
        assert er.value >= e - 1e-9
        assert two_errors_identity(A, M, rho).residual <= 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 4))
def test_schrodinger_chain_holds(seed, dim):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, dim)
    c = schrodinger_and_kr(random_hermitian(rng, dim), random_hermitian(rng, dim), rho)
    assert c.verdict == "holds"
    assert c.values[0] >= c.values[1] - 1e-9 >= c.values[2] - 2e-9


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(1, 5))
def test_relation_error_holds_for_arbitrary_observables(seed, dim, n):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, dim, "deficient" if dim > 2 else "full")
    assert isinstance(rho, DensityState)
    r = relation_error(random_hermitian(rng, dim), random_hermitian(rng, dim), random_povm(rng, dim, n), rho)
    assert r.verdict == "holds"
