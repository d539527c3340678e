"""Independent brute-force checks and random instance generators.

Nothing here calls the closed forms it is meant to certify: minimizers
and inverses are assembled from raw traces ``Tr[E_w A rho]`` and solved
with generic least squares.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_TOL, DensityState, ProbDist
from .errors import NotRepresentable
from .joint import JointPovm, marginals
from .measurement import Povm, StochasticChannel

__all__ = [
    "RandomSpec",
    "RandomInstance",
    "SampleRun",
    "minimize_gauge",
    "pushforward_by_linear_system",
    "partial_inverse_by_constrained_solve",
    "random_state",
    "random_hermitian",
    "random_povm",
    "random_joint_povm",
    "random_channel",
    "random_distribution",
    "random_instance",
    "sample",
]


# ---------------------------------------------------------------- raw traces

def _probs(M, rho):
    return np.real(np.einsum("wij,ji->w", M.effects, rho.matrix))


def _raw_sqrt(rho):
    w, v = np.linalg.eigh(rho.matrix)
    w = np.where(w > rho.tol.rank_tol * w.max(), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def _support(p, tol):
    return p > tol.prob_tol


def minimize_gauge(A, M, rho, constrained=False):
    """Minimize ``gauge(A, f)^2 = <A^2> - 2 sum_w f_w Re Tr[E_w A rho] + sum_w f_w^2 Tr[E_w rho]``.

    Unconstrained, the normal equations ``diag(p) f = b`` are solved by
    least squares.  Constrained, ``f`` ranges over exact representatives
    (``sum_w f_w E_w rho^(1/2) = A rho^(1/2)``) and the least-norm
    solution is returned.

    Returns
    -------
    f : ndarray
        Minimizer, zero off the support of the outcome law.
    value : float
        Square root of the minimum.

    Raises
    ------
    NotRepresentable
        In constrained mode when ``A`` has no representative.
    """
    tol = rho.tol
    A = np.asarray(A, dtype=complex)
    p = _probs(M, rho)
    if constrained:
        f = partial_inverse_by_constrained_solve(A, M, rho)
    else:
        b = np.real(np.einsum("wij,jk,ki->w", M.effects, A, rho.matrix))
        supp = _support(p, tol)
        f = np.zeros(len(p))
        f[supp] = np.linalg.lstsq(np.diag(p[supp]), b[supp], rcond=None)[0]
    b = np.real(np.einsum("wij,jk,ki->w", M.effects, A, rho.matrix))
    a2 = float(np.real(np.trace(A @ A @ rho.matrix)))
    value = a2 - 2 * float(f @ b) + float(f ** 2 @ p)
    return f, float(np.sqrt(max(value, 0.0)))


def pushforward_by_linear_system(A, M, rho, seed=0):
    """Pushforward from the adjointness relation tested on random functions.

    Solves ``sum_w g_k(w) p_w f(w) = Re Tr[(sum_w g_k(w) E_w) A rho]`` for a
    random invertible family ``g_k``.
    """
    tol = rho.tol
    rng = np.random.default_rng(seed)
    n = len(M)
    G = rng.standard_normal((n, n)) + 3 * np.eye(n)
    A = np.asarray(A, dtype=complex)
    rhs = np.array([np.real(np.trace(np.einsum("w,wij->ij", g, M.effects) @ A @ rho.matrix)) for g in G])
    h = np.linalg.solve(G, rhs)
    p = _probs(M, rho)
    supp = _support(p, tol)
    f = np.zeros(n)
    f[supp] = h[supp] / p[supp]
    return f


def partial_inverse_by_constrained_solve(A, M, rho):
    """Least ``Mrho``-norm ``f`` with ``sum_w f_w E_w rho^(1/2) = A rho^(1/2)``.

    Raises
    ------
    NotRepresentable
        When the constraint residual exceeds ``eq_tol`` relative to
        ``max(|A rho^(1/2)|, 1)``.
    """
    tol = rho.tol
    A = np.asarray(A, dtype=complex)
    s = _raw_sqrt(rho)
    p = _probs(M, rho)
    supp = np.flatnonzero(_support(p, tol))
    d = rho.dim
    cols = (M.effects[supp] @ s).reshape(len(supp), d * d)
    C = np.concatenate([cols.real, cols.imag], axis=1).T / np.sqrt(p[supp])[None, :]
    t = (A @ s).reshape(-1)
    a = np.concatenate([t.real, t.imag])
    rcond = tol.rank_tol
    g = np.linalg.lstsq(C, a, rcond=rcond)[0] if supp.size else np.zeros(0)
    res = float(np.linalg.norm(C @ g - a) / max(np.linalg.norm(a), 1.0))
    if res > tol.eq_tol:
        raise NotRepresentable(res)
    f = np.zeros(len(M))
    f[supp] = g / np.sqrt(p[supp])
    return f


# ------------------------------------------------------------ random draws

def _ginibre(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_state(rng, dim, kind="full", tol=DEFAULT_TOL):
    """Wishart-style density matrix; ``kind`` is "full", "deficient" or "pure"."""
    if kind == "pure":
        rank = 1
    elif kind == "deficient":
        rank = int(rng.integers(1, dim)) if dim > 1 else 1
    elif kind == "full":
        rank = dim
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    G = _ginibre(rng, dim, rank)
    R = G @ G.conj().T
    R = (R + R.conj().T) / 2
    return DensityState(R / np.real(np.trace(R)), tol)


def random_hermitian(rng, dim, scale=1.0):
    G = _ginibre(rng, dim, dim)
    return scale * (G + G.conj().T) / 2


def _inv_sqrt(S):
    w, v = np.linalg.eigh(S)
    return (v / np.sqrt(w)) @ v.conj().T


def _random_effects(rng, dim, n):
    """Positive draws ``G_k`` (random rank) conjugated so that they sum to the identity."""
    while True:
        G = []
        for _ in range(n):
            r = dim if n == 1 else int(rng.integers(1, dim + 1))
            X = _ginibre(rng, dim, r)
            G.append(X @ X.conj().T)
        G = np.array(G)
        S = G.sum(axis=0)
        w = np.linalg.eigvalsh(S)
        if w[0] > 1e-6 * w[-1]:
            break
    T = _inv_sqrt(S)
    E = T @ G @ T
    E = (E + np.conj(np.swapaxes(E, 1, 2))) / 2
    # absorb rounding into the last effect so the sum is the identity to machine precision
    E[-1] += np.eye(dim) - E.sum(axis=0)
    return E


def random_povm(rng, dim, n, values=True, tol=DEFAULT_TOL):
    values = rng.standard_normal(n) if values else None
    return Povm(_random_effects(rng, dim, n), None, values, tol)


def random_joint_povm(rng, dim, n1, n2, values=True, tol=DEFAULT_TOL):
    E = _random_effects(rng, dim, n1 * n2)
    factors = ([f"a{k}" for k in range(n1)], [f"b{k}" for k in range(n2)])
    vals = (rng.standard_normal(n1), rng.standard_normal(n2)) if values else None
    return JointPovm(E, factors, vals, tol)


def random_distribution(rng, n, zeros=0, tol=DEFAULT_TOL):
    """Dirichlet draw with ``zeros`` entries forced to zero (at least one entry stays positive)."""
    w = rng.dirichlet(np.ones(n))
    if zeros:
        idx = rng.choice(n, size=min(zeros, n - 1), replace=False)
        w[idx] = 0.0
        w /= w.sum()
    return ProbDist(w, tol=tol)


def random_channel(rng, n_out, n_in, sparsity=0.0, tol=DEFAULT_TOL):
    """Column-stochastic kernel with Dirichlet columns; ``sparsity`` zeroes entries at random."""
    K = rng.dirichlet(np.ones(n_out), size=n_in).T
    if sparsity:
        mask = rng.random(K.shape) < sparsity
        mask[rng.integers(0, n_out, n_in), np.arange(n_in)] = False
        K = np.where(mask, 0.0, K)
        K /= K.sum(axis=0, keepdims=True)
    return StochasticChannel(K, tol=tol)


@dataclass(frozen=True)
class RandomSpec:
    """Parameters of one random instance.

    ``ensemble`` gives the relative frequency of full-rank, rank-deficient
    and pure states.
    """

    dim: int
    n_outcomes: tuple = (2, 2)
    seed: int = 0
    ensemble: tuple = (0.6, 0.25, 0.15)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        n = self.n_outcomes
        n = (int(n), int(n)) if np.isscalar(n) else tuple(int(k) for k in n)
        if len(n) != 2 or min(n) < 1:
            raise ValueError("n_outcomes must be one or two positive integers")
        object.__setattr__(self, "n_outcomes", n)
        e = np.asarray(self.ensemble, dtype=float)
        if e.shape != (3,) or e.min() < 0 or e.sum() <= 0:
            raise ValueError("ensemble must be three nonnegative weights")
        object.__setattr__(self, "ensemble", tuple(float(x) for x in e / e.sum()))


@dataclass(frozen=True)
class RandomInstance:
    spec: RandomSpec
    state_kind: str
    rho: DensityState
    J: JointPovm
    M: Povm
    N: Povm
    A: np.ndarray
    B: np.ndarray
    A_rep: np.ndarray
    B_rep: np.ndarray
    C_rep: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    K: StochasticChannel
    p: ProbDist
    a: np.ndarray
    b: np.ndarray
    a_rep: np.ndarray
    b_rep: np.ndarray


def random_instance(spec, tol=DEFAULT_TOL):
    """Deterministic random instance for ``spec``.

    ``M`` and ``N`` are the marginals of a random joint POVM ``J``;
    ``A_rep = M'f``, ``C_rep = M'h`` and ``B_rep = N'g`` are representable by construction,
    ``A`` and ``B`` are generic.  The classical part draws a channel ``K``
    over an input law ``p`` with ``a_rep = K'[.]`` representable.
    """
    rng = np.random.default_rng(spec.seed)
    d = spec.dim
    n1, n2 = spec.n_outcomes
    kind = ("full", "deficient", "pure")[int(rng.choice(3, p=spec.ensemble))]
    rho = random_state(rng, d, kind, tol)
    J = random_joint_povm(rng, d, n1, n2, True, tol)
    M, N = marginals(J)
    A, B = random_hermitian(rng, d), random_hermitian(rng, d)
    f, g, h = rng.standard_normal(n1), rng.standard_normal(n2), rng.standard_normal(n1)
    A_rep = np.einsum("w,wij->ij", f, M.effects)
    B_rep = np.einsum("w,wij->ij", g, N.effects)
    C_rep = np.einsum("w,wij->ij", h, M.effects)
    n_in = int(rng.integers(1, 9))
    n_out = int(rng.integers(1, 9))
    p = random_distribution(rng, n_in, int(rng.integers(0, n_in)), tol)
    K = random_channel(rng, n_out, n_in, 0.3, tol)
    a, b = rng.standard_normal(n_in), rng.standard_normal(n_in)
    a_rep = K.kernel.T @ rng.standard_normal(n_out)
    b_rep = K.kernel.T @ rng.standard_normal(n_out)
    return RandomInstance(spec, kind, rho, J, M, N, A, B, A_rep, B_rep, C_rep, f, g, h, K, p, a, b, a_rep, b_rep)


# ----------------------------------------------------------------- sampling

@dataclass(frozen=True)
class SampleRun:
    """Finite-sample run of a measurement; ``checks`` maps each function to pass/fail."""

    n_samples: int
    seed: int
    counts: np.ndarray
    empirical: np.ndarray
    exact: np.ndarray
    means: dict = field(default_factory=dict)
    variances: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c["mean_ok"] and c["var_ok"] for c in self.checks.values())


def sample(M, rho, n, seed=0, functions=None, bands=5.0):
    """Draw ``n`` outcomes of ``M`` on ``rho`` and compare moments of ``functions``.

    Means must lie within ``bands`` standard errors of the exact value;
    variances within ``bands`` standard errors of the unbiased sample
    variance, whose exact variance is ``(m4 - var^2 (n - 3) / (n - 1)) / n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    p = np.clip(_probs(M, rho), 0, None)
    p /= p.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, p)
    emp = counts / n
    means, variances, checks = {}, {}, {}
    for name, f in (functions or {}).items():
        f = np.asarray(f, dtype=float)
        mu = float(f @ p)
        var = float((f - mu) ** 2 @ p)
        m4 = float((f - mu) ** 4 @ p)
        m_hat = float(f @ emp)
        v_hat = float((f - m_hat) ** 2 @ emp) * n / max(n - 1, 1)
        se_m = np.sqrt(var / n)
        se_v = np.sqrt(max(m4 - var ** 2 * (n - 3) / max(n - 1, 1), 0.0) / n)
        means[name], variances[name] = m_hat, v_hat
        checks[name] = {
            "mean": mu, "variance": var,
            "mean_ok": bool(abs(m_hat - mu) <= bands * se_m + 1e-12),
            "var_ok": bool(abs(v_hat - var) <= bands * se_v + 1e-12),
        }
    return SampleRun(n, seed, counts, emp, p, means, variances, checks)
