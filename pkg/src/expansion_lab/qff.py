"""Classical stand-in for quantum fast-forwarding and the 2-norm estimator.

Fast-forwarding is simulated by the Chebyshev truncation it rests on: ``x^t``
equals ``E[T_{|2J - t|}(x)]`` for ``J ~ Binomial(t, 1/2)``, so dropping every
term above degree ``D`` costs at most the binomial tail
``Pr(|2J - t| > D) <= 2 exp(-D^2 / (2t))``.  Amplitude estimation is replaced
by the exact norm plus a noise model that honours the same ``(eps, delta)``
contract, and its quantum cost is charged to a ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from ._validation import check_graph, check_node_set, check_random_state, check_steps
from .graph import Graph, NodeSet, QueryLedger
from .walks import transition_matrix, uniform_on, walk_power

BACKENDS = ("exact", "noisy-model")


def truncation_degree(t: int, epsilon: float) -> int:
    """Smallest degree with a provable sup-error of ``epsilon`` on ``[-1, 1]``."""
    if t == 0:
        return 0
    return min(t, math.ceil(math.sqrt(2 * t * math.log(2 / epsilon))))


@dataclass(frozen=True)
class ChebExpansion:
    t: int
    epsilon: float
    degree: int
    coefficients: np.ndarray

    def __call__(self, x):
        """Evaluate the truncated expansion at scalar or array ``x`` in ``[-1, 1]``."""
        return np.polynomial.chebyshev.chebval(x, self.coefficients)

    @property
    def l1(self) -> float:
        return float(np.abs(self.coefficients).sum())


def cheb_coeffs(t: int, epsilon: float) -> ChebExpansion:
    """Chebyshev coefficients of ``x^t`` truncated at :func:`truncation_degree`."""
    t = check_steps(t)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    D = truncation_degree(t, epsilon)
    k = np.arange(D + 1)
    # c_k = 2^(1-t) C(t, (t-k)/2) for k = t mod 2, halved at k = 0
    c = np.where((t - k) % 2 == 0, 2.0 * binom.pmf((t - k) // 2, t, 0.5), 0.0)
    c[0] /= 2.0
    if t == 0:
        c = np.array([1.0])
    return ChebExpansion(t, epsilon, D, c)


def chebyshev_apply(g: Graph, x: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """``sum_k c_k T_k(P) x`` by the three-term recurrence."""
    P = transition_matrix(g)
    prev = x
    out = coeffs[0] * prev
    if coeffs.size == 1:
        return out
    cur = P @ x
    out = out + coeffs[1] * cur
    for ck in coeffs[2:]:
        prev, cur = cur, 2.0 * (P @ cur) - prev
        out = out + ck * cur
    return out


def fast_forward(g: Graph, S: NodeSet, t: int, epsilon: float) -> np.ndarray:
    """Approximate ``P^t u_S`` (``u_S`` the unit-norm uniform state on ``S``) to 2-norm ``epsilon``."""
    check_graph(g)
    S = check_node_set(g, S)
    t = check_steps(t)
    u = uniform_on(g, S, norm="l2")
    if t == 0:
        return u
    return chebyshev_apply(g, u, cheb_coeffs(t, epsilon).coefficients)


def norm_exact(g: Graph, S: NodeSet, t: int) -> float:
    """Ground truth ``||P^t u_S||_2`` via direct walk propagation."""
    check_graph(g)
    S = check_node_set(g, S)
    # walk_power uses the l1-normalized start; rescale to the unit 2-norm state
    return float(np.linalg.norm(walk_power(g, S, t)) * math.sqrt(S.size))


def norm_fast(g: Graph, S: NodeSet, t: int, epsilon: float | None = None) -> float:
    """``||P^t u_S||`` through fast-forwarding; error at most ``epsilon`` (default ``n^-2``)."""
    eps = epsilon if epsilon is not None else default_qff_epsilon(g.n)
    return float(np.linalg.norm(fast_forward(g, S, t, eps)))


def default_qff_epsilon(n: int) -> float:
    return min(0.5, float(n) ** -2)


def estimator_query_cost(t: int, d: int, eps_prime: float, delta: float) -> int:
    """``ceil(sqrt t) ceil(sqrt d) ceil(1/eps') ceil(ln 1/delta)`` quantum query units."""
    return (
        math.ceil(math.sqrt(t))
        * math.ceil(math.sqrt(d))
        * math.ceil(1 / eps_prime)
        * math.ceil(math.log(1 / delta))
    )


def reflection_cost(eps_prime: float, delta: float) -> int:
    return math.ceil(1 / eps_prime) * math.ceil(math.log(1 / delta))


def qram_prep_cost(size: int, n: int) -> int:
    """One-off QRAM writes to hold a seed set of ``size`` nodes."""
    return size * math.ceil(math.log(n))


@dataclass(frozen=True)
class NormEstimate:
    value: float
    eps_prime: float
    delta: float
    backend: str
    query_cost: int
    qram_cost: int
    truth: float

    @property
    def within_precision(self) -> bool:
        return abs(self.value - self.truth) <= self.eps_prime


def estimate_norm(
    g: Graph,
    S: NodeSet,
    t: int,
    eps_prime: float,
    delta: float,
    backend: str = "noisy-model",
    rng=None,
    *,
    ledger: QueryLedger | None = None,
    method: str = "walk",
) -> NormEstimate:
    """Estimate ``||P^t u_S||`` to precision ``eps_prime`` with confidence ``1 - delta``.

    ``method`` picks how the underlying norm is computed: ``"walk"`` propagates
    ``t`` explicit steps, ``"qff"`` uses the Chebyshev fast-forward with error
    ``n^-2``.  The modeled cost is the same either way.
    """
    check_graph(g)
    S = check_node_set(g, S)
    t = check_steps(t)
    if not eps_prime > 0:
        raise ValueError("precision must be positive")
    if not 0 < delta < 1:
        raise ValueError("confidence parameter delta must lie in (0, 1)")
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    if method == "walk":
        truth = norm_exact(g, S, t)
    elif method == "qff":
        truth = norm_fast(g, S, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    value = truth
    if backend == "noisy-model":
        rng = check_random_state(rng)
        width = 4 * eps_prime if rng.random() < delta else eps_prime
        value = min(1.0, max(0.0, truth + rng.uniform(-width, width)))
    cost = estimator_query_cost(t, g.d, eps_prime, delta)
    qram = reflection_cost(eps_prime, delta)
    if ledger is not None:
        ledger.charge(quantum=cost, qram=qram)
    return NormEstimate(value, eps_prime, delta, backend, cost, qram, truth)
