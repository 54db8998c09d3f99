"""Lazy random walk linear algebra on regularized graphs.

The lazy walk moves to a uniformly random neighbor slot with probability 1/2
and otherwise stays put, so on a ``d``-regular slot graph

    P(u, v) = A[u, v] / (2d) + [u == v] / 2,

where ``A[u, v]`` counts the slots of ``v`` that point to ``u``.  ``P`` is
symmetric and doubly stochastic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from ._validation import check_graph, check_node, check_node_set, check_steps
from .graph import Graph, NodeSet, set_conductance_exact


def transition_matrix(g: Graph) -> sp.csr_matrix:
    """Sparse lazy transition matrix (column ``v`` is the step distribution from ``v``)."""
    check_graph(g)
    cached = g.__dict__.get("_lazy_P")
    if cached is None:
        cached = (0.5 * sp.identity(g.n, format="csr") + g.adjacency / (2.0 * g.d)).tocsr()
        g.__dict__["_lazy_P"] = cached
    return cached


def uniform_on(g: Graph, S: NodeSet, *, norm: str = "l1") -> np.ndarray:
    """Indicator of ``S`` normalized in l1 (a distribution) or l2 (a unit state)."""
    x = np.zeros(g.n)
    x[S.members] = 1.0 / S.size if norm == "l1" else 1.0 / math.sqrt(S.size)
    return x


def walk_step(g: Graph, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (g.n,):
        raise ValueError(f"distribution has shape {p.shape}, expected ({g.n},)")
    return transition_matrix(g) @ p


def walk_power(g: Graph, start: NodeSet, t: int) -> np.ndarray:
    """``P^t`` applied to the uniform distribution on ``start``."""
    start = check_node_set(g, start)
    t = check_steps(t)
    P = transition_matrix(g)
    x = uniform_on(g, start)
    for _ in range(t):
        x = P @ x
    return x


def collision_probability(g: Graph, v: int, t: int) -> float:
    """Probability that two independent ``t``-step walks from ``v`` end together."""
    v = check_node(g, v)
    p = walk_power(g, NodeSet.of(g, [v]), t)
    return float(p @ p)


def _restricted(g: Graph, S: NodeSet) -> sp.csr_matrix:
    P = transition_matrix(g)
    idx = S.members
    return P[idx][:, idx].tocsr()


def stay_probability(g: Graph, S: NodeSet, v: int, t: int) -> float:
    """``Pr(escape time of S from v > t)``, the mass of ``(P_S)^t e_v``."""
    S = check_node_set(g, S)
    v = check_node(g, v)
    t = check_steps(t)
    if v not in S:
        raise ValueError(f"start node {v} is not in S")
    PS = _restricted(g, S)
    x = np.zeros(S.size)
    x[np.searchsorted(S.members, v)] = 1.0
    for _ in range(t):
        x = PS @ x
    return float(x.sum())


def stay_probabilities(g: Graph, S: NodeSet, t: int) -> np.ndarray:
    """Stay probabilities for every node of ``S`` at once (aligned with ``S.members``).

    Uses ``1^T (P_S)^t e_v = ((P_S^T)^t 1)_v``, one backward sweep for all starts.
    """
    S = check_node_set(g, S)
    t = check_steps(t)
    PT = _restricted(g, S).T.tocsr()
    y = np.ones(S.size)
    for _ in range(t):
        y = PT @ y
    return y


@dataclass(frozen=True)
class CoreParams:
    """Diffusion-core parameters: horizon multiplier ``alpha`` and stay threshold ``beta``."""

    alpha: Fraction
    beta: Fraction

    def __init__(self, alpha, beta):
        alpha = Fraction(alpha).limit_denominator(10**9) if not isinstance(alpha, Fraction) else alpha
        beta = Fraction(beta).limit_denominator(10**9) if not isinstance(beta, Fraction) else beta
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0 < beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    def horizon(self, conductance: Fraction) -> int:
        if conductance <= 0:
            raise ValueError("diffusion core undefined for a set with no boundary")
        return math.floor(self.alpha / conductance)

    def size_bound(self) -> float:
        """Guaranteed lower bound on ``d(core)/d(S)`` (strict)."""
        return float(1 - self.alpha / (2 * (1 - self.beta)))


CANONICAL_CORE = CoreParams(Fraction(1, 40), Fraction(3, 4))
INNER_CORE = CoreParams(Fraction(1, 30), Fraction(39, 40))


def diffusion_core(g: Graph, S: NodeSet, params: CoreParams = CANONICAL_CORE) -> NodeSet:
    """Nodes of ``S`` whose walk stays in ``S`` for ``floor(alpha/phi(S))`` steps w.p. >= beta."""
    S = check_node_set(g, S)
    phi = set_conductance_exact(g, S)
    h = params.horizon(phi)
    stay = stay_probabilities(g, S, h)
    keep = stay >= float(params.beta) - 1e-12
    return NodeSet.of(g, S.members[keep])


def inner_core_horizon(g: Graph, S: NodeSet) -> int:
    """Horizon ``floor(1/(120 phi(S)))`` over which the inner core stays in the canonical core."""
    phi = set_conductance_exact(g, S)
    if phi <= 0:
        raise ValueError("horizon undefined for a set with no boundary")
    return math.floor(1 / (120 * phi))


def simulate_walks(g: Graph, starts: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
    """Endpoints of independent lazy walks, one per entry of ``starts``."""
    check_graph(g)
    pos = np.array(starts, dtype=np.int64, copy=True)
    slots = g.slots
    for _ in range(check_steps(t)):
        move = rng.random(pos.size) < 0.5
        k = rng.integers(0, g.d, size=pos.size)
        pos = np.where(move, slots[pos, k], pos)
    return pos


def monte_carlo_collision(g: Graph, v: int, t: int, pairs: int, rng: np.random.Generator) -> float:
    """Fraction of ``pairs`` walk pairs from ``v`` whose endpoints coincide."""
    ends = simulate_walks(g, np.full(2 * pairs, check_node(g, v)), t, rng)
    return float(np.mean(ends[:pairs] == ends[pairs:]))


def mixing_norm_bound(n: int) -> float:
    """``sqrt((1 + 1/n)/n)``: the per-node norm cap after sufficient mixing."""
    return math.sqrt((1 + 1 / n) / n)
