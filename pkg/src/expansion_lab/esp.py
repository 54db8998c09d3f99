"""Evolving set process (ordinary and volume-biased) with exact kernel sampling.

From a set ``S`` the next set is the level set ``{v : P(S, v) >= U}`` for a
uniform threshold ``U``, where ``P(S, v) = |E(v, S)|/(2d) + [v in S]/2`` is the
probability that one lazy step from ``v`` lands in ``S``.  On a ``d``-regular
graph every ``P(S, v)`` is ``level(v)/(2d)`` for an integer
``level(v) = |E(v, S)| + d [v in S]``, so the kernel row is a chain of at most
``2d`` nested candidates with integer interval lengths and can be sampled
without floating point ties.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from ._validation import check_graph, check_node, check_node_set, check_random_state
from .graph import Graph, NodeSet


@dataclass(frozen=True)
class KernelRow:
    """Nested candidate sets of one ESP transition, smallest first.

    ``ordinary[i]`` is ``K(S, candidates[i])``; ``biased[i]`` is
    ``K^(S, candidates[i]) = d(candidate)/d(S) K(S, candidate)``.
    """

    source: NodeSet
    candidates: tuple[NodeSet, ...]
    ordinary: tuple[Fraction, ...]
    biased: tuple[Fraction, ...]

    def expected_volume(self) -> Fraction:
        return sum((p * c.total_degree for p, c in zip(self.ordinary, self.candidates)), Fraction(0))

    def probability_of(self, target: NodeSet, *, biased: bool = False) -> Fraction:
        probs = self.biased if biased else self.ordinary
        return sum((p for p, c in zip(probs, self.candidates) if c == target), Fraction(0))


def kernel_row(g: Graph, S: NodeSet) -> KernelRow:
    """Enumerate the ESP transition out of ``S`` in exact rational arithmetic.

    Works on any bounded-degree graph (thresholds use each node's own degree);
    only nodes in ``S`` or its outer boundary can change membership.
    """
    check_graph(g, regular=False)
    S = check_node_set(g, S)
    inside = S.mask(g.n)
    deg = g.degrees
    touched = set(S.members.tolist())
    into: dict[int, int] = {}
    for v in S.members.tolist():
        for u in g.neighbors(v).tolist():
            touched.add(u)
    for u in touched:
        nb = g.neighbors(u)
        into[u] = int(np.count_nonzero(inside[nb]))
    thresholds = {
        u: Fraction(into[u], 2 * int(deg[u])) + (Fraction(1, 2) if inside[u] else 0)
        for u in touched
        if deg[u] > 0 or inside[u]
    }
    levels = sorted({p for p in thresholds.values() if p > 0}, reverse=True)
    # U in (levels[i], levels[i-1]] selects {u : P(S,u) >= levels[i-1]}
    bounds = [Fraction(1)] + levels + [Fraction(0)]
    candidates, ordinary = [], []
    for hi, lo in zip(bounds[:-1], bounds[1:]):
        if hi == lo:
            continue
        members = [u for u, p in thresholds.items() if p >= hi]
        candidates.append(NodeSet.of(g, members))
        ordinary.append(hi - lo)
    vol = Fraction(S.total_degree)
    biased = [p * c.total_degree / vol for p, c in zip(ordinary, candidates)]
    return KernelRow(S, tuple(candidates), tuple(ordinary), tuple(biased))


class EspState:
    """Mutable ESP state on a regular graph with incremental boundary bookkeeping.

    ``into[v]`` counts the slots of ``v`` pointing into the current set; a node
    is on the frontier when ``0 < level(v) < 2d``.  Only frontier nodes can
    change membership in one step.
    """

    def __init__(self, g: Graph, start: NodeSet):
        check_graph(g)
        start = check_node_set(g, start)
        self.g = g
        self.d = g.d
        self.inside = np.zeros(g.n, dtype=bool)
        self.into = np.zeros(g.n, dtype=np.int64)
        self.frontier: set[int] = set()
        self.interior = 0
        self.size = 0
        self.step = 0
        self.absorbed = False
        self._apply(start.members, np.empty(0, dtype=np.int64))
        self.cost = start.total_degree

    @property
    def volume(self) -> int:
        return self.d * self.size

    @property
    def current(self) -> NodeSet:
        return NodeSet.from_mask(self.g, self.inside)

    def _levels(self, nodes: np.ndarray) -> np.ndarray:
        return self.into[nodes] + self.d * self.inside[nodes]

    def _apply(self, joining: np.ndarray, leaving: np.ndarray) -> None:
        slots = self.g.slots
        affected = []
        if joining.size:
            self.inside[joining] = True
            np.add.at(self.into, slots[joining].ravel(), 1)
            affected.append(joining)
            affected.append(slots[joining].ravel())
        if leaving.size:
            self.inside[leaving] = False
            np.add.at(self.into, slots[leaving].ravel(), -1)
            affected.append(leaving)
            affected.append(slots[leaving].ravel())
        self.size += joining.size - leaving.size
        if not affected:
            return
        nodes = np.unique(np.concatenate(affected))
        lv = self._levels(nodes)
        for u, level in zip(nodes.tolist(), lv.tolist()):
            if 0 < level < 2 * self.d:
                self.frontier.add(u)
            else:
                self.frontier.discard(u)
        self.interior = self.size - int(np.count_nonzero(self.inside[self._frontier_array()]))

    def _frontier_array(self) -> np.ndarray:
        return np.fromiter(self.frontier, dtype=np.int64, count=len(self.frontier))

    def boundary_size(self) -> int:
        fr = self._frontier_array()
        return int(np.count_nonzero(~self.inside[fr]))

    def cut(self) -> int:
        fr = self._frontier_array()
        out = fr[~self.inside[fr]]
        return int(self.into[out].sum())

    def conductance(self) -> float:
        if self.size == 0:
            raise ValueError("conductance undefined for the empty set")
        return self.cut() / self.volume

    def row(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integer form of the kernel row.

        Returns ``(thresholds, lengths, sizes)``: candidate ``i`` is
        ``interior + {frontier with level >= thresholds[i]}`` (threshold
        ``2d`` meaning interior only), selected by ``lengths[i]/(2d)`` of the
        ``U`` range, with ``sizes[i]`` members.
        """
        fr = self._frontier_array()
        hist = np.bincount(self._levels(fr), minlength=2 * self.d + 1)
        levels = np.flatnonzero(hist[1:2 * self.d]) + 1
        levels = levels[::-1]
        thresholds = np.concatenate([[2 * self.d], levels])
        lower = np.concatenate([levels, [0]])
        lengths = thresholds - lower
        cum = np.cumsum(hist[::-1])[::-1]  # cum[k] = #frontier with level >= k
        sizes = self.interior + cum[thresholds]
        keep = lengths > 0
        return thresholds[keep], lengths[keep], sizes[keep]

    def transition_to(self, threshold: int) -> int:
        """Move to the level set at ``threshold``; returns the step cost."""
        fr = self._frontier_array()
        boundary = int(np.count_nonzero(~self.inside[fr]))
        lv = self._levels(fr)
        ins = self.inside[fr]
        leaving = fr[ins & (lv < threshold)]
        joining = fr[~ins & (lv >= threshold)]
        self._apply(np.sort(joining), np.sort(leaving))
        if self.size == 0:
            self.absorbed = True
        step_cost = self.d * (joining.size + leaving.size) + boundary
        self.cost += step_cost
        self.step += 1
        return step_cost


def esp_step(g: Graph, state: EspState, rng, biased: bool = True) -> EspState:
    """Advance ``state`` by one ESP transition (in place) and return it.

    The biased kernel weights candidate ``S'`` by ``d(S')/d(S)`` and never
    reaches the empty set; the ordinary kernel may, which marks the state
    absorbed.
    """
    if state.g is not g:
        raise ValueError("state belongs to a different graph")
    if state.size == 0:
        raise ValueError("cannot step from the empty set")
    rng = check_random_state(rng)
    thresholds, lengths, sizes = state.row()
    weights = lengths * sizes if biased else lengths
    total = int(weights.sum())
    r = int(rng.integers(total))
    i = int(np.searchsorted(np.cumsum(weights), r, side="right"))
    state.transition_to(int(thresholds[i]))
    return state


STOP_CONDUCTANCE = "conductance"
STOP_HORIZON = "horizon"
STOP_BUDGET = "budget"


@dataclass(frozen=True)
class StoppingRule:
    """Stop at the first ``t`` with ``phi(S_t) <= theta``, ``t == T`` or ``cost_t > B``."""

    T: int
    B: float
    theta: float

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("horizon T must be at least 1")
        if self.B < 0:
            raise ValueError("budget B must be nonnegative")
        if not 0 <= self.theta <= 1:
            raise ValueError("theta must lie in [0, 1]")


@dataclass
class StepRecord:
    step: int
    size: int
    volume: int
    conductance: float
    cost: int

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "size": self.size,
            "volume": self.volume,
            "conductance": self.conductance,
            "cost": self.cost,
        }


@dataclass
class EspTranscript:
    """Sample path of one stopped ESP run."""

    records: list[StepRecord]
    stop_reason: str
    final: NodeSet
    final_cost: int
    path: list[NodeSet] | None = None
    rule: StoppingRule | None = None

    @property
    def tau(self) -> int:
        return self.records[-1].step

    @property
    def min_conductance(self) -> float:
        return min(r.conductance for r in self.records)

    def to_jsonl(self) -> Iterator[str]:
        for r in self.records:
            row = r.as_dict()
            row["stop_reason"] = self.stop_reason if r.step == self.tau else None
            yield json.dumps(row)


def run_esp(
    g: Graph,
    v: int,
    rule: StoppingRule,
    rng,
    *,
    keep_path: bool = False,
) -> EspTranscript:
    """Run the volume-biased ESP from ``{v}`` under ``rule``.

    ``phi(S_0)`` is tested before the first step; afterwards the stop
    conditions are checked in the order conductance, horizon, budget.
    """
    check_graph(g)
    v = check_node(g, v)
    rng = check_random_state(rng)
    state = EspState(g, NodeSet.of(g, [v]))

    def snapshot() -> StepRecord:
        return StepRecord(state.step, state.size, state.volume, state.conductance(), state.cost)

    records = [snapshot()]
    path = [state.current] if keep_path else None
    reason = None
    if records[0].conductance <= rule.theta:
        reason = STOP_CONDUCTANCE
    while reason is None:
        esp_step(g, state, rng, biased=True)
        records.append(snapshot())
        if path is not None:
            path.append(state.current)
        if records[-1].conductance <= rule.theta:
            reason = STOP_CONDUCTANCE
        elif state.step >= rule.T:
            reason = STOP_HORIZON
        elif state.cost > rule.B:
            reason = STOP_BUDGET
    return EspTranscript(records, reason, state.current, state.cost, path, rule)


@dataclass(frozen=True)
class SeedSetGuarantee:
    """Success probability and overlap promised for given ``(alpha, beta)``."""

    alpha: float
    beta: float

    @property
    def success_probability(self) -> float:
        return 1 - 2 / self.alpha - 1 / self.beta

    @property
    def overlap(self) -> float:
        return 1 - self.beta / 10

    def conductance_premise(self, gamma: float, m: int) -> float:
        """Largest ``phi(S)`` for which the guarantee applies."""
        return gamma**2 / (480 * self.alpha * math.log(m))


def seed_set_rule(m: int, M: float, gamma: float, alpha: float = 5.0) -> StoppingRule:
    """``T = ceil(4 alpha ln m / gamma^2)``, ``B = ceil(5 alpha M sqrt(T ln m))``, ``theta = gamma``."""
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if M < 0:
        raise ValueError("volume target M must be nonnegative")
    log_m = math.log(m)
    T = math.ceil(4 * alpha * log_m / gamma**2)
    B = math.ceil(5 * alpha * M * math.sqrt(T * log_m))
    return StoppingRule(T=max(T, 1), B=B, theta=gamma)


def grow_seed_set(
    g: Graph,
    v: int,
    M: float,
    gamma: float,
    rng,
    alpha: float = 5.0,
    beta: float = 2.5,
) -> EspTranscript:
    """Grow a seed set around ``v``; the final transcript set is the seed set.

    ``beta`` only enters the guarantee (see :class:`SeedSetGuarantee`), not
    the run itself.
    """
    if beta <= 0 or alpha <= 0:
        raise ValueError("alpha and beta must be positive")
    rule = seed_set_rule(g.m, M, gamma, alpha)
    return run_esp(g, v, rule, rng)
