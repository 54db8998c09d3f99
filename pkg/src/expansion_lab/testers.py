"""Expansion testers: collision-counting baseline, unseeded and seeded fast-forward testers.

All testers share :class:`TesterConfig` and return a :class:`Verdict`.  The
estimator classes at the bottom wrap the functions in a scikit-learn style
interface (``get_params``/``set_params``, ``fit``/``predict``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_graph, check_random_state
from .esp import StoppingRule, run_esp
from .graph import Graph, NodeSet, QueryLedger, set_expansion
from .qff import BACKENDS, estimate_norm, qram_prep_cost
from .walks import simulate_walks

ACCEPT = "accept"
REJECT = "reject"
REASON_CUT = "cut-witness"
REASON_NORM = "norm-threshold"
REASON_NONE = "none"

NORM_GAP = math.sqrt(1 + 1 / 256) - 1

# Desk profile: fewer outer iterations and shortened walks/ESP runs.  The
# paper profile keeps every constant of the analysis.
PROFILES: dict[str, dict[str, float]] = {
    "paper": {
        "t_scale": 1.0,
        "T_scale": 1.0,
        "B_scale": 1.0,
        "gr_walks": 4.0,
        "gr_slack": 1 / 512,
    },
    "desk": {
        "K": 40,
        "t_scale": 1 / 64,
        "T_scale": 1 / 64,
        "B_scale": 1 / 4096,
        "gr_walks": 20.0,
        "gr_slack": 1 / 2,
    },
}

OVERRIDE_KEYS = frozenset(
    {"K", "t", "T", "B", "theta", "M", "delta", "t_scale", "T_scale", "B_scale", "gr_walks", "gr_slack"}
)


@dataclass(frozen=True)
class TesterConfig:
    """Tester inputs.  ``overrides`` replace individual derived parameters."""

    n: int
    d: int
    phi: float
    eps: float
    profile: str = "paper"
    backend: str = "noisy-model"
    overrides: dict[str, float] = field(default_factory=dict)
    rd: float = 1.0
    norm_method: str = "walk"

    def __post_init__(self):
        if self.n < 2 or self.d < 1:
            raise ValueError("need n >= 2 and d >= 1")
        if not 0 < self.phi <= self.d:
            raise ValueError("expansion parameter must satisfy 0 < phi <= d")
        if not 0 < self.eps < 1:
            raise ValueError("promise parameter must lie in (0, 1)")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        unknown = set(self.overrides) - OVERRIDE_KEYS
        if unknown:
            raise ValueError(f"unknown override keys {sorted(unknown)}")

    @classmethod
    def for_graph(cls, g: Graph, phi: float, eps: float, **kwargs) -> "TesterConfig":
        return cls(n=g.n, d=g.d, phi=phi, eps=eps, **kwargs)

    @property
    def guarantee_applies(self) -> bool:
        return self.d >= 3 and self.eps < 1 / 16

    @property
    def reject_constant(self) -> float:
        """``c = 1/(2400 (2d)^2 r_d)`` of the reject promise."""
        return 1 / (2400 * (2 * self.d) ** 2 * self.rd)

    def setting(self, key: str) -> float | None:
        if key in self.overrides:
            return self.overrides[key]
        return PROFILES[self.profile].get(key)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class IterationParams:
    n: int
    d: int
    phi: float
    m: float
    t: int
    delta: float
    K: int
    theta: float
    M: int
    B: int
    T: int

    def eps_prime(self, size: int) -> float:
        """Estimator precision for a seed set of ``size`` nodes."""
        return math.sqrt(size / self.n) * NORM_GAP / 4

    def threshold(self, size: int) -> float:
        return math.sqrt(size / self.n * (1 + 1 / self.n)) + self.eps_prime(size)

    @property
    def rule(self) -> StoppingRule:
        return StoppingRule(T=self.T, B=self.B, theta=self.theta)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def iteration_params(cfg: TesterConfig) -> IterationParams:
    """Resolve the tester parameters (natural logs, ceilings on integer quantities)."""
    n, d, phi, eps = cfg.n, cfg.d, cfg.phi, cfg.eps
    m = n * d / 2
    log_n, log_m = math.log(n), math.log(m)
    t = math.ceil(16 * d**2 * log_n / phi**2)
    delta = eps / 1000
    K = math.ceil(200 / (eps * (1 - delta)))
    theta = phi / (2 * d)
    M = math.ceil(n ** (1 / 3) * d)
    B = math.ceil(800 * math.sqrt(5) * M * d * log_m / phi)
    T = math.ceil(320 * d**2 * log_m / phi**2)

    def scaled(value: int, key: str) -> int:
        s = cfg.setting(key)
        return value if s is None else max(1, math.ceil(value * s))

    t, T, B = scaled(t, "t_scale"), scaled(T, "T_scale"), scaled(B, "B_scale")
    o = {k: cfg.setting(k) for k in ("K", "t", "T", "B", "theta", "M", "delta")}
    if o["delta"] is not None:
        delta = float(o["delta"])
    return IterationParams(
        n=n,
        d=d,
        phi=phi,
        m=m,
        t=int(o["t"]) if o["t"] is not None else t,
        delta=delta,
        K=int(o["K"]) if o["K"] is not None else K,
        theta=float(o["theta"]) if o["theta"] is not None else theta,
        M=int(o["M"]) if o["M"] is not None else M,
        B=int(o["B"]) if o["B"] is not None else B,
        T=int(o["T"]) if o["T"] is not None else T,
    )


@dataclass
class Verdict:
    decision: str
    reason: str
    witness: NodeSet | None
    transcript: list[dict]
    ledger: QueryLedger
    params: dict

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT

    def as_dict(self) -> dict:
        return {
            "decision": self.decision,
            "reason": self.reason,
            "witness": None if self.witness is None else self.witness.members.tolist(),
            "iterations": self.transcript,
            "ledger": self.ledger.as_dict(),
            "params": self.params,
        }


def _check(g: Graph, cfg: TesterConfig) -> None:
    check_graph(g)
    if g.n != cfg.n or g.d != cfg.d:
        raise ValueError(f"config (n={cfg.n}, d={cfg.d}) does not match graph (n={g.n}, d={g.d})")


def seeded_qff_tester(g: Graph, cfg: TesterConfig, rng=None) -> Verdict:
    """Seed-set tester: grow a set by the ESP, then test the norm of its walk state."""
    _check(g, cfg)
    rng = check_random_state(rng)
    p = iteration_params(cfg)
    rule = p.rule
    ledger = QueryLedger()
    rows: list[dict] = []
    for it in range(p.K):
        v = int(rng.integers(g.n))
        ledger.charge(uniform_node=1)
        esp = run_esp(g, v, rule, rng)
        ledger.charge(esp=esp.final_cost)
        S = esp.final
        row = {"iteration": it, "seed": v, "esp_stop": esp.stop_reason, "tau": esp.tau,
               "size": S.size, "esp_cost": esp.final_cost}
        rows.append(row)
        if 2 * S.size <= g.n:
            expansion = set_expansion(g, S)
            row["expansion"] = expansion
            if expansion <= cfg.phi / 2:
                return Verdict(REJECT, REASON_CUT, S, rows, ledger, p.as_dict())
        ledger.charge(qram=qram_prep_cost(S.size, g.n))
        est = estimate_norm(g, S, p.t, p.eps_prime(S.size), p.delta, cfg.backend, rng,
                            ledger=ledger, method=cfg.norm_method)
        thr = p.threshold(S.size)
        row.update(estimate=est.value, threshold=thr)
        if est.value > thr:
            return Verdict(REJECT, REASON_NORM, None, rows, ledger, p.as_dict())
    return Verdict(ACCEPT, REASON_NONE, None, rows, ledger, p.as_dict())


def qff_tester(g: Graph, cfg: TesterConfig, rng=None) -> Verdict:
    """Unseeded tester: estimate the walk norm from single uniformly random nodes."""
    _check(g, cfg)
    rng = check_random_state(rng)
    p = iteration_params(cfg)
    ledger = QueryLedger()
    rows: list[dict] = []
    eps1 = p.eps_prime(1)
    thr = p.threshold(1)
    for it in range(p.K):
        v = int(rng.integers(g.n))
        ledger.charge(uniform_node=1, qram=qram_prep_cost(1, g.n))
        est = estimate_norm(g, NodeSet.of(g, [v]), p.t, eps1, p.delta, cfg.backend, rng,
                            ledger=ledger, method=cfg.norm_method)
        rows.append({"iteration": it, "seed": v, "size": 1, "estimate": est.value, "threshold": thr})
        if est.value > thr:
            return Verdict(REJECT, REASON_NORM, None, rows, ledger, p.as_dict())
    return Verdict(ACCEPT, REASON_NONE, None, rows, ledger, p.as_dict())


def gr_params(cfg: TesterConfig) -> dict[str, float]:
    p = iteration_params(cfg)
    K = cfg.setting("K")
    walks_factor = cfg.setting("gr_walks")
    return {
        "starts": int(K) if K is not None else math.ceil(8 / cfg.eps),
        "walks": math.ceil(walks_factor * math.sqrt(cfg.n)),
        "t": p.t,
        "slack": float(cfg.setting("gr_slack")),
    }


def count_collisions(endpoints: np.ndarray) -> int:
    """Number of unordered pairs of walks sharing an endpoint."""
    _, counts = np.unique(endpoints, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def gr_tester(g: Graph, cfg: TesterConfig, rng=None) -> Verdict:
    """Collision-counting baseline: many short walks per start node, reject on excess collisions."""
    _check(g, cfg)
    rng = check_random_state(rng)
    gp = gr_params(cfg)
    N, t = gp["walks"], gp["t"]
    pairs = N * (N - 1) // 2
    thr = (1 + gp["slack"]) * pairs / g.n
    ledger = QueryLedger()
    rows: list[dict] = []
    for it in range(gp["starts"]):
        v = int(rng.integers(g.n))
        ends = simulate_walks(g, np.full(N, v), t, rng)
        ledger.charge(uniform_node=1, neighbor=N * t)
        c = count_collisions(ends)
        rows.append({"iteration": it, "seed": v, "collisions": c, "threshold": thr})
        if c > thr:
            return Verdict(REJECT, REASON_NORM, None, rows, ledger, gp)
    return Verdict(ACCEPT, REASON_NONE, None, rows, ledger, gp)


TESTERS = {
    "gr": gr_tester,
    "qff": qff_tester,
    "seeded-qff": seeded_qff_tester,
}


class BaseExpansionTester(BaseEstimator):
    """Estimator wrapper around one tester function.

    ``fit(G)`` runs a single test on ``G`` and stores ``verdict_`` and
    ``decision_``; ``predict(graphs)`` runs one independent test per graph.
    """

    _tester = None

    def __init__(self, phi=0.5, eps=1 / 32, profile="desk", backend="noisy-model",
                 overrides=None, random_state=None):
        self.phi = phi
        self.eps = eps
        self.profile = profile
        self.backend = backend
        self.overrides = overrides
        self.random_state = random_state

    def _config(self, g: Graph) -> TesterConfig:
        return TesterConfig.for_graph(g, self.phi, self.eps, profile=self.profile,
                                      backend=self.backend, overrides=dict(self.overrides or {}))

    def _run(self, g, rng) -> Verdict:
        g = check_graph(g)
        return type(self)._tester(g, self._config(g), rng)

    def fit(self, G, y=None):
        rng = check_random_state(self.random_state)
        self.verdict_ = self._run(G, rng)
        self.decision_ = self.verdict_.decision
        return self

    def predict(self, graphs) -> np.ndarray:
        if isinstance(graphs, Graph):
            graphs = [graphs]
        rng = check_random_state(self.random_state)
        return np.array([self._run(g, rng).decision for g in graphs])

    def score(self, graphs, y) -> float:
        """Fraction of graphs whose decision matches ``y``."""
        return float(np.mean(self.predict(graphs) == np.asarray(y)))


class SeededQFFTester(BaseExpansionTester):
    _tester = staticmethod(seeded_qff_tester)


class QFFTester(BaseExpansionTester):
    _tester = staticmethod(qff_tester)


class GRTester(BaseExpansionTester):
    _tester = staticmethod(gr_tester)
