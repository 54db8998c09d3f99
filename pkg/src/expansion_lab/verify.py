"""Property suites: exact and statistical checks of the walk, ESP and QFF guarantees.

Each suite returns a list of :class:`Check` records.  Statistical checks pass
when the empirical quantity is within three standard errors of its bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .esp import EspState, StoppingRule, esp_step, kernel_row, run_esp
from .graph import (
    Graph,
    GraphSpec,
    NodeSet,
    expansion_bruteforce,
    generate,
    set_conductance,
    set_conductance_exact,
    set_expansion,
)
from .qff import cheb_coeffs, estimate_norm, fast_forward, norm_exact
from .walks import (
    CANONICAL_CORE,
    INNER_CORE,
    CoreParams,
    collision_probability,
    diffusion_core,
    inner_core_horizon,
    mixing_norm_bound,
    monte_carlo_collision,
    stay_probabilities,
    walk_power,
    walk_step,
)


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.suite}/{self.name}: margin={self.margin:.6g} {self.detail}".rstrip()


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


def random_subset(rng: np.random.Generator, n: int, max_size: int | None = None) -> np.ndarray:
    k = int(rng.integers(1, (max_size or n - 1) + 1))
    return np.sort(rng.choice(n, size=k, replace=False))


def low_conductance_instances(seed: int = 0) -> list[tuple[str, Graph, NodeSet]]:
    """Sets with conductance <= 1/120, where the inner-core horizon is at least one step."""
    out = []
    for h in (12, 16, 24):
        g = generate(GraphSpec("dumbbell", n_half=h, bridges=1))
        out.append((f"clique-dumbbell-{h}", g, NodeSet.of(g, range(h))))
    for i, h in enumerate((64, 128)):
        g = generate(GraphSpec("expander-dumbbell", n_half=h, d=4), seed + i)
        out.append((f"expander-dumbbell-{h}", g, NodeSet.of(g, range(h))))
        out.append((f"expander-dumbbell-{h}-plus", g, NodeSet.of(g, range(h + 1))))
    return out


def mixed_instances(seed: int = 0) -> list[Graph]:
    gs = [generate(GraphSpec("random-regular", n=n, d=d), seed + n + d) for n, d in ((16, 3), (64, 4), (200, 4))]
    gs.append(generate(GraphSpec("dumbbell", n_half=8, d=8)))
    gs.append(generate(GraphSpec("expander-dumbbell", n_half=64, d=4), seed))
    return gs


def suite_eq3(seed: int = 0, samples: int = 300) -> list[Check]:
    rng = np.random.default_rng(seed)
    graphs = mixed_instances(seed)
    worst = math.inf
    for i in range(samples):
        g = graphs[i % len(graphs)]
        S = NodeSet.of(g, random_subset(rng, g.n))
        Phi, phi = set_expansion(g, S), set_conductance(g, S)
        worst = min(worst, phi - Phi / g.d, Phi - phi)
    return [Check("eq3", "expansion-conductance sandwich", worst >= -1e-9, worst)]


def suite_eq1(seed: int = 0, samples: int = 200) -> list[Check]:
    rng = np.random.default_rng(seed)
    graphs = mixed_instances(seed)
    worst = math.inf
    for i in range(samples):
        g = graphs[i % len(graphs)]
        S = NodeSet.of(g, random_subset(rng, g.n))
        t = int(rng.integers(0, 60))
        worst = min(worst, norm_exact(g, S, t) - math.sqrt(S.size / g.n))
    return [Check("eq1", "seeded norm floor sqrt(|S|/n)", worst >= -1e-9, worst)]


def suite_lemma1(seed: int = 0) -> list[Check]:
    grid = [CoreParams(Fraction(a), Fraction(b)) for a in (Fraction(1, 40), Fraction(1, 30), Fraction(1, 10), Fraction(1, 4))
            for b in (Fraction(1, 2), Fraction(3, 4), Fraction(9, 10), Fraction(39, 40))]
    rng = np.random.default_rng(seed)
    sets = [(g, S) for _, g, S in low_conductance_instances(seed)]
    for g in mixed_instances(seed)[:3]:
        for _ in range(4):
            sets.append((g, NodeSet.of(g, random_subset(rng, g.n, g.n // 2))))
    worst = math.inf
    for g, S in sets:
        if set_conductance_exact(g, S) == 0:
            continue
        for params in grid:
            core = diffusion_core(g, S, params)
            worst = min(worst, core.total_degree / S.total_degree - params.size_bound())
    return [Check("lemma1", "diffusion core volume", worst > 0, worst, f"over {len(sets)} sets x {len(grid)} params")]


def inner_core_margins(g: Graph, S: NodeSet) -> tuple[float, float]:
    """Returns ``(d(S')/d(S) - 1/3, min stay-in-core probability - 9/10)``."""
    core = diffusion_core(g, S, CANONICAL_CORE)
    inner = diffusion_core(g, S, INNER_CORE)
    vol_margin = inner.total_degree / S.total_degree - 1 / 3
    h = inner_core_horizon(g, S)
    stay = stay_probabilities(g, core, h)
    idx = np.searchsorted(core.members, inner.members)
    stay_margin = float(stay[idx].min() - 0.9) if inner.size else math.inf
    return vol_margin, stay_margin


def suite_lemma2(seed: int = 0) -> list[Check]:
    vol, stay = math.inf, math.inf
    for _, g, S in low_conductance_instances(seed):
        v, s = inner_core_margins(g, S)
        vol, stay = min(vol, v), min(stay, s)
    return [
        Check("lemma2", "inner core volume > d(S)/3", vol > 0, vol),
        Check("lemma2", "inner core stays in core w.p. >= 9/10", stay >= -1e-12, stay),
    ]


def witness_norm_bound(gamma: float, eps: float, n: int) -> float:
    return (1 + 4 * (3 * gamma / 4 - (1 + eps) / 2) ** 2) / n


def suite_lemma3(seed: int = 0, eps: float = 1 / 16, samples: int = 40) -> list[Check]:
    """Norm lower bound for distributions with a 3/4-overlap on the bad set's core."""
    rng = np.random.default_rng(seed)
    gamma = 0.75
    worst_l1, worst_norm = math.inf, math.inf
    for _, g, A in low_conductance_instances(seed):
        if 2 * A.size > (1 + eps) * g.n:
            continue
        core = diffusion_core(g, A, CANONICAL_CORE)
        outside = np.setdiff1d(np.arange(g.n), core.members)
        h = CANONICAL_CORE.horizon(set_conductance_exact(g, A))
        for _ in range(samples):
            k_in = int(rng.integers(1, core.size + 1))
            k_out = int(rng.integers(0, min(outside.size, k_in // 3) + 1))
            w = np.zeros(g.n)
            w[rng.choice(core.members, k_in, replace=False)] = rng.random(k_in) + 0.1
            if k_out:
                w[rng.choice(outside, k_out, replace=False)] = rng.random(k_out) * 0.1
            w /= w.sum()
            overlap = w[core.members].sum()
            if overlap < gamma:
                continue
            t = int(rng.integers(0, h + 1))
            x = w
            for _ in range(t):
                x = walk_step(g, x)
            u = np.full(g.n, 1 / g.n)
            worst_l1 = min(worst_l1, x @ x - (1 + np.abs(x - u).sum() ** 2) / g.n)
            worst_norm = min(worst_norm, x @ x - witness_norm_bound(gamma, eps, g.n))
    return [
        Check("lemma3", "||w||^2 >= (1 + ||w-u||_1^2)/n", worst_l1 >= -1e-12, worst_l1),
        Check("lemma3", "overlap norm lower bound", worst_norm >= -1e-12, worst_norm),
    ]


def suite_mixing(seed: int = 0) -> list[Check]:
    """Per-node norm cap after ``ceil(16 d^2 Phi^-2 ln n)`` steps on verified expanders."""
    worst = math.inf
    count = 0
    for i, (n, d) in enumerate(((12, 3), (16, 3), (16, 4), (20, 4))):
        g = generate(GraphSpec("random-regular", n=n, d=d), seed + i)
        Phi = expansion_bruteforce(g)
        if Phi == 0:
            continue
        t = math.ceil(16 * d**2 * math.log(n) / Phi**2)
        cap = mixing_norm_bound(n)
        for v in range(n):
            worst = min(worst, cap - math.sqrt(collision_probability(g, v, t)))
        count += 1
    return [Check("mixing", "||P^t e_v|| <= sqrt((1+1/n)/n)", worst >= 0, worst, f"{count} graphs")]


def suite_collision(seed: int = 0, pairs: int = 20000, instances: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = -math.inf
    graphs = mixed_instances(seed)
    for i in range(instances):
        g = graphs[i % len(graphs)]
        v, t = int(rng.integers(g.n)), int(rng.integers(1, 8))
        p = collision_probability(g, v, t)
        freq = monte_carlo_collision(g, v, t, pairs, rng)
        worst = max(worst, abs(freq - p) / max(binomial_se(p, pairs), 1e-12))
    return [Check("collision", "Monte Carlo vs ||P^t e_v||^2 (in SEs)", worst <= 3, 3 - worst)]


def suite_martingale(seed: int = 0, rows: int = 500) -> list[Check]:
    rng = np.random.default_rng(seed)
    graphs = mixed_instances(seed)
    dev = Fraction(0)
    mass = Fraction(0)
    nested = True
    for i in range(rows):
        g = graphs[i % len(graphs)]
        S = NodeSet.of(g, random_subset(rng, g.n))
        row = kernel_row(g, S)
        dev = max(dev, abs(row.expected_volume() - S.total_degree))
        mass = max(mass, abs(sum(row.ordinary) - 1), abs(sum(row.biased) - 1))
        nested &= all(np.isin(a.members, b.members).all() for a, b in zip(row.candidates, row.candidates[1:]))
        nested &= row.candidates[0].size > 0 or row.biased[0] == 0
    return [
        Check("martingale", "E_K[d(S')] = d(S)", dev == 0, float(dev)),
        Check("martingale", "K and K-hat rows sum to 1", mass == 0, float(mass)),
        Check("martingale", "candidates nested, K-hat(empty) = 0", nested, 0.0),
    ]


def suite_chebyshev(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst_grid, worst_ff = -math.inf, -math.inf
    x = np.linspace(-1, 1, 1001)
    for t, eps in ((1, 0.5), (10, 1e-3), (100, 1e-6), (1000, 1e-8), (2000, 1e-4)):
        c = cheb_coeffs(t, eps)
        worst_grid = max(worst_grid, np.abs(x**t - c(x)).max() / eps)
    g = generate(GraphSpec("random-regular", n=128, d=4), seed)
    for t, eps in ((50, 1e-8), (500, 1e-6), (2000, 1e-4)):
        S = NodeSet.of(g, random_subset(rng, g.n, 10))
        exact = walk_power(g, S, t) * math.sqrt(S.size)
        worst_ff = max(worst_ff, np.linalg.norm(fast_forward(g, S, t, eps) - exact) / eps)
    return [
        Check("chebyshev", "grid sup error / eps", worst_grid <= 1, 1 - worst_grid),
        Check("chebyshev", "fast-forward 2-norm error / eps", worst_ff <= 1, 1 - worst_ff),
    ]


def esp_instance(seed: int = 0) -> Graph:
    return generate(GraphSpec("random-regular", n=256, d=4), seed)


def suite_lemma8(seed: int = 0, runs: int = 500, T: int = 40, B: float = 2000, theta: float = 0.05) -> list[Check]:
    g = esp_instance(seed)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(runs):
        tr = run_esp(g, int(rng.integers(g.n)), StoppingRule(T, B, theta), rng)
        ratios.append(tr.final_cost / tr.records[-1].volume)
    ratios = np.array(ratios)
    bound = 1 + 4 * math.sqrt(T * math.log(g.m))
    se = ratios.std(ddof=1) / math.sqrt(runs)
    margin = bound + 3 * se - ratios.mean()
    return [Check("lemma8", "mean cost/d(S_tau) <= 1 + 4 sqrt(T ln m)", margin >= 0, margin,
                  f"mean={ratios.mean():.3f} bound={bound:.3f}")]


def suite_lemma10(seed: int = 0, runs: int = 500, T: int | None = None) -> list[Check]:
    g = generate(GraphSpec("expander-dumbbell", n_half=256, d=4), seed)
    log_m = math.log(g.m)
    if T is None:
        T = math.ceil(64 * log_m)  # makes the c=4 level 1/2
    level = 2 * math.sqrt(4 * log_m / T)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(runs):
        # stopping at the level is equivalent to tracking the running minimum
        tr = run_esp(g, int(rng.integers(g.n)), StoppingRule(T, math.inf, min(level, 1.0)), rng)
        hits += tr.stop_reason == "conductance" and tr.tau < T
    freq = hits / runs
    margin = freq - (0.75 - 3 * binomial_se(0.75, runs))
    return [Check("lemma10", "Pr(min_{t<T} phi(S_t) <= 2 theta_T) >= 3/4", margin >= 0, margin,
                  f"freq={freq:.3f} level={level:.3f}")]


def suite_lemma9(seed: int = 0, runs: int = 400, beta: float = 2.0) -> list[Check]:
    g = generate(GraphSpec("expander-dumbbell", n_half=128, d=4), seed)
    A = NodeSet.of(g, range(128))
    T = 12
    stay = stay_probabilities(g, A, T)
    v = int(A.members[np.argmax(stay)])
    p_escape = 1 - float(stay.max())
    rng = np.random.default_rng(seed)
    inside = A.mask(g.n)
    hits = 0
    for _ in range(runs):
        st = EspState(g, NodeSet.of(g, [v]))
        worst = 1.0
        for _ in range(T):
            esp_step(g, st, rng)
            worst = min(worst, np.count_nonzero(st.inside & inside) / st.size)
        hits += worst >= 1 - beta * p_escape
    freq = hits / runs
    target = 1 - 1 / beta
    margin = freq - (target - 3 * binomial_se(target, runs))
    return [Check("lemma9", "ESP overlap with a sticky set", margin >= 0, margin, f"freq={freq:.3f}")]


def suite_estimator(seed: int = 0, calls: int = 5000) -> list[Check]:
    g = generate(GraphSpec("random-regular", n=64, d=4), seed)
    S = NodeSet.of(g, [0, 1, 2])
    rng = np.random.default_rng(seed)
    eps, delta = 0.01, 0.05
    ok = sum(estimate_norm(g, S, 5, eps, delta, "noisy-model", rng).within_precision for _ in range(calls))
    freq = ok / calls
    margin = freq - (1 - delta - 3 * binomial_se(1 - delta, calls))
    return [Check("estimator", "within-eps' rate >= 1 - delta", margin >= 0, margin, f"freq={freq:.4f}")]


SUITES: dict[str, Callable[..., list[Check]]] = {
    "eq1": suite_eq1,
    "eq3": suite_eq3,
    "lemma1": suite_lemma1,
    "lemma2": suite_lemma2,
    "lemma3": suite_lemma3,
    "lemma8": suite_lemma8,
    "lemma9": suite_lemma9,
    "lemma10": suite_lemma10,
    "mixing": suite_mixing,
    "collision": suite_collision,
    "martingale": suite_martingale,
    "chebyshev": suite_chebyshev,
    "estimator": suite_estimator,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name == "all":
        return [c for key in SUITES for c in SUITES[key](seed)]
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](seed)
