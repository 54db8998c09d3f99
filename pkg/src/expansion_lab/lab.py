"""Experiment orchestration: seeded trial batches, record files and scaling fits."""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ._validation import derive_rng
from .graph import Graph, GraphSpec, QueryLedger, generate
from .testers import ACCEPT, REASON_NONE, TESTERS, TesterConfig, Verdict

SCHEMA_VERSION = 1
TESTER_STREAM = 0
GRAPH_STREAM = 1


@dataclass
class ExperimentPlan:
    graphs: list[GraphSpec]
    tester: str
    phi: float
    eps: float
    trials: int = 30
    seed: int = 0
    profile: str = "desk"
    backend: str = "noisy-model"
    overrides: dict[str, float] = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be at least 1")
        if self.tester not in TESTERS and self.tester != "constant":
            raise ValueError(f"unknown tester {self.tester!r}")
        for spec in self.graphs:
            spec.validate()


def constant_tester(g: Graph, cfg: TesterConfig, rng=None) -> Verdict:
    """Calibration control for slope fits: fixed cost regardless of ``n``."""
    ledger = QueryLedger()
    ledger.charge(uniform_node=1000)
    return Verdict(ACCEPT, REASON_NONE, None, [], ledger, {})


def tester_fn(name: str) -> Callable[..., Verdict]:
    if name == "constant":
        return constant_tester
    try:
        return TESTERS[name]
    except KeyError:
        raise ValueError(f"unknown tester {name!r}; choose from {sorted(TESTERS)}") from None


def experiment_id(tester: str, cfg: TesterConfig, fingerprint: str, seed: int) -> str:
    blob = json.dumps([tester, cfg.as_dict(), fingerprint, seed], sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def trial_record(exp_id: str, trial: int, g: Graph, tester: str, cfg: TesterConfig,
                 verdict: Verdict, wall: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment_id": exp_id,
        "trial": trial,
        "graph_fingerprint": g.fingerprint,
        "tester": tester,
        "config": cfg.as_dict(),
        **verdict.as_dict(),
        "wall_time": wall,
    }


def run_trials(g: Graph, tester: str, cfg: TesterConfig, trials: int, seed: int,
               threads: int = 1) -> list[dict]:
    """Independent tester runs; trial ``i`` uses stream ``(seed, i, TESTER_STREAM)``."""
    fn = tester_fn(tester)
    exp_id = experiment_id(tester, cfg, g.fingerprint, seed)

    def one(i: int) -> dict:
        start = time.perf_counter()
        verdict = fn(g, cfg, derive_rng(seed, i, TESTER_STREAM))
        return trial_record(exp_id, i, g, tester, cfg, verdict, time.perf_counter() - start)

    if threads <= 1:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(trials)))


def write_records(records: Iterable[dict], path: str | Path, append: bool = False) -> None:
    with open(path, "a" if append else "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def read_records(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def summarize(records: Sequence[dict]) -> dict:
    decisions = [r["decision"] for r in records]
    ledgers = [r["ledger"] for r in records]
    keys = ledgers[0].keys() if ledgers else []
    return {
        "trials": len(records),
        "accept_rate": decisions.count(ACCEPT) / len(records),
        "reject_rate": 1 - decisions.count(ACCEPT) / len(records),
        "reasons": {k: sum(1 for r in records if r["reason"] == k) for k in sorted({r["reason"] for r in records})},
        "mean_ledger": {k: float(np.mean([lg[k] for lg in ledgers])) for k in keys},
    }


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class ScalingResult:
    tester: str
    ns: list[int]
    mean_cost: list[float]
    components: dict[str, list[float]]
    slope: float
    component_slopes: dict[str, float]
    records: list[dict]

    def report(self) -> str:
        lines = [f"tester={self.tester}"]
        for i, n in enumerate(self.ns):
            comp = " ".join(f"{k}={v[i]:.4g}" for k, v in self.components.items())
            lines.append(f"  n={n:6d} mean_total={self.mean_cost[i]:.4g} {comp}")
        lines.append(f"  slope(total)={self.slope:.4f}")
        for k, s in self.component_slopes.items():
            lines.append(f"  slope({k})={s:.4f}")
        return "\n".join(lines)


def scaling_sweep(tester: str, ns: Sequence[int], d: int, phi: float, eps: float, trials: int,
                  seed: int, profile: str = "desk", overrides: dict | None = None,
                  backend: str = "noisy-model", threads: int = 1) -> ScalingResult:
    """Run ``tester`` on random ``d``-regular graphs over ``ns`` and fit ledger slopes."""
    ns = list(ns)
    if len(ns) < 4:
        raise ValueError("scaling fit needs at least four sizes")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("sizes must be strictly ascending")
    means, comps, records = [], {"esp": [], "quantum": [], "qram": []}, []
    for n in ns:
        g = generate(GraphSpec("random-regular", n=n, d=d), int(derive_rng(seed, n, GRAPH_STREAM).integers(2**32)))
        cfg = TesterConfig.for_graph(g, phi, eps, profile=profile, backend=backend, overrides=dict(overrides or {}))
        recs = run_trials(g, tester, cfg, trials, seed, threads)
        records.extend(recs)
        means.append(float(np.mean([r["ledger"]["total"] for r in recs])))
        for k in comps:
            comps[k].append(float(np.mean([r["ledger"][k] for r in recs])))
    slopes = {k: fit_loglog_slope(ns, v) for k, v in comps.items() if all(x > 0 for x in v)}
    return ScalingResult(tester, ns, means, comps, fit_loglog_slope(ns, means), slopes, records)
