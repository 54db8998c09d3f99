"""Input validation helpers shared by the public functions and estimators."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .graph import Graph, NodeSet


def check_graph(g: object, *, regular: bool = True) -> Graph:
    if not isinstance(g, Graph):
        raise TypeError(f"expected a Graph, got {type(g).__name__}")
    if regular and not g.is_regular:
        raise ValueError("operation requires a regular graph; call regularize(g, d) first")
    return g


def check_node_set(g: Graph, S: NodeSet | Iterable[int], *, nonempty: bool = True) -> NodeSet:
    if not isinstance(S, NodeSet):
        S = NodeSet.of(g, S)
    elif S.size and S.members[-1] >= g.n:
        raise ValueError("node set does not belong to this graph")
    if nonempty and S.size == 0:
        raise ValueError("node set must be nonempty")
    return S


def check_node(g: Graph, v: int) -> int:
    v = int(v)
    if not 0 <= v < g.n:
        raise ValueError(f"node {v} out of range for n={g.n}")
    return v


def check_steps(t: int) -> int:
    if int(t) != t or t < 0:
        raise ValueError(f"step count must be a nonnegative integer, got {t!r}")
    return int(t)


def check_random_state(random_state) -> np.random.Generator:
    """Turn ``None``, an int seed or a Generator into a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (int, np.integer)):
        return np.random.default_rng(random_state)
    raise TypeError(f"cannot build a Generator from {random_state!r}")


def derive_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Independent stream for ``(master_seed, *stream)``, e.g. ``(seed, trial, module)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.default_rng(ss)
