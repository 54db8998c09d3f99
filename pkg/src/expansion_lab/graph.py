"""Bounded-degree multigraphs, node sets, expansion measures and generators.

Graphs are stored as slot lists: node ``v`` owns ``degree(v)`` ordered
neighbor slots and a self-loop occupies exactly one slot.  After
:func:`regularize` every node has exactly ``d`` slots, which is the form all
random-walk code expects.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

MAX_BRUTEFORCE_NODES = 22
PAIRING_RETRIES = 1000


class Graph:
    """Immutable undirected multigraph with a degree bound.

    Parameters
    ----------
    n : int
        Number of nodes, labelled ``0..n-1``.
    edges : iterable of (u, v)
        Edge list.  ``(v, v)`` is a self-loop and takes one slot of ``v``.
    d : int, optional
        Degree bound.  Defaults to the maximum degree.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], d: int | None = None):
        n = int(n)
        if n < 1:
            raise ValueError("graph needs at least one node")
        slots: list[list[int]] = [[] for _ in range(n)]
        m = 0
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                slots[u].append(u)
            else:
                slots[u].append(v)
                slots[v].append(u)
            m += 1
        self._init_from_slots(slots, d, m)

    def _init_from_slots(self, slots: Sequence[Sequence[int]], d: int | None, m: int) -> None:
        degrees = np.fromiter((len(s) for s in slots), dtype=np.int64, count=len(slots))
        dmax = int(degrees.max()) if len(degrees) else 0
        if d is None:
            d = dmax
        if d < dmax:
            raise ValueError(f"degree bound {d} below maximum degree {dmax}")
        self.n = len(slots)
        self.d = int(d)
        self.m = int(m)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(degrees, out=self.indptr[1:])
        self.indices = np.fromiter(
            (u for s in slots for u in s), dtype=np.int64, count=int(self.indptr[-1])
        )
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @classmethod
    def from_slots(cls, slots: Sequence[Sequence[int]], d: int | None = None) -> "Graph":
        """Build directly from per-node slot lists (must already be symmetric)."""
        g = cls.__new__(cls)
        loops = sum(1 for v, s in enumerate(slots) for u in s if u == v)
        half = sum(len(s) for s in slots) - loops
        if half % 2:
            raise ValueError("slot lists are not symmetric")
        g._init_from_slots([list(map(int, s)) for s in slots], d, half // 2 + loops)
        g._check_symmetric()
        return g

    def _check_symmetric(self) -> None:
        counts: dict[tuple[int, int], int] = {}
        for v in range(self.n):
            for u in self.neighbors(v):
                u = int(u)
                if u != v:
                    counts[(v, u)] = counts.get((v, u), 0) + 1
        for (v, u), c in counts.items():
            if counts.get((u, v), 0) != c:
                raise ValueError(f"asymmetric adjacency between {v} and {u}")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.n):
            raise ValueError("neighbor id out of range")

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, d={self.d}, regular={self.is_regular})"

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        """Slot contents of ``v`` in slot order (self-loops appear as ``v``)."""
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    @cached_property
    def is_regular(self) -> bool:
        return bool(np.all(self.degrees == self.d))

    @cached_property
    def slots(self) -> np.ndarray:
        """``(n, d)`` slot table; only defined for regular graphs."""
        if not self.is_regular:
            raise ValueError("slot table requires a regular graph; call regularize first")
        out = self.indices.reshape(self.n, self.d)
        return out

    @cached_property
    def self_loops(self) -> np.ndarray:
        owner = np.repeat(np.arange(self.n), self.degrees)
        return np.bincount(owner[self.indices == owner], minlength=self.n)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Slot-count matrix: ``A[u, v]`` = number of slots of ``v`` pointing to ``u``."""
        owner = np.repeat(np.arange(self.n), self.degrees)
        a = sp.csr_matrix(
            (np.ones(self.indices.size), (self.indices, owner)), shape=(self.n, self.n)
        )
        a.sum_duplicates()
        return a

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.array([self.n, self.d], dtype=np.int64).tobytes())
        h.update(self.indptr.tobytes())
        h.update(self.indices.tobytes())
        return h.hexdigest()[:16]

    def edges(self) -> list[tuple[int, int]]:
        """Edge list with each non-loop edge once (``u < v``) and each loop once."""
        out = []
        for v in range(self.n):
            for u in self.neighbors(v):
                u = int(u)
                if v <= u:
                    out.append((v, u))
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.d == other.d
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class NodeSet:
    """Sorted set of node ids with its cached total degree ``d(S)``."""

    members: np.ndarray
    total_degree: int

    @classmethod
    def of(cls, g: Graph, nodes: Iterable[int]) -> "NodeSet":
        arr = np.unique(np.fromiter((int(v) for v in nodes), dtype=np.int64))
        if arr.size and (arr[0] < 0 or arr[-1] >= g.n):
            raise ValueError("node id out of range")
        arr.setflags(write=False)
        return cls(arr, int(g.degrees[arr].sum()))

    @classmethod
    def from_mask(cls, g: Graph, mask: np.ndarray) -> "NodeSet":
        return cls.of(g, np.flatnonzero(mask))

    @property
    def size(self) -> int:
        return int(self.members.size)

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(self.members.tolist())

    def __contains__(self, v: object) -> bool:
        i = np.searchsorted(self.members, v)
        return bool(i < self.members.size and self.members[i] == v)

    def mask(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        out[self.members] = True
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodeSet):
            return NotImplemented
        return np.array_equal(self.members, other.members)

    def __hash__(self) -> int:
        return hash(self.members.tobytes())

    def __repr__(self) -> str:
        shown = self.members[:8].tolist()
        tail = ", ..." if self.size > 8 else ""
        return f"NodeSet({shown}{tail}; size={self.size}, vol={self.total_degree})"


@dataclass
class QueryLedger:
    """Per-trial cost counters.  Every counter only ever grows."""

    uniform_node: int = 0
    degree: int = 0
    neighbor: int = 0
    esp: int = 0
    quantum: int = 0
    qram: int = 0

    def charge(self, **amounts: int) -> None:
        for key, amount in amounts.items():
            if amount < 0:
                raise ValueError("ledger charges must be nonnegative")
            setattr(self, key, getattr(self, key) + int(amount))

    @property
    def classical(self) -> int:
        return self.uniform_node + self.degree + self.neighbor + self.esp

    @property
    def total(self) -> int:
        return self.classical + self.quantum + self.qram

    def as_dict(self) -> dict[str, int]:
        return {
            "uniform_node": self.uniform_node,
            "degree": self.degree,
            "neighbor": self.neighbor,
            "esp": self.esp,
            "quantum": self.quantum,
            "qram": self.qram,
            "total": self.total,
        }


def regularize(g: Graph, d: int | None = None) -> Graph:
    """Pad every node with trailing self-loop slots up to exactly ``d`` slots."""
    d = g.d if d is None else int(d)
    if d < g.max_degree:
        raise ValueError(f"degree bound {d} below maximum degree {g.max_degree}")
    if g.is_regular and d == g.d:
        return g
    slots = [g.neighbors(v).tolist() + [v] * (d - g.degree(v)) for v in range(g.n)]
    out = Graph.__new__(Graph)
    out._init_from_slots(slots, d, g.m + int(d * g.n - g.degrees.sum()))
    return out


def _as_mask(g: Graph, S: NodeSet | Iterable[int]) -> np.ndarray:
    if isinstance(S, NodeSet):
        return S.mask(g.n)
    return NodeSet.of(g, S).mask(g.n)


def boundary(g: Graph, S: NodeSet | Iterable[int]) -> np.ndarray:
    """Outer vertex boundary: nodes outside ``S`` with a neighbor in ``S``."""
    mask = _as_mask(g, S)
    owner = np.repeat(np.arange(g.n), g.degrees)
    hit = np.zeros(g.n, dtype=bool)
    hit[g.indices[mask[owner]]] = True
    return np.flatnonzero(hit & ~mask)


def cut_size(g: Graph, S: NodeSet | Iterable[int]) -> int:
    """Number of edges between ``S`` and its complement (loops never cross)."""
    mask = _as_mask(g, S)
    owner = np.repeat(np.arange(g.n), g.degrees)
    return int(np.count_nonzero(mask[owner] & ~mask[g.indices]))


def set_expansion(g: Graph, S: NodeSet | Iterable[int]) -> float:
    """Vertex expansion ``|boundary(S)| / |S|``."""
    mask = _as_mask(g, S)
    size = int(mask.sum())
    if size == 0 or size == g.n:
        raise ValueError("vertex expansion is undefined for the empty or full set")
    return boundary(g, np.flatnonzero(mask)).size / size


def set_conductance(g: Graph, S: NodeSet | Iterable[int]) -> float:
    """Conductance ``|E(S, S^c)| / d(S)`` with no volume cap."""
    return float(set_conductance_exact(g, S))


def set_conductance_exact(g: Graph, S: NodeSet | Iterable[int]) -> Fraction:
    mask = _as_mask(g, S)
    if not mask.any():
        raise ValueError("conductance is undefined for the empty set")
    vol = int(g.degrees[mask].sum())
    if vol == 0:
        raise ValueError("conductance is undefined for a zero-volume set")
    return Fraction(cut_size(g, np.flatnonzero(mask)), vol)


def _subset_tables(g: Graph):
    n = g.n
    if n > MAX_BRUTEFORCE_NODES:
        raise ValueError(f"brute force enumeration limited to n <= {MAX_BRUTEFORCE_NODES}")
    nb = np.zeros(n, dtype=np.uint32)
    for v in range(n):
        for u in g.neighbors(v):
            if u != v:
                nb[v] |= np.uint32(1 << int(u))
    reach = np.zeros(1 << n, dtype=np.uint32)
    for i in range(n):
        lo = 1 << i
        reach[lo:2 * lo] = reach[:lo] | nb[i]
    masks = np.arange(1 << n, dtype=np.uint32)
    sizes = np.bitwise_count(masks)
    return masks, reach, sizes


def expansion_bruteforce(g: Graph) -> float:
    """Exact graph vertex expansion by enumerating all sets with ``|S| <= n/2``."""
    if g.n < 2:
        raise ValueError("expansion needs at least two nodes")
    masks, reach, sizes = _subset_tables(g)
    bnd = np.bitwise_count(reach & ~masks)
    ok = (sizes >= 1) & (2 * sizes.astype(np.int64) <= g.n)
    return float(np.min(bnd[ok] / sizes[ok]))


def conductance_bruteforce(g: Graph) -> float:
    """Exact graph conductance, minimum over sets with ``d(S) <= m/2``."""
    n = g.n
    masks, _, sizes = _subset_tables(g)
    deg = g.degrees
    vol = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        lo = 1 << i
        vol[lo:2 * lo] = vol[:lo] + deg[i]
    # cut(S) = vol(S) - 2 e(S) - loops(S); accumulate internal slot counts
    inner = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        lo = 1 << i
        own = np.zeros(lo, dtype=np.int64)
        for u in g.neighbors(i):
            u = int(u)
            if u == i:
                own += 1
            elif u < i:
                own += 2 * ((np.arange(lo) >> u) & 1)
        inner[lo:2 * lo] = inner[:lo] + own
    cut = vol - inner
    ok = (sizes >= 1) & (2 * vol <= g.m) & (vol > 0)
    if not ok.any():
        raise ValueError("no set satisfies the volume cap")
    return float(np.min(cut[ok] / vol[ok]))


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for a test instance.

    Families: ``random-regular`` (``n``, ``d``), ``dumbbell`` (two complete
    graphs on ``n_half`` nodes joined by ``bridges`` edges), ``complete``
    (``n``), ``expander-dumbbell`` (two random ``d``-regular halves on
    ``n_half`` nodes joined by ``bridges`` edges) and ``file`` (``path``).
    """

    family: str
    n: int | None = None
    d: int | None = None
    n_half: int | None = None
    bridges: int = 1
    path: str | None = None
    pad_to: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    FAMILIES = ("random-regular", "dumbbell", "complete", "expander-dumbbell", "file")

    def validate(self) -> None:
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown graph family {self.family!r}")
        if self.family == "random-regular":
            if self.n is None or self.d is None:
                raise ValueError("random-regular needs n and d")
            if (self.n * self.d) % 2:
                raise ValueError("n*d must be even for a random regular graph")
            if not 0 <= self.d < self.n:
                raise ValueError("need 0 <= d < n")
        elif self.family in ("dumbbell", "expander-dumbbell"):
            if self.n_half is None or self.n_half < 2:
                raise ValueError(f"{self.family} needs n_half >= 2")
            if self.bridges < 1 or self.bridges > self.n_half:
                raise ValueError("bridge count must be in [1, n_half]")
            if self.family == "expander-dumbbell":
                if self.d is None or (self.n_half * self.d) % 2 or self.d >= self.n_half:
                    raise ValueError("expander-dumbbell needs d < n_half with n_half*d even")
                if 2 * self.bridges > self.n_half * self.d // 2:
                    raise ValueError("too many bridges for the halves")
        elif self.family == "complete":
            if self.n is None or self.n < 1:
                raise ValueError("complete needs n >= 1")
        elif self.family == "file" and not self.path:
            raise ValueError("file family needs a path")


def _pairing_model(n: int, d: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    stubs = np.repeat(np.arange(n), d)
    for _ in range(PAIRING_RETRIES):
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        if np.any(lo == hi):
            continue
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        return list(zip(lo.tolist(), hi.tolist()))
    raise RuntimeError(f"pairing model failed {PAIRING_RETRIES} times for n={n}, d={d}")


def generate(spec: GraphSpec, seed: int = 0) -> Graph:
    """Build the instance described by ``spec``; deterministic in ``(spec, seed)``."""
    spec.validate()
    rng = np.random.default_rng(seed)
    fam = spec.family
    if fam == "random-regular":
        return Graph(spec.n, _pairing_model(spec.n, spec.d, rng), d=spec.d)
    if fam == "complete":
        n = spec.n
        g = Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)], d=max(n - 1, 0))
        return regularize(g, spec.d) if spec.d is not None else g
    if fam == "dumbbell":
        h = spec.n_half
        edges = [(u, v) for u in range(h) for v in range(u + 1, h)]
        edges += [(u + h, v + h) for u, v in edges]
        edges += [(i, h + i) for i in range(spec.bridges)]
        d = spec.d if spec.d is not None else h
        return regularize(Graph(2 * h, edges), d)
    if fam == "expander-dumbbell":
        h, d = spec.n_half, spec.d
        left = _pairing_model(h, d, rng)
        right = [(u + h, v + h) for u, v in _pairing_model(h, d, rng)]
        # each bridge replaces one edge per half; the two freed stubs become loops
        bridges = []
        for _ in range(spec.bridges):
            a, _a2 = left.pop(0)
            b, _b2 = right.pop(0)
            bridges.append((a, b))
        return regularize(Graph(2 * h, left + right + bridges, d=d), d)
    return read_edgelist(spec.path, pad_to=spec.pad_to)


def write_edgelist(g: Graph, path: str | Path) -> None:
    edges = g.edges()
    lines = [f"{g.n} {len(edges)} {g.d}"] + [f"{u} {v}" for u, v in edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path: str | Path, pad_to: int | None = None) -> Graph:
    """Read the ``n m d`` header format, optionally regularizing to ``pad_to``."""
    text = Path(path).read_text().split("\n")
    rows = [line.split() for line in text if line.strip() and not line.startswith("#")]
    if not rows or len(rows[0]) != 3:
        raise ValueError(f"{path}: expected header 'n m d'")
    n, m, d = (int(x) for x in rows[0])
    edges = [(int(r[0]), int(r[1])) for r in rows[1:]]
    if len(edges) != m:
        raise ValueError(f"{path}: header says {m} edges, found {len(edges)}")
    g = Graph(n, edges, d=d)
    return regularize(g, pad_to) if pad_to is not None else g
