import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expansion_lab.graph import (
    Graph,
    GraphSpec,
    NodeSet,
    QueryLedger,
    boundary,
    conductance_bruteforce,
    cut_size,
    expansion_bruteforce,
    generate,
    read_edgelist,
    regularize,
    set_conductance,
    set_conductance_exact,
    set_expansion,
    write_edgelist,
)


def k4():
    return Graph(4, itertools.combinations(range(4), 2))


def cycle(n):
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def naive_expansion(g, S):
    """Independent oracle: scan every edge listed in the edge list."""
    S = set(S)
    out = {v for u, v in g.edges() if u in S and v not in S} | {u for u, v in g.edges() if v in S and u not in S}
    return Fraction(len(out), len(S))


def naive_min_expansion(g):
    best = None
    for k in range(1, g.n // 2 + 1):
        for S in itertools.combinations(range(g.n), k):
            val = naive_expansion(g, S)
            best = val if best is None else min(best, val)
    return best


class TestGraphConstruction:
    def test_self_loop_takes_one_slot(self):
        g = Graph(2, [(0, 1), (0, 0)])
        assert g.degree(0) == 2 and g.degree(1) == 1 and g.m == 2

    def test_degree_bound_below_max_rejected(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 1), (0, 2)], d=1)

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(ValueError):
            Graph(2, [(0, 2)])

    def test_from_slots_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            Graph.from_slots([[1, 1], [0, 2], [1, 0]])

    def test_slots_table_and_adjacency_symmetric(self):
        g = generate(GraphSpec("random-regular", n=30, d=4), 5)
        assert g.slots.shape == (30, 4)
        A = g.adjacency.toarray()
        assert np.array_equal(A, A.T)
        assert (A.sum(axis=0) == 4).all()

    def test_fingerprint_stable_and_distinguishing(self):
        a = generate(GraphSpec("random-regular", n=20, d=3), 1)
        b = generate(GraphSpec("random-regular", n=20, d=3), 1)
        c = generate(GraphSpec("random-regular", n=20, d=3), 2)
        assert a.fingerprint == b.fingerprint and a == b
        assert a.fingerprint != c.fingerprint


class TestNodeSet:
    def test_members_sorted_unique_and_volume(self):
        g = cycle(6)
        S = NodeSet.of(g, [4, 1, 1, 3])
        assert S.members.tolist() == [1, 3, 4]
        assert S.total_degree == 6 and S.size == 3
        assert 3 in S and 2 not in S

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            NodeSet.of(cycle(4), [4])


class TestRegularize:
    def test_pads_trailing_loops(self):
        g = regularize(Graph(3, [(0, 1), (0, 2)]), 4)
        assert g.neighbors(0).tolist() == [1, 2, 0, 0]
        assert g.degree(0) == 4 and g.is_regular

    def test_regular_graph_unchanged(self):
        g = k4()
        assert regularize(g, 3) is g

    def test_dumbbell_k8_gains_loops_on_non_bridge_nodes(self):
        h = 8
        edges = [(u, v) for u in range(h) for v in range(u + 1, h)]
        edges += [(u + h, v + h) for u, v in edges] + [(0, h)]
        g = regularize(Graph(2 * h, edges), 8)
        loops = g.self_loops
        assert int((loops == 1).sum()) == 14
        assert loops[0] == 0 and loops[h] == 0

    def test_below_max_degree_rejected(self):
        with pytest.raises(ValueError):
            regularize(k4(), 2)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.integers(0, 6))
    def test_preserves_expansion(self, seed, pad):
        rng = np.random.default_rng(seed)
        n = 10
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3]
        g = Graph(n, edges, d=n)
        r = regularize(g, g.max_degree + pad)
        S = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
        assert set_expansion(g, S) == set_expansion(r, S)


class TestMeasures:
    def test_k4_singleton(self):
        assert set_expansion(k4(), [0]) == 3
        assert set_conductance(k4(), [0]) == 1

    def test_dumbbell_side(self):
        g = generate(GraphSpec("dumbbell", n_half=8, d=8))
        A = NodeSet.of(g, range(8))
        assert set_expansion(g, A) == 0.125
        assert set_conductance(g, A) == pytest.approx(1 / 64)
        assert set_conductance_exact(g, A) == Fraction(1, 64)
        assert boundary(g, A).tolist() == [8]
        assert cut_size(g, A) == 1

    def test_isolated_component_zero(self):
        g = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        assert set_expansion(g, [0, 1, 2]) == 0

    def test_full_set_conductance_zero(self):
        assert set_conductance(k4(), range(4)) == 0

    @pytest.mark.parametrize("S", [[], [0, 1, 2, 3]])
    def test_expansion_rejects_empty_or_full(self, S):
        with pytest.raises(ValueError):
            set_expansion(k4(), S)

    def test_conductance_rejects_empty(self):
        with pytest.raises(ValueError):
            set_conductance(k4(), [])

    def test_loops_count_in_volume_not_cut(self):
        g = regularize(Graph(2, [(0, 1)]), 3)
        assert set_conductance_exact(g, [0]) == Fraction(1, 3)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31))
    def test_conductance_expansion_sandwich(self, seed):
        rng = np.random.default_rng(seed)
        g = generate(GraphSpec("random-regular", n=24, d=4), int(rng.integers(100)))
        S = rng.choice(24, size=int(rng.integers(1, 24)), replace=False)
        Phi, phi = set_expansion(g, S), set_conductance(g, S)
        assert Phi / g.d <= phi + 1e-12
        assert phi <= Phi + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31))
    def test_expansion_matches_edge_scan(self, seed):
        rng = np.random.default_rng(seed)
        g = generate(GraphSpec("random-regular", n=14, d=3), int(rng.integers(50)))
        S = rng.choice(14, size=int(rng.integers(1, 14)), replace=False).tolist()
        assert set_expansion(g, S) == pytest.approx(float(naive_expansion(g, S)))


class TestBruteforce:
    @pytest.mark.parametrize(
        "g, expected",
        [
            (k4(), 1.0),
            (Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]), 0.0),
            (cycle(6), 2 / 3),
        ],
        ids=["K4", "two-triangles", "C6"],
    )
    def test_known_values(self, g, expected):
        assert expansion_bruteforce(g) == pytest.approx(expected)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_itertools_enumeration(self, seed):
        g = generate(GraphSpec("random-regular", n=12, d=3), seed)
        assert expansion_bruteforce(g) == pytest.approx(float(naive_min_expansion(g)))

    def test_upper_bounded_by_sampled_sets(self):
        g = generate(GraphSpec("random-regular", n=16, d=3), 3)
        best = expansion_bruteforce(g)
        rng = np.random.default_rng(0)
        for _ in range(200):
            S = rng.choice(16, size=int(rng.integers(1, 9)), replace=False)
            assert best <= set_expansion(g, S) + 1e-12

    def test_size_limit(self):
        with pytest.raises(ValueError):
            expansion_bruteforce(cycle(23))

    def test_graph_conductance_matches_enumeration(self):
        g = generate(GraphSpec("dumbbell", n_half=6, d=6))
        best = min(
            Fraction(cut_size(g, S), g.d * len(S))
            for k in range(1, g.n)
            for S in itertools.combinations(range(g.n), k)
            if g.d * k <= g.m / 2
        )
        assert conductance_bruteforce(g) == pytest.approx(float(best))


class TestGenerate:
    def test_random_regular_degrees(self):
        g = generate(GraphSpec("random-regular", n=8, d=3), 1)
        assert g.is_regular and g.d == 3 and (g.degrees == 3).all()
        assert int(g.self_loops.sum()) == 0

    def test_simple_graph(self):
        g = generate(GraphSpec("random-regular", n=64, d=5 - 1), 3)
        for v in range(g.n):
            nb = g.neighbors(v).tolist()
            assert len(set(nb)) == len(nb) and v not in nb

    def test_deterministic(self):
        spec = GraphSpec("random-regular", n=50, d=4)
        assert generate(spec, 9) == generate(spec, 9)

    def test_dumbbell_instance(self):
        g = generate(GraphSpec("dumbbell", n_half=8, d=8, bridges=1))
        assert g.n == 16 and g.is_regular
        assert set_conductance(g, range(8)) == pytest.approx(1 / 64)

    def test_expander_dumbbell_single_cut_edge(self):
        g = generate(GraphSpec("expander-dumbbell", n_half=32, d=4), 0)
        assert g.is_regular and cut_size(g, range(32)) == 1

    @pytest.mark.parametrize(
        "spec",
        [
            GraphSpec("random-regular", n=7, d=3),
            GraphSpec("dumbbell", n_half=4, bridges=0),
            GraphSpec("nonsense", n=4),
        ],
    )
    def test_infeasible_specs(self, spec):
        with pytest.raises(ValueError):
            generate(spec, 0)


class TestEdgeList:
    def test_roundtrip(self, tmp_path):
        g = generate(GraphSpec("dumbbell", n_half=5, d=6))
        p = tmp_path / "g.txt"
        write_edgelist(g, p)
        header = p.read_text().splitlines()[0].split()
        assert header == [str(g.n), str(g.m), str(g.d)]
        back = read_edgelist(p)
        assert sorted(back.edges()) == sorted(g.edges())
        assert (back.n, back.m, back.d) == (g.n, g.m, g.d)
        q = tmp_path / "again.txt"
        write_edgelist(back, q)
        write_edgelist(read_edgelist(q), tmp_path / "third.txt")
        assert q.read_bytes() == (tmp_path / "third.txt").read_bytes()

    def test_self_loops_written_as_v_v(self, tmp_path):
        g = regularize(Graph(2, [(0, 1)]), 2)
        p = tmp_path / "g.txt"
        write_edgelist(g, p)
        assert p.read_text().splitlines()[1:] == ["0 1", "0 0", "1 1"]

    def test_pad_on_load(self, tmp_path):
        p = tmp_path / "path.txt"
        p.write_text("3 2 2\n0 1\n1 2\n")
        g = read_edgelist(p, pad_to=3)
        assert g.is_regular and g.d == 3 and g.self_loops.tolist() == [2, 1, 2]

    def test_edge_count_mismatch(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("3 5 2\n0 1\n")
        with pytest.raises(ValueError):
            read_edgelist(p)


class TestLedger:
    def test_charges_and_totals(self):
        L = QueryLedger()
        L.charge(uniform_node=2, neighbor=5, esp=10, quantum=7, qram=3)
        assert L.classical == 17 and L.total == 27
        assert L.as_dict()["total"] == 27

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            QueryLedger().charge(quantum=-1)
