import json

import numpy as np
import pytest

from expansion_lab._validation import derive_rng
from expansion_lab.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from expansion_lab.graph import GraphSpec, generate, write_edgelist
from expansion_lab.lab import (
    SCHEMA_VERSION,
    ExperimentPlan,
    fit_loglog_slope,
    read_records,
    run_trials,
    scaling_sweep,
    summarize,
    write_records,
)
from expansion_lab.testers import TesterConfig as Config


def strip_wall(path):
    rows = read_records(path)
    for r in rows:
        r.pop("wall_time")
    return rows


@pytest.fixture
def expander_file(tmp_path):
    p = tmp_path / "e.txt"
    write_edgelist(generate(GraphSpec("random-regular", n=128, d=4), 0), p)
    return p


class TestRng:
    def test_streams_reproducible_and_distinct(self):
        a = derive_rng(7, 3, 0).integers(2**62, size=4)
        b = derive_rng(7, 3, 0).integers(2**62, size=4)
        c = derive_rng(7, 4, 0).integers(2**62, size=4)
        assert np.array_equal(a, b) and not np.array_equal(a, c)


class TestLab:
    def test_records_schema(self):
        g = generate(GraphSpec("random-regular", n=64, d=4), 0)
        cfg = Config.for_graph(g, 0.5, 0.05, profile="desk")
        recs = run_trials(g, "qff", cfg, 3, seed=1)
        assert [r["trial"] for r in recs] == [0, 1, 2]
        r = recs[0]
        assert r["schema_version"] == SCHEMA_VERSION
        assert r["graph_fingerprint"] == g.fingerprint
        assert r["config"]["profile"] == "desk" and r["config"]["n"] == 64
        assert {"decision", "reason", "ledger", "iterations", "wall_time", "experiment_id"} <= set(r)
        assert len({(x["experiment_id"], x["trial"]) for x in recs}) == 3

    def test_threads_do_not_change_results(self):
        g = generate(GraphSpec("expander-dumbbell", n_half=64, d=4), 0)
        cfg = Config.for_graph(g, 0.5, 0.05, profile="desk")
        a = run_trials(g, "seeded-qff", cfg, 4, seed=2, threads=1)
        b = run_trials(g, "seeded-qff", cfg, 4, seed=2, threads=3)
        for x, y in zip(a, b):
            x.pop("wall_time"), y.pop("wall_time")
        assert a == b

    def test_write_read_roundtrip(self, tmp_path):
        g = generate(GraphSpec("random-regular", n=64, d=4), 0)
        recs = run_trials(g, "gr", Config.for_graph(g, 0.5, 0.05, profile="desk", overrides={"K": 2}), 2, 0)
        p = tmp_path / "r.jsonl"
        write_records(recs, p)
        assert read_records(p) == json.loads(json.dumps(recs))
        write_records(recs, p, append=True)
        assert len(read_records(p)) == 4

    def test_summarize(self):
        recs = [
            {"decision": "accept", "reason": "none", "ledger": {"total": 10}},
            {"decision": "reject", "reason": "cut-witness", "ledger": {"total": 30}},
        ]
        s = summarize(recs)
        assert s["accept_rate"] == 0.5 and s["mean_ledger"]["total"] == 20
        assert s["reasons"] == {"cut-witness": 1, "none": 1}

    def test_slope_fit(self):
        xs = [2**k for k in range(8, 13)]
        assert fit_loglog_slope(xs, [3 * x**0.5 for x in xs]) == pytest.approx(0.5)

    def test_constant_control_slope(self):
        res = scaling_sweep("constant", [64, 128, 256, 512], 4, 0.5, 0.05, 2, 0)
        assert abs(res.slope) <= 0.05

    @pytest.mark.parametrize("ns", [[64, 128, 256], [64, 256, 128, 512]])
    def test_sweep_rejects_bad_sizes(self, ns):
        with pytest.raises(ValueError):
            scaling_sweep("qff", ns, 4, 0.5, 0.05, 1, 0)

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            ExperimentPlan([GraphSpec("random-regular", n=8, d=3)], "qff", 0.5, 0.05, trials=0)
        with pytest.raises(ValueError):
            ExperimentPlan([GraphSpec("random-regular", n=8, d=3)], "magic", 0.5, 0.05)
        with pytest.raises(ValueError):
            ExperimentPlan([GraphSpec("random-regular", n=7, d=3)], "qff", 0.5, 0.05)


class TestCli:
    def test_gen_dumbbell(self, tmp_path, capsys):
        out = tmp_path / "db.txt"
        assert main(["gen", "dumbbell", "--n-half", "8", "--d", "8", "--out", str(out)]) == EXIT_OK
        text = capsys.readouterr().out
        assert "n=16" in text and "side_conductance=0.015625" in text and "expansion=0.125" in text
        assert out.read_text().splitlines()[0].split()[0] == "16"

    def test_gen_deterministic(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for p in (a, b):
            assert main(["gen", "random-regular", "--n", "8", "--d", "3", "--seed", "1", "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_gen_infeasible(self, tmp_path, capsys):
        code = main(["gen", "random-regular", "--n", "7", "--d", "3", "--out", str(tmp_path / "x")])
        assert code == EXIT_USAGE and "even" in capsys.readouterr().err

    def test_gen_unwritable(self, tmp_path):
        code = main(["gen", "complete", "--n", "4", "--out", str(tmp_path / "missing" / "x.txt")])
        assert code == EXIT_IO

    def test_test_command_and_determinism(self, expander_file, tmp_path, capsys):
        outs = [tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"]
        for o in outs:
            code = main(["test", "--graph", str(expander_file), "--tester", "seeded-qff", "--phi", "0.5",
                         "--eps", "0.05", "--trials", "3", "--seed", "4", "--out", str(o)])
            assert code == EXIT_OK
        assert "accept=" in capsys.readouterr().out
        assert strip_wall(outs[0]) == strip_wall(outs[1])
        assert len(read_records(outs[0])) == 3

    def test_test_exact_backend_tiny_expander(self, tmp_path, capsys):
        p = tmp_path / "k.txt"
        write_edgelist(generate(GraphSpec("random-regular", n=16, d=4), 0), p)
        code = main(["test", "--graph", str(p), "--tester", "qff", "--phi", "0.5", "--eps", "0.05",
                     "--trials", "1", "--backend", "exact"])
        assert code == EXIT_OK and "accept=1.000" in capsys.readouterr().out

    def test_override_flags(self, expander_file, tmp_path):
        o = tmp_path / "r.jsonl"
        code = main(["test", "--graph", str(expander_file), "--tester", "qff", "--phi", "0.5", "--eps", "0.05",
                     "--trials", "1", "--override", "K=3", "--override", "t=5", "--out", str(o)])
        assert code == EXIT_OK
        rec = read_records(o)[0]
        assert rec["config"]["overrides"] == {"K": 3.0, "t": 5.0}
        assert rec["params"]["K"] == 3 and rec["params"]["t"] == 5

    @pytest.mark.parametrize(
        "argv",
        [
            ["test", "--graph", "{g}", "--tester", "magic", "--phi", "0.5", "--eps", "0.05"],
            ["test", "--graph", "{g}", "--tester", "qff", "--phi", "0.5", "--eps", "0.05", "--override", "zz=1"],
            ["test", "--graph", "{g}", "--tester", "qff", "--phi", "0.5", "--eps", "2"],
            ["verify", "nonsense"],
            ["scaling", "--tester", "qff", "--n-list", "64,128", "--phi", "0.5", "--eps", "0.05"],
            [],
        ],
    )
    def test_usage_errors(self, argv, expander_file):
        assert main([a.replace("{g}", str(expander_file)) for a in argv]) == EXIT_USAGE

    def test_unreadable_graph(self, tmp_path):
        code = main(["test", "--graph", str(tmp_path / "none.txt"), "--tester", "qff", "--phi", "0.5",
                     "--eps", "0.05"])
        assert code == EXIT_IO

    def test_non_regular_graph_needs_padding(self, tmp_path):
        p = tmp_path / "path.txt"
        p.write_text("3 2 3\n0 1\n1 2\n")
        base = ["test", "--graph", str(p), "--tester", "qff", "--phi", "0.5", "--eps", "0.05", "--trials", "1"]
        assert main(base) == EXIT_USAGE
        assert main(base + ["--pad-to", "3"]) == EXIT_OK

    def test_verify_martingale(self, capsys):
        assert main(["verify", "martingale"]) == EXIT_OK
        assert "[PASS] martingale/E_K[d(S')] = d(S): margin=0" in capsys.readouterr().out

    def test_verify_failure_exit_code(self, monkeypatch):
        from expansion_lab import cli
        from expansion_lab.verify import Check

        monkeypatch.setattr(cli, "run_suite", lambda name, seed: [Check("x", "y", False, -1.0)])
        assert main(["verify", "eq1"]) == EXIT_FAIL

    def test_scaling_constant(self, capsys, tmp_path):
        o = tmp_path / "s.jsonl"
        code = main(["scaling", "--tester", "constant", "--n-list", "32,64,128,256", "--phi", "0.5",
                     "--eps", "0.05", "--trials", "2", "--out", str(o)])
        assert code == EXIT_OK
        assert "slope(total)=" in capsys.readouterr().out
        assert len(read_records(o)) == 8
