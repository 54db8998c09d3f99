"""``expansion-lab`` command line: gen, test, verify, scaling.

Exit codes: 0 success, 1 property failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .graph import GraphSpec, NodeSet, expansion_bruteforce, generate, read_edgelist, set_conductance, write_edgelist
from .lab import run_trials, scaling_sweep, summarize, write_records
from .testers import OVERRIDE_KEYS, PROFILES, TESTERS, TesterConfig
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _parse_overrides(items: list[str] | None) -> dict[str, float]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or key not in OVERRIDE_KEYS:
            raise UsageError(f"bad override {item!r}; keys: {', '.join(sorted(OVERRIDE_KEYS))}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"override {key} needs a number, got {value!r}") from None
    return out


def _add_tester_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--phi", type=float, required=True, help="expansion parameter")
    p.add_argument("--eps", type=float, required=True, help="promise (distance) parameter")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("--backend", choices=["exact", "noisy-model"], default="noisy-model")
    p.add_argument("--override", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", help="write JSON-lines trial records here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expansion-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a graph instance as an edge list")
    g.add_argument("family", choices=GraphSpec.FAMILIES[:-1])
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--n-half", type=int)
    g.add_argument("--bridges", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    t = sub.add_parser("test", help="run repeated tester trials on a graph file")
    t.add_argument("--graph", required=True)
    t.add_argument("--pad-to", type=int, help="regularize to this degree bound on load")
    t.add_argument("--tester", choices=sorted(TESTERS), required=True)
    _add_tester_flags(t)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("suite", choices=sorted(SUITES) + ["all"])
    v.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("scaling", help="fit ledger cost against n on random regular graphs")
    s.add_argument("--tester", choices=sorted(TESTERS) + ["constant"], required=True)
    s.add_argument("--n-list", required=True, help="comma-separated ascending sizes")
    s.add_argument("--d", type=int, default=4)
    _add_tester_flags(s)
    s.set_defaults(trials=3)
    return parser


def cmd_gen(args) -> int:
    spec = GraphSpec(args.family, n=args.n, d=args.d, n_half=args.n_half, bridges=args.bridges)
    try:
        g = generate(spec, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_edgelist(g, args.out)
    print(f"n={g.n} m={g.m} d={g.d}")
    if g.n <= 22:
        print(f"expansion={expansion_bruteforce(g):.6g}")
    if spec.n_half:
        print(f"side_conductance={set_conductance(g, NodeSet.of(g, range(spec.n_half))):.6g}")
    return EXIT_OK


def cmd_test(args) -> int:
    try:
        g = read_edgelist(args.graph, pad_to=args.pad_to)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not g.is_regular:
        raise UsageError("graph is not regular; pass --pad-to <d>")
    try:
        cfg = TesterConfig.for_graph(g, args.phi, args.eps, profile=args.profile, backend=args.backend,
                                     overrides=_parse_overrides(args.override))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records = run_trials(g, args.tester, cfg, args.trials, args.seed, args.threads)
    if args.out:
        write_records(records, args.out)
    summary = summarize(records)
    print(f"tester={args.tester} trials={summary['trials']} accept={summary['accept_rate']:.3f} "
          f"reject={summary['reject_rate']:.3f} reasons={summary['reasons']}")
    print("mean ledger: " + " ".join(f"{k}={v:.4g}" for k, v in summary["mean_ledger"].items()))
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suite(args.suite, args.seed)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_scaling(args) -> int:
    try:
        ns = [int(x) for x in args.n_list.split(",") if x.strip()]
        result = scaling_sweep(args.tester, ns, args.d, args.phi, args.eps, args.trials, args.seed,
                               profile=args.profile, overrides=_parse_overrides(args.override),
                               backend=args.backend, threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(result.report())
    if args.out:
        write_records(result.records, args.out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "test": cmd_test, "verify": cmd_verify, "scaling": cmd_scaling}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
