"""Command-line entry point: ``matchkit <command> [options]``.

Exit status: 0 when the check passes, 1 on a violation or failed
verification, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import chain, coupling, erasing, productform, properties
from .errors import MatchkitError, NoSampleError
from .graph import (
    CompatibilityGraph,
    complete,
    cycle_graph,
    independent_sets,
    is_bipartite,
    octahedron,
    paw,
    separability_order,
    shortest_odd_cycle,
    single_edge,
    spanning_odd_cycle,
)
from .input import (
    ArrivalEvent,
    Measure,
    check_ncond,
    events_from_classes,
    generate,
    iid_stream,
    periodic_stream,
)
from .policy import FCFM, PolicyKind, PreferenceList, parse_policy

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

BUILTIN_GRAPHS = {
    "paw": paw,
    "k3": lambda: complete(3),
    "edge": single_edge,
    "weak6": octahedron,
    "c5": lambda: cycle_graph(5),
}


class UsageError(MatchkitError):
    pass


# -- loading ---------------------------------------------------------------------------

def load_graph(spec: str | None) -> CompatibilityGraph:
    if spec is None:
        raise UsageError("--graph is required")
    if Path(spec).exists():
        return CompatibilityGraph.from_json(spec)
    if spec.lower() in BUILTIN_GRAPHS:
        return BUILTIN_GRAPHS[spec.lower()]()
    raise UsageError(f"graph {spec!r} is neither a file nor one of {sorted(BUILTIN_GRAPHS)}")


def load_measure(spec: str | None, g: CompatibilityGraph) -> Measure:
    if spec is None:
        raise UsageError("--measure is required")
    if Path(spec).exists():
        return Measure.from_json(g, spec)
    if spec.lower() == "uniform":
        return Measure.uniform(g)
    return Measure([p for p in spec.split(",") if p.strip()])


def load_policy(tag: str, g: CompatibilityGraph):
    head, sep, rest = tag.partition(":")
    if sep and rest.startswith("@"):
        rest = Path(rest[1:]).read_text()
        tag = f"{head}:{rest.strip()}"
    return parse_policy(tag, g).validate(g)


def parse_arrivals(text: str, g: CompatibilityGraph) -> list[int]:
    return list(g.parse_word(text))


def load_sigmas(path: str, g: CompatibilityGraph, n: int) -> list:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list) or len(data) != n:
        raise UsageError(f"--sigma file must hold a list of {n} preference lists")
    return [PreferenceList.from_json(g, d) for d in data]


# -- output -----------------------------------------------------------------------------

def emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def as_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def as_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- commands ---------------------------------------------------------------------------

def cmd_analyze_graph(args):
    g = load_graph(args.graph)
    bip, sides = is_bipartite(g)
    sep = separability_order(g)
    odd = shortest_odd_cycle(g)
    walk = spanning_odd_cycle(g)
    report = {
        "graph": g.to_json(),
        "bipartite": bip,
        "sides": [g.word_names(sorted(s)) for s in sides] if sides else None,
        "separable_order": sep[0] if sep else None,
        "separable_parts": [g.word_names(sorted(p)) for p in sep[1]] if sep else None,
        "shortest_odd_cycle": g.word_names(odd) if odd else None,
        "spanning_odd_walk": g.word_names(walk) if walk else None,
        "independent_sets": [
            {"set": g.word_names(s.sorted()), "maximal": s.maximal} for s in independent_sets(g)
        ],
    }
    emit(as_json(report), args.out)
    return EXIT_OK


def cmd_ncond(args):
    g = load_graph(args.graph)
    mu = load_measure(args.measure, g)
    report = check_ncond(g, mu)
    emit(as_json(report.to_json(g)), args.out)
    return EXIT_OK if report.satisfied else EXIT_FAIL


def _events(args, g, policy):
    if args.arrivals:
        classes = parse_arrivals(args.arrivals, g)
        if args.steps is not None:
            classes = classes[: args.steps]
        if policy.needs_preferences:
            if not args.sigma:
                raise UsageError(f"{policy.kind.value} needs --sigma with inline arrivals")
            sigmas = load_sigmas(args.sigma, g, len(classes))
            return [ArrivalEvent(c, s) for c, s in zip(classes, sigmas)]
        return events_from_classes(classes)
    if args.steps is None:
        raise UsageError("give --arrivals or --steps with --measure")
    mu = load_measure(args.measure, g)
    return generate(iid_stream(mu, policy, args.seed), g, args.steps)


def cmd_simulate(args):
    g = load_graph(args.graph)
    policy = load_policy(args.policy, g)
    events = _events(args, g, policy)
    initial = g.parse_word(args.initial) if args.initial else ()
    if policy.kind is PolicyKind.FCFM and not initial:
        traj = chain.detailed_trajectories(events, g)
    else:
        traj = chain.run_natural(initial, events, policy, g)
    if args.format == "csv":
        emit(chain.trajectory_csv(traj, g), args.out)
    else:
        report = {
            "policy": policy.tag(g),
            "initial": g.word_names(initial),
            "steps": chain.trajectory_records(traj, g),
            "final": g.word_names(traj.final),
        }
        emit(as_json(report), args.out)
    return EXIT_OK


def cmd_verify_product_form(args):
    g = load_graph(args.graph)
    mu = load_measure(args.measure, g)
    max_len = args.max_len if args.max_len is not None else 3
    bracket = productform.bracket_partition(g, mu, args.trunc_len)
    rows = productform.marginalize_check(g, mu, max_len)
    steps = args.steps if args.steps is not None else 100_000
    emp = productform.empirical_comparison(g, mu, steps, seed=args.seed, max_len=max_len)
    report = {
        "normalizing_constant": bracket.to_json(),
        "marginalization": {
            "words_checked": len(rows),
            "passed": all(r.ok for r in rows),
            "failures": [g.format_word(r.word) for r in rows if not r.ok],
        },
        "empirical": {
            "steps": steps,
            "seed": args.seed,
            "tv_distance": round(emp.tv, 12),
            "tolerance": args.tol,
        },
    }
    ok = bracket.holds and all(r.ok for r in rows) and emp.tv <= args.tol
    report["passed"] = ok
    emit(as_json(report), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_kelly(args):
    g = load_graph(args.graph)
    mu = load_measure(args.measure, g)
    report = productform.verify_kelly(g, mu, args.max_len if args.max_len is not None else 3)
    emit(as_json(report.to_json()), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_balance(args):
    g = load_graph(args.graph)
    mu = load_measure(args.measure, g)
    policy = load_policy(args.policy, g)
    report = productform.verify_global_balance(g, mu, args.max_len if args.max_len is not None else 4, policy)
    emit(as_json(report.to_json()), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_property(args):
    g = load_graph(args.graph)
    policy = load_policy(args.policy, g)
    trials = args.trials if args.trials is not None else 10_000
    if args.which == "subadd":
        report = properties.check_subadditive(policy, g, trials, args.max_len or 8, args.seed)
    else:
        report = properties.check_nonexpansive(policy, g, trials, args.seed)
    emit(as_json(report.to_json()), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_erasing(args):
    g = load_graph(args.graph)
    policy = load_policy(args.policy, g)
    u = g.parse_word(args.word) if args.word else ()
    cap = args.cap if args.cap is not None else erasing.DEFAULT_SEARCH_CAP
    if args.action == "find":
        cert = erasing.erasing_word(g, u, policy)
    elif args.action == "strong":
        cert = erasing.strong_erasing_word(g, policy, cap)
    elif args.action == "minimal":
        cert = erasing.minimal_erasing_word(g, u, policy, cap)
    else:
        if args.z is None:
            raise UsageError("verify needs --z")
        z = g.parse_word(args.z)
        ok = erasing.is_strong_erasing_word(g, z, policy) if args.strong else erasing.is_erasing_word(g, u, z, policy)
        emit(as_json({"target": g.format_word(u), "word": g.format_word(z), "strong": args.strong, "verified": ok}), args.out)
        return EXIT_OK if ok else EXIT_FAIL
    if cert is None:
        emit(as_json({"action": args.action, "found": False, "cap": cap}), args.out)
        return EXIT_FAIL
    emit(as_json(cert.to_json(g)), args.out)
    return EXIT_OK


def cmd_perfect_sample(args):
    g = load_graph(args.graph)
    mu = load_measure(args.measure, g)
    policy = load_policy(args.policy, g)
    cap = args.cap if args.cap is not None else coupling.DEFAULT_HORIZON_CAP
    sampler = coupling.PerfectSampler(g, mu, policy, args.r, cap)
    n = args.samples if args.samples is not None else 1
    rows = []
    status = EXIT_OK
    for i in range(n):
        try:
            rows.append(sampler.sample(args.seed, i).to_json(g))
        except NoSampleError as exc:
            rows.append({"seed": args.seed, "stream": i, "state": None, "horizon_used": None,
                         "error": str(exc), "diagnostics": exc.diagnostics})
            status = EXIT_FAIL
    if args.format == "csv":
        emit(as_csv(["seed", "stream", "state", "horizon_used"],
                    [[r["seed"], r["stream"], r["state"] if r["state"] is not None else "", r["horizon_used"] or ""] for r in rows]),
             args.out)
    else:
        emit("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), args.out)
    return status


def cmd_match_window(args):
    g = load_graph(args.graph)
    policy = load_policy(args.policy, g)
    if args.periodic:
        steps = args.steps if args.steps is not None else 4 * len(g.parse_word(args.periodic))
        events = generate(periodic_stream(g.parse_word(args.periodic)), g, steps)
    else:
        events = _events(args, g, policy)
    even, odd = coupling.stationary_matching_window(events, policy, g)

    def window_json(win):
        out = win.to_json(g)
        out["buffers"] = [{"t": t, "buffer": g.format_word(w)} for t, w in sorted(win.buffers.items())]
        return out

    report = {"even": window_json(even), "odd": window_json(odd), "distinct": even.pairs() != odd.pairs()}
    emit(as_json(report), args.out)
    return EXIT_OK


def cmd_reverse_check(args):
    g = load_graph(args.graph)
    if not args.arrivals:
        raise UsageError("reverse-check needs --arrivals")
    classes = parse_arrivals(args.arrivals, g)
    record = chain.run_natural((), classes, FCFM, g).record
    result = coupling.exchange_and_reverse_check(classes, record, g)
    report = {
        "arrivals": g.word_names(classes),
        "pairs": sorted([list(p) for p in record.pairs]),
        "exchanged": chain.detailed_tokens(g, result.exchanged),
        "passed": result.passed,
        "witness": result.witness,
    }
    emit(as_json(report), args.out)
    return EXIT_OK if result.passed else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph JSON file or builtin: " + ", ".join(sorted(BUILTIN_GRAPHS)))
    common.add_argument("--measure", help='measure JSON file, "uniform", or comma-separated rationals')
    common.add_argument("--policy", default="fcfm", help="fcfm|lcfm|ml|ms|uniform|priority:<json|@file>|random:<json|@file>")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--steps", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--max-len", dest="max_len", type=int)
    common.add_argument("--cap", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    p = argparse.ArgumentParser(prog="matchkit", description="Stochastic matching models on compatibility graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("analyze-graph", parents=[common]).set_defaults(func=cmd_analyze_graph)
    sub.add_parser("ncond", parents=[common]).set_defaults(func=cmd_ncond)

    s = sub.add_parser("simulate", parents=[common])
    s.add_argument("--arrivals")
    s.add_argument("--sigma", help="JSON list of preference lists, one per arrival")
    s.add_argument("--initial")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify-product-form", parents=[common])
    s.add_argument("--trunc-len", dest="trunc_len", type=int, default=12)
    s.add_argument("--tol", type=float, default=0.02)
    s.set_defaults(func=cmd_verify_product_form)

    sub.add_parser("kelly-check", parents=[common]).set_defaults(func=cmd_kelly)
    sub.add_parser("balance-check", parents=[common]).set_defaults(func=cmd_balance)

    s = sub.add_parser("property", parents=[common])
    s.add_argument("which", choices=["subadd", "nonexp"])
    s.set_defaults(func=cmd_property)

    s = sub.add_parser("erasing", parents=[common])
    s.add_argument("action", choices=["find", "strong", "minimal", "verify"])
    s.add_argument("--word", help="target word u")
    s.add_argument("--z", help="candidate erasing word (verify)")
    s.add_argument("--strong", action="store_true", help="verify as a strong erasing word")
    s.set_defaults(func=cmd_erasing)

    s = sub.add_parser("perfect-sample", parents=[common])
    s.add_argument("-r", type=int, default=coupling.DEFAULT_R)
    s.set_defaults(func=cmd_perfect_sample)

    s = sub.add_parser("match-window", parents=[common])
    s.add_argument("--arrivals")
    s.add_argument("--sigma")
    s.add_argument("--periodic", help="periodic input word, repeated for --steps arrivals")
    s.set_defaults(func=cmd_match_window)

    s = sub.add_parser("reverse-check", parents=[common])
    s.add_argument("--arrivals")
    s.set_defaults(func=cmd_reverse_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    # internal work is sequential, so any thread cap is already honoured
    os.environ.get("MATCHKIT_THREADS")
    try:
        return args.func(args)
    except (MatchkitError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"matchkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
