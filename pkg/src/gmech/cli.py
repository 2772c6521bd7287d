"""Command-line entry point: ``gmech <command> [options]``.

Every report is a JSON object ``{"manifest": ..., "result": ...}`` (or a CSV
table with the manifest as leading ``#`` comment lines). Exit status is 0
on success, 1 when a checked property fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import random
import sys
import time
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__
from . import complexity as cx
from . import verify as acceptance
from .graphs import (
    DirectedGraph,
    GraphError,
    circuit_rank,
    classify,
    collapse_failure,
    collapsible_edges,
    is_connected,
    rose_petals,
)
from .market import (
    AXIOMS,
    OfferMatrix,
    SamplerConfig,
    check_axioms,
    check_instance,
    route_exchange,
    run_session,
)
from .prices import (
    PRIME,
    EdgeWeights,
    WeightError,
    as_rational,
    balance_residual,
    format_rational,
    prices_by_balance_solve,
    prices_by_tree_formula,
    tree_price_polynomial,
)
from .search import (
    WEAK,
    MAX_M,
    MIN_M,
    SCREENED,
    STRICT,
    SearchConfig,
    SearchError,
    Sweep,
    default_workers,
    m0_bound,
    weighted_minimizer,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2
COMMANDS = ("analyze", "price", "complexity", "frontier", "minimize", "simulate", "route", "verify")


class InputError(Exception):
    """Bad file, bad JSON or a value rejected at the boundary."""


class Report:
    def __init__(self, result: dict, ok: bool = True, header=None, rows=None):
        self.result = result
        self.ok = ok
        self.header = header
        self.rows = rows or []


# -- inputs ---------------------------------------------------------------------

class Inputs:
    """Reads input files once and remembers their digests."""

    def __init__(self):
        self.digests: dict[str, str] = {}

    def read_json(self, role: str, path: str):
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise InputError(f"{role}: cannot read {path}: {exc.strerror}") from exc
        self.digests[role] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise InputError(f"{role}: {path} is not valid JSON: {exc}") from exc

    def graph(self, path: str | None) -> DirectedGraph:
        if path is None:
            raise InputError("--graph is required")
        return _graph_from(self.read_json("graph", path), "graph")

    def weights(self, G: DirectedGraph, path: str | None) -> EdgeWeights:
        if path is None:
            return EdgeWeights.uniform(G)
        try:
            return EdgeWeights.from_json(G, self.read_json("weights", path))
        except (WeightError, TypeError) as exc:
            raise InputError(f"weights: {exc}") from exc


def _graph_from(data, field: str) -> DirectedGraph:
    try:
        G = DirectedGraph.from_json(data)
    except (GraphError, TypeError, ValueError) as exc:
        raise InputError(f"{field}: {exc}") from exc
    return G


def _require_connected(G: DirectedGraph) -> None:
    if not is_connected(G):
        raise InputError("graph: not strongly connected; no G-mechanism exists on it")


def _rational(text: str, name: str) -> Fraction:
    try:
        return as_rational(text)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: {exc}") from exc


def _edges(es) -> list[list[int]]:
    return [list(e) for e in sorted(es)]


# -- commands -------------------------------------------------------------------

def cmd_analyze(args, inputs: Inputs) -> Report:
    G = inputs.graph(args.graph)
    _require_connected(G)
    found, rigid = collapsible_edges(G)
    blocked = {}
    for e in G.sorted_edges():
        fail = collapse_failure(G, e)
        if fail is not None:
            blocked[f"{e[0]},{e[1]}"] = {"condition": fail[0], "reason": fail[1]}
    petals = rose_petals(G)
    result = {
        "graph": G.to_json(),
        "class": str(classify(G)),
        "circuit_rank": circuit_rank(G),
        "rigid": rigid,
        "collapsible_edges": _edges(found),
        "blocked_edges": blocked,
        "rose": None if petals is None else {"center": petals[0], "petals": petals[1]},
        "tau": cx.tau_profile(G).tau,
    }
    rows = [[str(result["class"]), result["circuit_rank"], rigid,
             " ".join(f"{i}>{j}" for i, j in found)]]
    return Report(result, True, ["class", "circuit_rank", "rigid", "collapsible_edges"], rows)


def cmd_price(args, inputs: Inputs) -> Report:
    G = inputs.graph(args.graph)
    _require_connected(G)
    b = inputs.weights(G, args.weights)
    tree = prices_by_tree_formula(G, b)
    kern = prices_by_balance_solve(G, b)
    residual = balance_residual(G, b, tree)
    agree = tree == kern
    ok = agree and not any(residual)
    result = {
        "graph": G.to_json(),
        "weights": b.to_json()["weights"],
        "prices": tree.to_json()["prices"],
        "normalization": "p1=1",
        "methods": {"tree_formula": tree.to_json()["prices"], "balance_kernel": kern.to_json()["prices"]},
        "methods_agree": agree,
        "residual": [format_rational(x) for x in residual],
        "polynomials": {str(i): str(tree_price_polynomial(G, i)) for i in G.vertices},
    }
    rows = [[i, format_rational(tree[i]), format_rational(kern[i]), format_rational(residual[i - 1])]
            for i in G.vertices]
    return Report(result, ok, ["commodity", "tree_formula", "balance_kernel", "residual"], rows)


def _pi_method(method: str) -> str:
    return cx.RANDOMIZED if method in (SCREENED, cx.RANDOMIZED) else cx.EXACT


def cmd_complexity(args, inputs: Inputs) -> Report:
    G = inputs.graph(args.graph)
    _require_connected(G)
    prof = cx.complexity_profile(G, _pi_method(args.method), args.trials, args.seed)
    result = {"graph": G.to_json(), "class": str(classify(G)), **prof.to_json()}
    rows = [[i, j, prof.tau_ij[i - 1][j - 1], prof.pi_ij[i - 1][j - 1]]
            for i in G.vertices for j in G.vertices if i != j]
    return Report(result, True, ["i", "j", "tau_ij", "pi_ij"], rows)


def _check_m(m) -> int:
    if m is None:
        raise InputError("--m is required")
    if not MIN_M <= m <= MAX_M:
        raise InputError(f"--m must be between {MIN_M} and {MAX_M} for a sweep, got {m}")
    return m


def cmd_frontier(args, inputs: Inputs) -> Report:
    m = _check_m(args.m)
    method = SCREENED if args.method in (SCREENED, cx.RANDOMIZED) else cx.EXACT
    sweep = Sweep(SearchConfig(m, method=method, workers=args.workers, seed=args.seed, trials=args.trials))
    rules = [WEAK, STRICT] if args.rule == "both" else [args.rule]
    fronts = {rule: sweep.frontier(rule) for rule in rules}
    result = {
        "m": m,
        "frontiers": {
            rule: [r.to_json() for r in sorted(front, key=lambda r: (r.tau, r.pi, str(r.cls)))]
            for rule, front in fronts.items()
        },
        "metadata": sweep.metadata(),
    }
    rows = [
        [rule, rec["class"], rec["tau"], rec["pi"], rec["labeled_count"],
         " ".join(f"{i}>{j}" for i, j in rec["edges"])]
        for rule, recs in result["frontiers"].items() for rec in recs
    ]
    return Report(result, True, ["rule", "class", "tau", "pi", "labeled_count", "edges"], rows)


def cmd_minimize(args, inputs: Inputs) -> Report:
    if args.m is None:
        raise InputError("--m is required")
    if args.m <= 3:
        raise InputError("--m must be at least 4")
    lam = _rational(args.lam, "--lambda")
    mu = _rational(args.mu, "--mu")
    if lam <= 0 or mu <= 0:
        raise InputError("--lambda and --mu must be positive")
    cfg = SearchConfig(args.m, method=SCREENED, workers=args.workers, seed=args.seed, trials=args.trials)
    choice = weighted_minimizer(args.m, lam, mu, cfg if args.m <= 5 else None)
    m0 = m0_bound(lam, mu)
    result = {
        "m": args.m,
        "lambda": format_rational(lam),
        "mu": format_rational(mu),
        "argmin": str(choice.record.cls),
        "unique": choice.unique,
        "winners": [r.to_json() for r in choice.winners],
        "costs": {k: format_rational(v) for k, v in sorted(choice.costs.items())},
        "cross_checked_by_enumeration": choice.cross_checked,
        "m0": m0,
        "star_guaranteed": args.m >= m0,
    }
    rows = []
    for cls, cost in sorted(choice.costs.items(), key=lambda kv: (kv[1], kv[0])):
        rows.append([cls, format_rational(cost), cls == result["argmin"]])
    return Report(result, True, ["class", "cost", "argmin"], rows)


def cmd_simulate(args, inputs: Inputs) -> Report:
    if args.session is None:
        cfg = SamplerConfig(instances=args.instances, seed=args.seed)
        report = check_axioms(cfg)
        result = {"mode": "random", **report.to_json()}
        rows = [[name, report.passed[name], report.instances] for name in AXIOMS]
        return Report(result, report.ok, ["axiom", "passed", "instances"], rows)

    data = inputs.read_json("session", args.session)
    if not isinstance(data, dict) or "graph" not in data or not isinstance(data.get("traders"), list):
        raise InputError('session: expected {"graph": ..., "traders": [{"offers": {...}}, ...]}')
    G = _graph_from(data["graph"], "session.graph")
    _require_connected(G)
    traders = []
    for k, t in enumerate(data["traders"]):
        if not isinstance(t, dict) or not isinstance(t.get("offers"), dict):
            raise InputError(f"session.traders[{k}]: expected an object with 'offers'")
        try:
            traders.append(OfferMatrix.from_json(G, t["offers"]))
        except (WeightError, TypeError) as exc:
            raise InputError(f"session.traders[{k}].offers: {exc}") from exc
    if not traders:
        raise InputError("session.traders: at least one trader is required")
    try:
        session = run_session(G, traders)
    except WeightError as exc:
        raise InputError(f"session: {exc}") from exc
    options = data.get("options") or {}
    checks = None
    if options.get("check_axioms", True):
        checks = check_instance(G, traders, random.Random(f"session:{args.seed}"))
    ok = checks is None or all(checks.values())
    result = {"mode": "session", "graph": G.to_json(), **session.to_json(), "axioms": checks}
    rows = [[k + 1] + t["net_trade"] for k, t in enumerate(result["traders"])]
    header = ["trader"] + [f"net_{i}" for i in G.vertices]
    return Report(result, ok, header, rows)


def cmd_route(args, inputs: Inputs) -> Report:
    G = inputs.graph(args.graph)
    _require_connected(G)
    b = inputs.weights(G, args.weights)
    for name, v in (("--from", args.source), ("--to", args.target)):
        if v is None or v not in G.vertices:
            raise InputError(f"{name} must be a vertex in 1..{G.m}")
    if args.source == args.target:
        raise InputError("--from and --to must differ")
    x = _rational(args.amount, "--amount")
    if x <= 0:
        raise InputError("--amount must be positive")
    plan = route_exchange(G, b, args.source, args.target, x)
    expected = prices_by_tree_formula(G, b).ratio(args.source, args.target)
    tau = cx.tau_profile(G).tau_ij[args.source - 1][args.target - 1]
    ok = plan.ratio == expected and len(plan.steps) == tau
    result = {
        **plan.to_json(),
        "amount": format_rational(x),
        "price_ratio": format_rational(expected),
        "tau_ij": tau,
        "ratio_matches_prices": plan.ratio == expected,
    }
    rows = [[f"{s['edge'][0]}>{s['edge'][1]}", s["offered"], s["received"]] for s in result["steps"]]
    return Report(result, ok, ["edge", "offered", "received"], rows)


def cmd_verify(args, inputs: Inputs) -> Report:
    only = None
    if args.criteria:
        try:
            only = sorted({int(t) for t in args.criteria.split(",")})
        except ValueError as exc:
            raise InputError("--criteria takes a comma-separated list of numbers") from exc
        unknown = [n for n in only if n not in acceptance.CRITERIA]
        if unknown:
            raise InputError(f"--criteria: unknown criteria {unknown}")
    results = acceptance.run_all(only, seed=args.seed)
    for r in results:
        print(r.line(), file=sys.stderr)
    result = {"criteria": [r.to_json() for r in results], "passed": all(r.passed for r in results)}
    if args.no_timing:
        for c in result["criteria"]:
            c["seconds"] = None
    rows = [[r.number, r.name, r.passed] for r in results]
    return Report(result, result["passed"], ["criterion", "name", "passed"], rows)


HANDLERS = {
    "analyze": cmd_analyze,
    "price": cmd_price,
    "complexity": cmd_complexity,
    "frontier": cmd_frontier,
    "minimize": cmd_minimize,
    "simulate": cmd_simulate,
    "route": cmd_route,
    "verify": cmd_verify,
}


# -- output ---------------------------------------------------------------------

def manifest(args, inputs: Inputs, seconds: float | None) -> dict:
    options = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("command", "out", "format", "no_timing") and v is not None
    }
    return {
        "command": args.command,
        "options": options,
        "inputs": dict(sorted(inputs.digests.items())),
        "seeds": {"seed": args.seed},
        "prime": str(PRIME),
        "version": __version__,
        "wall_time_s": None if seconds is None else round(seconds, 3),
    }


def render(report: Report, man: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"manifest": man, "result": report.result}, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for line in json.dumps(man, sort_keys=True, separators=(",", ":")).splitlines():
        buf.write(f"# manifest {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.header)
    w.writerows(report.rows)
    return buf.getvalue()


def load_schema(name: str) -> dict:
    """Published JSON schema for the report of command ``name``."""
    text = resources.files("gmech").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $GMECH_WORKERS or 1)")
    common.add_argument("--no-timing", action="store_true",
                        help="leave wall time out so reruns are byte-identical")

    parser = argparse.ArgumentParser(prog="gmech", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gmech {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_)

    p = add("analyze", "class, circuit rank, rigidity and collapsible edges")
    p.add_argument("--graph", required=True)

    p = add("price", "prices by tree formula and by balance kernel")
    p.add_argument("--graph", required=True)
    p.add_argument("--weights", help="weights JSON; all ones when omitted")

    p = add("complexity", "tau and pi profiles")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=("exact", "screened", "randomized"), default="exact")
    p.add_argument("--trials", type=int, default=cx.DEFAULT_TRIALS)

    p = add("frontier", "Pareto frontier of all mechanisms on m commodities")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--method", choices=("exact", "screened"), default="exact")
    p.add_argument("--rule", choices=(WEAK, STRICT, "both"), default=WEAK)
    p.add_argument("--trials", type=int, default=cx.DEFAULT_TRIALS)

    p = add("minimize", "argmin of lambda*pi + mu*tau and the m0 bound")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--lambda", dest="lam", default="1")
    p.add_argument("--mu", default="1")
    p.add_argument("--trials", type=int, default=cx.DEFAULT_TRIALS)

    p = add("simulate", "clear a trading session, or check axioms on random ones")
    p.add_argument("--session", help="session JSON; random sessions when omitted")
    p.add_argument("--instances", type=int, default=100)

    p = add("route", "exchange plan along a shortest path")
    p.add_argument("--graph", required=True)
    p.add_argument("--weights")
    p.add_argument("--from", dest="source", type=int, required=True)
    p.add_argument("--to", dest="target", type=int, required=True)
    p.add_argument("--amount", default="1")

    p = add("verify", "run the acceptance criteria")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,3,4")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is None:
        args.workers = default_workers()
    if args.workers < 1:
        print("gmech: --workers must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    inputs = Inputs()
    t0 = time.perf_counter()
    try:
        report = HANDLERS[args.command](args, inputs)
    except (InputError, SearchError) as exc:
        print(f"gmech {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    seconds = None if args.no_timing else time.perf_counter() - t0
    text = render(report, manifest(args, inputs, seconds), args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not report.ok:
        print(f"gmech {args.command}: property check failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
