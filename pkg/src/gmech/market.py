"""Running a G-mechanism on trader offers.

Returns follow value conservation at the aggregate prices: a trader who
puts ``a_ij`` of commodity i on edge ij receives ``(p_i / p_j) * a_ij`` of j.
The axiom checker samples random sessions and confirms, as exact rational
identities, the properties any such mechanism must have.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .graphs import (
    DirectedGraph,
    Edge,
    all_simple_paths,
    is_connected,
    shortest_path,
    simple_cycles,
)
from .prices import (
    EdgeWeights,
    InternalInvariantError,
    PriceVector,
    WeightError,
    as_rational,
    format_rational,
    parse_edge_key,
    price_ratio,
    prices_by_balance_solve,
    prices_by_tree_formula,
)

Vector = tuple[Fraction, ...]


class InactiveEdge(WeightError):
    """Some edge carries zero aggregate offer; prices are undefined there."""


@dataclass(frozen=True)
class OfferMatrix:
    """One trader's offer: nonnegative amounts on edges of G."""

    graph: DirectedGraph
    offers: Mapping[Edge, Fraction]

    def __init__(self, graph: DirectedGraph, offers: Mapping[Edge, object] | None = None):
        clean = {}
        for e, x in (offers or {}).items():
            e = tuple(e)
            if e not in graph.edges:
                raise WeightError(f"offer on {e}, which is not an edge")
            q = as_rational(x)
            if q < 0:
                raise WeightError(f"offer on {e} is negative: {q}")
            if q:
                clean[e] = q
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "offers", clean)

    def get(self, e: Edge) -> Fraction:
        return self.offers.get(e, Fraction(0))

    @property
    def row_sums(self) -> Vector:
        s = [Fraction(0)] * self.graph.m
        for (i, _), x in self.offers.items():
            s[i - 1] += x
        return tuple(s)

    def scaled(self, c) -> OfferMatrix:
        c = as_rational(c)
        return OfferMatrix(self.graph, {e: c * x for e, x in self.offers.items()})

    def __add__(self, other: OfferMatrix) -> OfferMatrix:
        keys = self.offers.keys() | other.offers.keys()
        return OfferMatrix(self.graph, {e: self.get(e) + other.get(e) for e in keys})

    def to_json(self) -> dict:
        return {f"{i},{j}": format_rational(x) for (i, j), x in sorted(self.offers.items())}

    @classmethod
    def from_json(cls, graph: DirectedGraph, data: Mapping[str, object]) -> OfferMatrix:
        return cls(graph, {parse_edge_key(k): v for k, v in data.items()})


def _as_offer(G: DirectedGraph, a) -> OfferMatrix:
    if isinstance(a, OfferMatrix):
        if a.graph != G:
            raise WeightError("offer belongs to a different graph")
        return a
    if isinstance(a, EdgeWeights):
        return OfferMatrix(G, a.weights)
    return OfferMatrix(G, a)


def aggregate(offers: Sequence[OfferMatrix]) -> EdgeWeights:
    if not offers:
        raise InactiveEdge("no traders")
    G = offers[0].graph
    if any(a.graph != G for a in offers):
        raise WeightError("offers are on different graphs")
    total = {e: sum((a.get(e) for a in offers), Fraction(0)) for e in G.edges}
    idle = sorted(e for e, x in total.items() if x == 0)
    if idle:
        raise InactiveEdge(f"zero aggregate offer on edges {idle}")
    return EdgeWeights(G, total)


def market_prices(G: DirectedGraph, b: EdgeWeights) -> PriceVector:
    """Session prices. The kernel solve is cubic in m, where summing
    arborescences grows like m**(m-2)."""
    return prices_by_balance_solve(G, b)


def returns(G: DirectedGraph, a, b: EdgeWeights, prices: PriceVector | None = None) -> Vector:
    a = _as_offer(G, a)
    p = prices or market_prices(G, b)
    r = [Fraction(0)] * G.m
    for (i, j), x in a.offers.items():
        r[j - 1] += p[i] / p[j] * x
    return tuple(r)


def net_trade(G: DirectedGraph, a, b: EdgeWeights, prices: PriceVector | None = None) -> Vector:
    a = _as_offer(G, a)
    r = returns(G, a, b, prices)
    return tuple(x - y for x, y in zip(r, a.row_sums))


def dot(p: PriceVector, v: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(p.prices, v)), Fraction(0))


@dataclass
class TraderSession:
    traders: list[OfferMatrix]
    aggregate: EdgeWeights
    prices: PriceVector
    returns: list[Vector]
    net_trades: list[Vector]

    def to_json(self) -> dict:
        return {
            "prices": [format_rational(p) for p in self.prices.prices],
            "normalization": "p1=1",
            "aggregate": self.aggregate.to_json()["weights"],
            "traders": [
                {
                    "returns": [format_rational(x) for x in r],
                    "net_trade": [format_rational(x) for x in v],
                }
                for r, v in zip(self.returns, self.net_trades)
            ],
        }


def run_session(G: DirectedGraph, offers: Sequence) -> TraderSession:
    """Clear one round of offers; conservation and budget balance are asserted."""
    traders = [_as_offer(G, a) for a in offers]
    b = aggregate(traders)
    p = market_prices(G, b)
    rets = [returns(G, a, b, p) for a in traders]
    nets = [tuple(x - y for x, y in zip(r, a.row_sums)) for r, a in zip(rets, traders)]
    supplied = [sum(col, Fraction(0)) for col in zip(*(a.row_sums for a in traders))]
    paid_out = [sum(col, Fraction(0)) for col in zip(*rets)]
    if supplied != paid_out:
        raise InternalInvariantError(f"commodities not conserved: {supplied} vs {paid_out}")
    for v in nets:
        if dot(p, v) != 0:
            raise InternalInvariantError(f"budget imbalance {dot(p, v)} for net trade {v}")
    return TraderSession(traders, b, p, rets, nets)


# -- exchange routing ---------------------------------------------------------------

@dataclass
class ExchangeStep:
    edge: Edge
    offered: Fraction
    received: Fraction


@dataclass
class ExchangePlan:
    source: int
    target: int
    steps: list[ExchangeStep]
    offer: OfferMatrix
    net: Vector

    @property
    def ratio(self) -> Fraction:
        """Units of target obtained per unit of source given up."""
        return self.net[self.target - 1] / -self.net[self.source - 1]

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "steps": [
                {
                    "edge": list(s.edge),
                    "offered": format_rational(s.offered),
                    "received": format_rational(s.received),
                }
                for s in self.steps
            ],
            "net_trade": [format_rational(x) for x in self.net],
            "ratio": format_rational(self.ratio),
        }


def plan_along(G: DirectedGraph, b: EdgeWeights, path: Sequence[int], x, prices=None) -> ExchangePlan:
    """Offer ``x`` of ``path[0]`` and pass every proceeds on along the path."""
    x = as_rational(x)
    p = prices or market_prices(G, b)
    steps, amount, offer = [], x, {}
    for u, w in zip(path, path[1:]):
        if (u, w) not in G.edges:
            raise WeightError(f"{(u, w)} is not an edge")
        got = returns(G, {(u, w): amount}, b, p)[w - 1]
        steps.append(ExchangeStep((u, w), amount, got))
        offer[(u, w)] = amount
        amount = got
    a = OfferMatrix(G, offer)
    return ExchangePlan(path[0], path[-1], steps, a, net_trade(G, a, b, p))


def route_exchange(G: DirectedGraph, b: EdgeWeights, i: int, j: int, x) -> ExchangePlan:
    """Convert ``x`` units of i into j along the lexicographically least
    shortest path."""
    x = as_rational(x)
    if x <= 0:
        raise WeightError("exchange amount must be positive")
    return plan_along(G, b, shortest_path(G, i, j), x)


def exchange_ratio(G: DirectedGraph, b: EdgeWeights, i: int, j: int) -> Fraction:
    return price_ratio(G, b, i, j)


# -- axiom checker --------------------------------------------------------------

AXIOMS = (
    "conservation",
    "budget_balance",
    "no_arbitrage",
    "anonymity",
    "aggregation",
    "invariance",
    "linearity",
    "price_mediation",
    "common_exchange_ratio",
    "oracle_prices",
)


@dataclass
class SamplerConfig:
    instances: int = 1000
    max_m: int = 6
    max_traders: int = 5
    max_num: int = 100
    max_den: int = 100
    seed: int = 0
    graph: DirectedGraph | None = None


@dataclass
class AxiomReport:
    instances: int = 0
    passed: dict[str, int] = field(default_factory=lambda: {k: 0 for k in AXIOMS})
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and self.instances > 0

    def to_json(self) -> dict:
        return {"instances": self.instances, "passed": self.passed, "failures": self.failures}


def random_rational(rng: random.Random, max_num: int, max_den: int) -> Fraction:
    return Fraction(rng.randint(1, max_num), rng.randint(1, max_den))


def random_connected_graph(rng: random.Random, m: int) -> DirectedGraph:
    pairs = list(itertools.permutations(range(1, m + 1), 2))
    while True:
        density = rng.uniform(0.2, 0.9)
        G = DirectedGraph(m, [e for e in pairs if rng.random() < density])
        if is_connected(G):
            return G


def random_offers(rng: random.Random, G: DirectedGraph, n: int, max_num: int, max_den: int) -> list[OfferMatrix]:
    """n offers, sparse per trader, positive in aggregate on every edge."""
    edges = G.sorted_edges()
    raw: list[dict] = [{} for _ in range(n)]
    for e in edges:
        holders = [k for k in range(n) if rng.random() < 0.6] or [rng.randrange(n)]
        for k in holders:
            raw[k][e] = random_rational(rng, max_num, max_den)
    if n > 1 and rng.random() < 0.2:
        raw[rng.randrange(n)] = {}  # an idle trader
        if any(all(e not in r for r in raw) for e in edges):
            return random_offers(rng, G, n, max_num, max_den)
    return [OfferMatrix(G, r) for r in raw]


def _value_circulation(G: DirectedGraph, p: PriceVector, rng: random.Random) -> dict[Edge, Fraction]:
    """Offers along one cycle carrying one unit of value per edge; adding them
    to any aggregate leaves the balance equations, hence prices, unchanged."""
    cycles = list(simple_cycles(G))
    C = cycles[rng.randrange(len(cycles))]
    return {(C[k], C[(k + 1) % len(C)]): 1 / p[C[k]] for k in range(len(C))}


def _is_no_arbitrage(v: Vector) -> bool:
    return all(x == 0 for x in v) or (any(x > 0 for x in v) and any(x < 0 for x in v))


def check_instance(G: DirectedGraph, traders: list[OfferMatrix], rng: random.Random) -> dict[str, bool]:
    """Run every axiom check on one session; True means the identity held."""
    overshoot = 100
    out: dict[str, bool] = {}
    s = run_session(G, traders)
    b, p = s.aggregate, s.prices
    m = G.m

    supplied = [sum(col, Fraction(0)) for col in zip(*(a.row_sums for a in traders))]
    out["conservation"] = supplied == [sum(col, Fraction(0)) for col in zip(*s.returns)]
    out["budget_balance"] = all(dot(p, v) == 0 for v in s.net_trades)
    out["no_arbitrage"] = all(_is_no_arbitrage(v) for v in s.net_trades)
    out["oracle_prices"] = prices_by_tree_formula(G, b) == p

    perm = list(range(len(traders)))
    rng.shuffle(perm)
    s2 = run_session(G, [traders[k] for k in perm])
    out["anonymity"] = s2.returns == [s.returns[k] for k in perm]

    # split the last trader's offer into two pseudo-traders
    last = traders[-1]
    part = {e: x * Fraction(rng.randint(0, 10), 10) for e, x in last.offers.items()}
    first = OfferMatrix(G, part)
    second = OfferMatrix(G, {e: x - first.get(e) for e, x in last.offers.items()})
    s3 = run_session(G, traders[:-1] + [first, second])
    merged = tuple(x + y for x, y in zip(s3.returns[-2], s3.returns[-1]))
    out["aggregation"] = s3.returns[:-2] == s.returns[:-1] and merged == s.returns[-1]

    lam = [random_rational(rng, 20, 20) for _ in range(m)]
    scale_b = EdgeWeights(G, {(i, j): lam[i - 1] * x for (i, j), x in b.weights.items()})
    ok = True
    for a, v in zip(traders, s.net_trades):
        la = OfferMatrix(G, {(i, j): lam[i - 1] * x for (i, j), x in a.offers.items()})
        ok &= net_trade(G, la, scale_b) == tuple(lam[k] * v[k] for k in range(m))
    out["invariance"] = ok

    a1, a2 = traders[0], traders[-1]
    c1, c2 = random_rational(rng, 20, 20), random_rational(rng, 20, 20)
    combo = net_trade(G, a1.scaled(c1) + a2.scaled(c2), b, p)
    expect = tuple(c1 * x + c2 * y for x, y in zip(net_trade(G, a1, b, p), net_trade(G, a2, b, p)))
    big = a1.scaled(overshoot)  # deliberately exceeds the aggregate
    out["linearity"] = (
        combo == expect
        and net_trade(G, a1, b.scaled(c1)) == net_trade(G, a1, b, p)
        and net_trade(G, big, b, p) == tuple(overshoot * x for x in net_trade(G, a1, b, p))
        and returns(G, OfferMatrix(G), b, p) == (Fraction(0),) * m
    )

    circ = _value_circulation(G, p, rng)
    t = random_rational(rng, 20, 20)
    c = EdgeWeights(G, {e: x + t * circ.get(e, 0) for e, x in b.weights.items()})
    pc = market_prices(G, c)
    out["price_mediation"] = (
        pc == p
        and c != b
        and all(returns(G, a, c) == r for a, r in zip(traders, s.returns))
        and all(returns(G, a, b.scaled(t)) == r for a, r in zip(traders, s.returns))
    )

    i, j = rng.sample(range(1, m + 1), 2)
    ratio = p.ratio(i, j)
    plans = [plan_along(G, b, path, random_rational(rng, 20, 20), p) for path in itertools.islice(all_simple_paths(G, i, j), 6)]
    mixed = plans[0].offer.scaled(random_rational(rng, 5, 5))
    for plan in plans[1:]:
        mixed = mixed + plan.offer.scaled(random_rational(rng, 5, 5))
    nu = net_trade(G, mixed, b, p)
    out["common_exchange_ratio"] = all(pl.ratio == ratio for pl in plans) and (
        nu[j - 1] / -nu[i - 1] == ratio
        and all(nu[k] == 0 for k in range(m) if k not in (i - 1, j - 1))
    )
    return out


def check_axioms(cfg: SamplerConfig | None = None) -> AxiomReport:
    """Sample random sessions and tally which identities held.

    Instance k draws from ``random.Random(f"{seed}:{k}")`` so any failure can
    be replayed alone.
    """
    cfg = cfg or SamplerConfig()
    report = AxiomReport()
    for k in range(cfg.instances):
        rng = random.Random(f"{cfg.seed}:{k}")
        G = cfg.graph or random_connected_graph(rng, rng.randint(2, cfg.max_m))
        n = rng.randint(1, cfg.max_traders)
        traders = random_offers(rng, G, n, cfg.max_num, cfg.max_den)
        try:
            results = check_instance(G, traders, rng)
        except Exception as exc:  # report, never mask
            results = {k2: False for k2 in AXIOMS}
            results["error"] = repr(exc)
        report.instances += 1
        bad = [name for name in AXIOMS if not results.get(name)]
        for name in AXIOMS:
            report.passed[name] += bool(results.get(name))
        if bad:
            report.failures.append(
                {"instance": k, "seed": f"{cfg.seed}:{k}", "failed": bad,
                 "graph": G.to_json(), "error": results.get("error")}
            )
    return report
