import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmech.graphs import DirectedGraph, chorded_triangle, cycle, star
from gmech.market import (
    AXIOMS,
    InactiveEdge,
    OfferMatrix,
    SamplerConfig,
    aggregate,
    check_axioms,
    check_instance,
    dot,
    exchange_ratio,
    net_trade,
    plan_along,
    returns,
    route_exchange,
    run_session,
)
from gmech.prices import EdgeWeights, WeightError, price_ratio, prices_by_tree_formula

from .strategies import positive_rationals, weighted_graphs

S3 = star(3)
B_STAR = EdgeWeights(S3, {(1, 3): 1, (3, 1): 2, (2, 3): 4, (3, 2): 2})
C3 = cycle(3)
B_CYC = EdgeWeights(C3, {(1, 2): 2, (2, 3): 3, (3, 1): 6})
PAIR = DirectedGraph(2, [(1, 2), (2, 1)])


def test_aggregate():
    b = aggregate([OfferMatrix(PAIR, {(1, 2): 1}), OfferMatrix(PAIR, {(2, 1): 2})])
    assert b.weights == {(1, 2): 1, (2, 1): 2}
    assert aggregate([OfferMatrix(S3, B_STAR.weights)]) == B_STAR
    with pytest.raises(InactiveEdge):
        aggregate([OfferMatrix(C3, {(1, 2): 1, (3, 1): 1})])
    with pytest.raises(WeightError):
        OfferMatrix(C3, {(1, 2): -1})


def test_returns_and_net_trade_examples():
    assert returns(S3, {(1, 3): 1}, B_STAR) == (0, 0, 2)
    assert returns(S3, {(3, 2): 1}, B_STAR) == (0, 2, 0)
    assert net_trade(S3, {(1, 3): 1}, B_STAR) == (-1, 0, 2)
    assert net_trade(S3, {}, B_STAR) == (0, 0, 0)
    assert net_trade(C3, {(1, 2): 1}, B_CYC) == (-1, F(3, 2), 0)
    assert returns(S3, B_STAR, B_STAR) == OfferMatrix(S3, B_STAR.weights).row_sums
    assert net_trade(S3, B_STAR, B_STAR) == (0, 0, 0)


def test_session_examples():
    one = run_session(S3, [B_STAR])
    assert one.returns == [OfferMatrix(S3, B_STAR.weights).row_sums]
    half = OfferMatrix(S3, B_STAR.weights).scaled(F(1, 2))
    two = run_session(S3, [half, half])
    assert two.returns[0] == two.returns[1] == tuple(x / 2 for x in one.returns[0])
    first = OfferMatrix(S3, {(1, 3): 1})
    rest = OfferMatrix(S3, {e: x - first.get(e) for e, x in B_STAR.weights.items()})
    s = run_session(S3, [first, rest])
    assert s.net_trades == [(-1, 0, 2), (1, 0, -2)]
    assert all(dot(s.prices, v) == 0 for v in s.net_trades)
    assert s.to_json()["traders"][0]["net_trade"] == ["-1", "0", "2"]


def test_invariance_example():
    lam = (2, 1, 1)
    scaled_b = EdgeWeights(S3, {(i, j): lam[i - 1] * x for (i, j), x in B_STAR.weights.items()})
    assert net_trade(S3, {(1, 3): 2}, scaled_b) == (-2, 0, 2)


def test_route_examples():
    plan = route_exchange(C3, B_CYC, 1, 3, 1)
    assert [(s.edge, s.offered, s.received) for s in plan.steps] == [
        ((1, 2), 1, F(3, 2)), ((2, 3), F(3, 2), 3)
    ]
    assert plan.net == (-1, 0, 3) and plan.ratio == 3 == exchange_ratio(C3, B_CYC, 1, 3)
    s5 = star(5)
    b = EdgeWeights(s5, {e: F(e[0] + 2 * e[1], 3) for e in s5.edges})
    p = route_exchange(s5, b, 1, 2, 1)
    assert [s.edge for s in p.steps] == [(1, 5), (5, 2)]
    assert p.ratio == b[(5, 1)] * b[(2, 5)] / (b[(1, 5)] * b[(5, 2)])
    direct = route_exchange(C3, B_CYC, 2, 3, 1)
    assert len(direct.steps) == 1 and direct.ratio == price_ratio(C3, B_CYC, 2, 3)
    tri = chorded_triangle()
    assert exchange_ratio(tri, EdgeWeights.uniform(tri), 1, 3) == F(1, 2)
    with pytest.raises(WeightError):
        route_exchange(C3, B_CYC, 1, 3, 0)
    with pytest.raises(WeightError):
        plan_along(C3, B_CYC, [1, 3], 1)


@given(weighted_graphs(max_m=5), st.data())
def test_exchange_ratios_are_reciprocal_and_path_free(gw, data):
    g, w = gw
    b = EdgeWeights(g, w)
    i, j = data.draw(st.sampled_from([(i, j) for i in g.vertices for j in g.vertices if i != j]))
    assert exchange_ratio(g, b, i, j) * exchange_ratio(g, b, j, i) == 1
    x = data.draw(positive_rationals)
    plan = route_exchange(g, b, i, j, x)
    assert plan.ratio == price_ratio(g, b, i, j)
    assert plan.net[i - 1] == -x and plan.net[j - 1] == x * plan.ratio


@given(weighted_graphs(max_m=5), st.lists(st.dictionaries(st.integers(0, 40), positive_rationals), min_size=1, max_size=4))
def test_sessions_conserve_and_balance(gw, raw):
    g, w = gw
    edges = g.sorted_edges()
    traders = [OfferMatrix(g, {edges[k % len(edges)]: x for k, x in d.items()}) for d in raw]
    traders.append(OfferMatrix(g, w))  # keep every edge active
    s = run_session(g, traders)
    assert s.prices == prices_by_tree_formula(g, s.aggregate)
    for a, v in zip(traders, s.net_trades):
        assert dot(s.prices, v) == 0
        assert all(x == 0 for x in v) or (min(v) < 0 < max(v))


def test_check_instance_reports_every_axiom():
    rng = random.Random(3)
    out = check_instance(S3, [OfferMatrix(S3, B_STAR.weights), OfferMatrix(S3, {(1, 3): 5})], rng)
    assert set(out) == set(AXIOMS) and all(out.values())


def test_check_axioms_is_reproducible():
    a = check_axioms(SamplerConfig(instances=60, seed=4))
    b = check_axioms(SamplerConfig(instances=60, seed=4))
    assert a.ok and a.to_json() == b.to_json()
    assert all(v == 60 for v in a.passed.values())
    fixed = check_axioms(SamplerConfig(instances=10, graph=S3))
    assert fixed.ok


def test_check_axioms_catches_wrong_prices(monkeypatch):
    from gmech import market
    from gmech.prices import PriceVector

    monkeypatch.setattr(market, "market_prices", lambda G, b: PriceVector(tuple(F(k) for k in G.vertices)))
    report = check_axioms(SamplerConfig(instances=5, seed=1, graph=C3))
    assert not report.ok and len(report.failures) == 5
    assert report.failures[0]["seed"] == "1:0"
