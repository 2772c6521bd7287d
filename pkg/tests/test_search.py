import random
from fractions import Fraction as F

import numpy as np
import pytest

from gmech import complexity as cx
from gmech.graphs import canonical_mask, from_mask, is_connected
from gmech.search import (
    WEAK,
    SCREENED,
    STRICT,
    SearchConfig,
    SearchError,
    Sweep,
    canonical_masks,
    dominates,
    enumerate_mechanisms,
    labeled_classes,
    m0_bound,
    minimal_elements,
    pareto_minimal,
    special_records,
    strongly_connected_masks,
    weighted_minimizer,
)


@pytest.fixture(scope="module")
def sweeps():
    return {m: Sweep(SearchConfig(m)) for m in range(2, 6)}


def profiles(recs):
    return sorted((str(r.cls), r.tau, r.pi) for r in recs)


def test_enumeration_counts():
    assert [g.edges for g, _ in enumerate_mechanisms(2)] == [{(1, 2), (2, 1)}]
    for m, labeled, classes in ((3, 18, 5), (4, 1606, 83)):
        found = labeled_classes(m)
        assert sum(found.values()) == labeled and len(found) == classes


def test_vectorized_filters_match_scalar_code():
    m = 4
    masks = np.arange(1 << 12, dtype=np.int64)
    keep = masks[strongly_connected_masks(m, masks)]
    assert set(int(x) for x in keep) == {x for x in range(1 << 12) if is_connected(from_mask(m, x))}
    canon = canonical_masks(m, keep)
    for x, c in zip(keep[::37], canon[::37]):
        assert int(c) == canonical_mask(from_mask(m, int(x)))


def test_frontier_examples(sweeps):
    assert profiles(sweeps[4].frontier()) == [("Complete", 1, 12), ("Cycle", 3, 2), ("Star", 2, 4)]
    assert profiles(sweeps[5].frontier()) == [("Complete", 1, 20), ("Cycle", 4, 2), ("Star", 2, 4)]
    # m = 3: cycle weakly dominates star under the weak rule
    assert profiles(sweeps[3].frontier(WEAK)) == [("Complete", 1, 6), ("Cycle", 2, 2)]
    strict = profiles(sweeps[3].frontier(STRICT))
    assert ("ChordedCycle", 2, 4) in strict and ("Star", 2, 4) in strict


def test_pareto_minimal_report():
    front = pareto_minimal(4)
    assert front.profiles() == {("Complete", 1, 12), ("Cycle", 3, 2), ("Star", 2, 4)}
    data = front.to_json()
    assert data["metadata"]["labeled_graphs"] == 1606 and data["dominance_rule"] == WEAK
    assert sum(r["labeled_count"] for r in data["minimal"]) == 4 + 6 + 1


def test_screened_frontier_is_exact_and_deterministic():
    a = Sweep(SearchConfig(4, method=SCREENED, seed=1))
    b = Sweep(SearchConfig(4, method=SCREENED, seed=1, workers=2))
    fa, fb = a.frontier(), b.frontier()
    assert [r.key for r in fa] == [r.key for r in fb]
    assert all(r.pi_method == cx.EXACT for r in fa)
    for r in fa:
        prof = cx.complexity_profile(r.graph)
        assert (prof.tau, prof.pi) == (r.tau, r.pi)


def test_dominance_rules():
    assert dominates((2, 2), (2, 4), WEAK)
    assert not dominates((2, 2), (2, 4), STRICT)
    assert dominates((1, 2), (2, 4), STRICT)
    assert not dominates((2, 4), (2, 4), WEAK)


def test_closed_forms_match_enumeration(sweeps):
    for m in (4, 5):
        by_cls = {str(r.cls): (r.tau, r.pi, r.labeled_count) for r in sweeps[m].records}
        for r in special_records(m):
            assert by_cls[str(r.cls)] == (r.tau, r.pi, r.labeled_count)


def test_weighted_examples():
    c4 = weighted_minimizer(4, 1, 1)
    assert c4.record.cls == "Cycle" and c4.unique and c4.cross_checked
    assert c4.costs == {"Star": 6, "Cycle": 5, "Complete": 13}
    c6 = weighted_minimizer(6, 1, 1)
    assert c6.record.cls == "Star" and c6.costs == {"Star": 6, "Cycle": 7, "Complete": 31}
    c22 = weighted_minimizer(22, 9, 1)
    assert c22.record.cls == "Star" and c22.unique
    assert c22.costs == {"Star": 38, "Cycle": 39, "Complete": 4159}


def test_weighted_tie_is_reported():
    c5 = weighted_minimizer(5, 1, 1)
    assert not c5.unique and sorted(str(r.cls) for r in c5.winners) == ["Cycle", "Star"]


def test_m0_bound():
    assert m0_bound(9, 1) == 22
    assert m0_bound(1, 1) == 6
    assert m0_bound(1, 9) == 5
    assert max(m0_bound(9, 1), m0_bound(1, 9)) <= 22
    for lam, mu in ((9, 1), (1, 1), (1, 9), (F(3, 7), 2)):
        m0 = m0_bound(lam, mu)
        for m in range(m0, m0 + 30):
            assert weighted_minimizer(m, lam, mu, enumerate_up_to=0).record.cls == "Star"


def test_weighted_shortcut_is_sound(sweeps):
    rng = random.Random(5)
    for m in range(2, 6):
        recs = sweeps[m].records
        front = minimal_elements(recs, WEAK)
        for _ in range(50):
            lam, mu = F(rng.randint(1, 30), rng.randint(1, 30)), F(rng.randint(1, 30), rng.randint(1, 30))
            best = min(r.cost(lam, mu) for r in recs)
            assert min(r.cost(lam, mu) for r in front) == best
            assert {r.key for r in recs if r.cost(lam, mu) == best} <= {r.key for r in front}


def test_input_errors():
    with pytest.raises(SearchError):
        Sweep(SearchConfig(7))
    with pytest.raises(SearchError):
        Sweep(SearchConfig(4, method="fast"))
    with pytest.raises(SearchError):
        weighted_minimizer(3, 1, 1)
    with pytest.raises(SearchError):
        m0_bound(0, 1)


def test_default_workers_from_environment(monkeypatch):
    from gmech.search import default_workers

    monkeypatch.setenv("GMECH_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("GMECH_WORKERS", "many")
    assert default_workers() == 1
