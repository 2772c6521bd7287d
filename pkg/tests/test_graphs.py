import itertools
import json

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmech.graphs import (
    DirectedGraph,
    DisconnectedGraphError,
    GraphError,
    MechanismClass,
    NotCollapsible,
    NotProperSubgraph,
    canonical_key,
    chorded_triangle,
    circuit_rank,
    classify,
    collapse,
    collapse_failure,
    collapsible_edges,
    complete,
    count_arborescences,
    cycle,
    enumerate_arborescences,
    find_augmenting_path,
    is_connected,
    rose_petals,
    shortest_path,
    shortest_path_length,
    star,
)
from gmech.search import enumerate_mechanisms

from .strategies import connected_graphs


def G(m, edges):
    return DirectedGraph(m, edges)


def rose(*petal_lengths):
    """Rose centered at 1 with petals of the given cycle lengths."""
    edges, nxt = [], 2
    for L in petal_lengths:
        vs = [1] + list(range(nxt, nxt + L - 1))
        nxt += L - 1
        edges += [(vs[k], vs[(k + 1) % len(vs)]) for k in range(len(vs))]
    return DirectedGraph(nxt - 1, edges)


# -- construction and interchange -------------------------------------------------

def test_rejects_loops_duplicates_and_out_of_range():
    with pytest.raises(GraphError):
        G(3, [(2, 2)])
    with pytest.raises(GraphError):
        G(3, [(1, 4)])
    with pytest.raises(GraphError):
        G(3, [(0, 1)])
    with pytest.raises(GraphError):
        DirectedGraph.from_json({"m": 3, "edges": [[1, 2], [1, 2]]})
    with pytest.raises(GraphError):
        DirectedGraph.from_json({"m": 3, "edges": [[1, 2, 3]]})
    with pytest.raises(GraphError):
        DirectedGraph.from_json({"edges": []})


def test_json_round_trip():
    g = DirectedGraph.from_json('{"m": 3, "edges": [[1, 2], [2, 3], [3, 1]]}')
    assert g == cycle(3)
    assert DirectedGraph.from_json(json.dumps(g.to_json())) == g


def test_named_families():
    assert star(5).edges == {(5, i) for i in range(1, 5)} | {(i, 5) for i in range(1, 5)}
    assert star(4, money=1).edges == {(1, i) for i in range(2, 5)} | {(i, 1) for i in range(2, 5)}
    assert len(complete(4).edges) == 12
    assert chorded_triangle().edges == {(1, 3), (3, 1), (1, 2), (2, 3)}


# -- connectivity and distances ---------------------------------------------------

def test_is_connected_examples():
    assert is_connected(G(2, [(1, 2), (2, 1)]))
    assert not is_connected(G(3, [(1, 2), (2, 3)]))
    assert is_connected(chorded_triangle())


def test_shortest_path_examples():
    assert all(shortest_path_length(complete(4), i, j) == 1
               for i, j in itertools.permutations(range(1, 5), 2))
    assert shortest_path_length(cycle(5), 1, 5) == 4
    assert shortest_path_length(star(5), 1, 2) == 2
    assert shortest_path(star(5), 1, 2) == [1, 5, 2]


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraphError):
        shortest_path_length(G(3, [(1, 2), (2, 3)]), 1, 3)
    with pytest.raises(DisconnectedGraphError):
        classify(G(3, [(1, 2), (2, 1)]))


@given(connected_graphs(max_m=6))
def test_distances_match_networkx(g):
    ng = nx.DiGraph(list(g.edges))
    ng.add_nodes_from(g.vertices)
    d = dict(nx.all_pairs_shortest_path_length(ng))
    for i, j in itertools.permutations(g.vertices, 2):
        assert shortest_path_length(g, i, j) == d[i][j]


# -- arborescences ----------------------------------------------------------------

def test_arborescence_examples():
    assert enumerate_arborescences(cycle(3), 1) == [frozenset({(2, 3), (3, 1)})]
    assert set(enumerate_arborescences(chorded_triangle(), 3)) == {
        frozenset({(1, 3), (2, 3)}), frozenset({(1, 2), (2, 3)})
    }
    assert enumerate_arborescences(star(3), 3) == [frozenset({(1, 3), (2, 3)})]
    assert count_arborescences(complete(3), 1) == 3
    assert count_arborescences(chorded_triangle(), 3) == 2
    assert all(count_arborescences(cycle(4), r) == 1 for r in range(1, 5))


def _is_arborescence(g, root, t):
    if len(t) != g.m - 1:
        return False
    out = dict(t)
    if root in out or set(out) != set(g.vertices) - {root}:
        return False
    for v in g.vertices:
        seen = set()
        while v != root:
            if v in seen:
                return False
            seen.add(v)
            v = out[v]
    return True


@given(connected_graphs(max_m=5))
def test_arborescences_are_valid_and_counted(g):
    for r in g.vertices:
        trees = enumerate_arborescences(g, r)
        assert len(set(trees)) == len(trees) == count_arborescences(g, r)
        assert all(_is_arborescence(g, r, t) for t in trees)


def test_arborescences_match_brute_force_subsets():
    g = complete(4)
    for r in g.vertices:
        brute = {
            frozenset(s) for s in itertools.combinations(sorted(g.edges), 3)
            if _is_arborescence(g, r, s)
        }
        assert brute == set(enumerate_arborescences(g, r))


# -- circuit rank and classification ------------------------------------------------

def test_circuit_rank_examples():
    assert circuit_rank(cycle(5)) == 1
    assert circuit_rank(rose(2, 3)) == 2
    assert circuit_rank(rose(2, 2, 3)) == 3
    assert circuit_rank(chorded_triangle()) == 2


def test_classify_examples():
    assert classify(chorded_triangle()) == MechanismClass.CHORDED_CYCLE
    assert classify(G(5, [(1, 5), (5, 1), (2, 5), (5, 2), (3, 5), (5, 3), (4, 5), (5, 4)])) == "Star"
    assert classify(complete(4)) == MechanismClass.COMPLETE
    assert classify(cycle(4)) == MechanismClass.CYCLE
    assert classify(G(2, [(1, 2), (2, 1)])) == MechanismClass.CYCLE
    assert classify(G(1, [])) == MechanismClass.SINGLE_VERTEX
    assert classify(rose(2, 3)) == "Rose(2)"
    assert classify(rose(3, 3, 2)) == "Rose(3)"
    assert MechanismClass("Rose(2)").is_rose and MechanismClass("Star").is_rose


def test_rose_petals_are_disjoint_cycles():
    c, petals = rose_petals(rose(2, 3))
    assert c == 1 and sorted(len(p) for p in petals) == [1, 2]
    assert rose_petals(cycle(4)) is None


@given(connected_graphs(max_m=5), st.randoms(use_true_random=False))
def test_classify_is_relabeling_invariant(g, rnd):
    perm = list(g.vertices)
    rnd.shuffle(perm)
    assert classify(g.relabel(perm)) == classify(g)


def test_circuit_rank_cases_exhaustive():
    """c = 1 exactly for cycles and c = 2 exactly for chorded cycles and 2-roses."""
    for m in range(2, 6):
        for g, _ in enumerate_mechanisms(m):
            c, cls = circuit_rank(g), classify(g)
            assert (c == 1) == (cls == MechanismClass.CYCLE)
            two = cls == MechanismClass.CHORDED_CYCLE or cls == "Rose(2)" or (cls == "Star" and m == 3)
            assert (c == 2) == two, (g, cls)
            if c == 3 and not collapsible_edges(g)[0]:
                assert g.m <= 4


# -- collapse ---------------------------------------------------------------------

def test_collapse_examples():
    assert collapse(cycle(3), (1, 2)) == G(2, [(1, 2), (2, 1)])
    with pytest.raises(NotCollapsible) as exc:
        collapse(star(4), (1, 4))
    assert exc.value.condition == 2
    with pytest.raises(NotCollapsible) as exc:
        collapse(chorded_triangle(), (2, 3))
    assert exc.value.condition == 3
    assert collapse_failure(star(4), (4, 1))[0] == 1
    assert collapse_failure(star(4), (1, 2))[0] == 0


def test_collapsible_edge_sets():
    assert collapsible_edges(star(5)) == (frozenset(), True)
    assert collapsible_edges(chorded_triangle()) == (frozenset(), True)
    for m in range(3, 7):
        assert collapsible_edges(cycle(m)) == (cycle(m).edges, False)


@given(connected_graphs(min_m=3, max_m=6))
def test_collapse_keeps_connectivity_and_out_degrees(g):
    for e in collapsible_edges(g)[0]:
        i, j = e
        k = collapse(g, e)
        assert is_connected(k) and k.m == g.m - 1
        for v in g.vertices:
            if v != i:
                assert k.out_degree(v - (v > i)) == g.out_degree(v)


# -- augmenting paths ---------------------------------------------------------------

def test_augmenting_path_examples():
    tri = cycle(3).edges
    assert find_augmenting_path(chorded_triangle(), tri) == [1, 3]
    assert find_augmenting_path(complete(3), tri) in ([2, 1], [3, 2], [1, 3])
    r = rose(2, 3)
    assert find_augmenting_path(r, {(1, 2), (2, 1)}) == [1, 3, 4, 1]
    with pytest.raises(NotProperSubgraph):
        find_augmenting_path(cycle(3), cycle(3).edges)
    with pytest.raises(NotProperSubgraph):
        find_augmenting_path(cycle(3), {(1, 2)})


@given(connected_graphs(min_m=2, max_m=5), st.randoms(use_true_random=False))
def test_augmentation_raises_circuit_rank_by_one(g, rnd):
    # H: a cycle of g found by walking until a vertex repeats
    v, walk = 1, [1]
    while True:
        v = min(g.out_neighbors(v)) if rnd.random() < 0.5 else max(g.out_neighbors(v))
        if v in walk:
            cyc = walk[walk.index(v):]
            break
        walk.append(v)
    h = {(cyc[k], cyc[(k + 1) % len(cyc)]) for k in range(len(cyc))}
    hv = set(cyc)
    while h != g.edges or hv != set(g.vertices):
        path = find_augmenting_path(g, h, hv)
        before = len(h) - len(hv) + 1
        h |= set(zip(path, path[1:]))
        hv |= set(path)
        assert len(h) - len(hv) + 1 == before + 1


# -- canonical keys -----------------------------------------------------------------

def test_canonical_key_examples():
    assert canonical_key(cycle(3)) == canonical_key(G(3, [(1, 3), (3, 2), (2, 1)]))
    assert canonical_key(star(5, money=1)) == canonical_key(star(5))
    assert canonical_key(star(4)) != canonical_key(cycle(4))


@given(connected_graphs(max_m=5), connected_graphs(max_m=5))
def test_canonical_key_agrees_with_isomorphism(a, b):
    if a.m != b.m:
        return
    na, nb = nx.DiGraph(list(a.edges)), nx.DiGraph(list(b.edges))
    assert (canonical_key(a) == canonical_key(b)) == nx.is_isomorphic(na, nb)


@given(connected_graphs(max_m=5), st.randoms(use_true_random=False))
def test_canonical_key_is_relabeling_invariant(g, rnd):
    perm = list(g.vertices)
    rnd.shuffle(perm)
    assert canonical_key(g.relabel(perm)) == canonical_key(g)
