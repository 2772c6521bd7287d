"""Hypothesis strategies shared by the test modules."""

import itertools
from fractions import Fraction

from hypothesis import strategies as st

from gmech.graphs import DirectedGraph, is_connected


@st.composite
def connected_graphs(draw, min_m=2, max_m=5):
    m = draw(st.integers(min_m, max_m))
    pairs = list(itertools.permutations(range(1, m + 1), 2))
    edges = draw(st.sets(st.sampled_from(pairs)))
    G = DirectedGraph(m, edges)
    if is_connected(G):
        return G
    # fall back to adding a Hamiltonian cycle on a random order
    order = draw(st.permutations(range(1, m + 1)))
    cyc = {(order[k], order[(k + 1) % m]) for k in range(m)}
    return DirectedGraph(m, edges | cyc)


positive_rationals = st.builds(Fraction, st.integers(1, 60), st.integers(1, 60))


@st.composite
def weighted_graphs(draw, min_m=2, max_m=5):
    G = draw(connected_graphs(min_m, max_m))
    w = {e: draw(positive_rationals) for e in G.sorted_edges()}
    return G, w
