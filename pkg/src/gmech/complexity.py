"""Time and price complexity of G-mechanisms.

Time complexity is the diameter of G. Price complexity counts, for each
ordered pair, the edge weights that can move the ratio ``p_i / p_j``.

Writing ``p_r = A_r + x * B_r`` for an edge variable ``x`` (tree
polynomials are squarefree, so linear in ``x``), the ratio ``p_i / p_j``
depends on ``x`` exactly when ``A_j * B_i - A_i * B_j`` is a nonzero
polynomial. The exact method expands that difference; the randomized
method evaluates it at random points of a prime field.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .graphs import (
    DirectedGraph,
    Edge,
    MechanismClass,
    distance_matrix,
    edge_index,
    enumerate_arborescences,
    require_connected,
    to_mask,
)
from .prices import PRIME, tree_prices_mod

EXACT = "exact"
RANDOMIZED = "randomized"
DEFAULT_TRIALS = 3


@dataclass(frozen=True)
class InfluenceReport:
    pair: tuple[int, int]
    influential: frozenset[Edge]
    method: str


@dataclass
class ComplexityProfile:
    """0-based matrices; entry ``[i-1][j-1]`` belongs to the pair (i, j)."""

    m: int
    tau_ij: list[list[int]] | None = None
    pi_ij: list[list[int]] | None = None
    tau: int | None = None
    pi: int | None = None
    method: str | None = None
    trials: int | None = None
    seed: int | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "tau": self.tau,
            "pi": self.pi,
            "tau_ij": self.tau_ij,
            "pi_ij": self.pi_ij,
            "method": self.method,
            "prime_field": {"prime": str(PRIME), "trials": self.trials, "seed": self.seed},
            "notes": list(self.notes),
        }


def tau_profile(G: DirectedGraph) -> ComplexityProfile:
    d = distance_matrix(G)
    tau = max((d[a][b] for a in range(G.m) for b in range(G.m) if a != b), default=0)
    return ComplexityProfile(G.m, tau_ij=d, tau=tau)


# -- exact ------------------------------------------------------------------------

def _tree_codes(G: DirectedGraph) -> list[list[int]]:
    """Arborescences per root as integers with one base-4 digit per edge.

    Adding two codes multiplies the monomials; exponents stay below 4 for
    products of two squarefree monomials, so digits never carry.
    """
    idx = edge_index(G.m)
    return [
        [sum(4 ** idx[e] for e in t) for t in enumerate_arborescences(G, r)]
        for r in G.vertices
    ]


def _product(P: list[int], Q: list[int]) -> Counter:
    return Counter(a + b for a in P for b in Q)


def _exact_table(G: DirectedGraph, pairs: list[tuple[int, int]]) -> dict[tuple[int, int], set[Edge]]:
    codes = _tree_codes(G)
    idx = edge_index(G.m)
    table: dict[tuple[int, int], set[Edge]] = {pr: set() for pr in pairs}
    for e in G.edges:
        unit = 4 ** idx[e]
        split = []
        for trees in codes:
            A = [c for c in trees if not (c // unit) & 3]
            B = [c - unit for c in trees if (c // unit) & 3]
            split.append((A, B))
        for i, j in pairs:
            Ai, Bi = split[i - 1]
            Aj, Bj = split[j - 1]
            if not Bi and not Bj:
                continue
            if not Ai and not Aj:
                continue
            if _product(Aj, Bi) != _product(Ai, Bj):
                table[(i, j)].add(e)
    return table


# -- randomized -------------------------------------------------------------------

def _rng(G: DirectedGraph, seed: int) -> random.Random:
    return random.Random((seed << 80) ^ (G.m << 64) ^ to_mask(G))


def _randomized_table(
    G: DirectedGraph, pairs: list[tuple[int, int]], trials: int, seed: int
) -> dict[tuple[int, int], set[Edge]]:
    rng = _rng(G, seed)
    edges = G.sorted_edges()
    table: dict[tuple[int, int], set[Edge]] = {pr: set() for pr in pairs}
    for _ in range(trials):
        point = {e: rng.randrange(1, PRIME) for e in edges}
        base = tree_prices_mod(G, point)
        for e in edges:
            moved = dict(point)
            while moved[e] == point[e]:
                moved[e] = rng.randrange(1, PRIME)
            alt = tree_prices_mod(G, moved)
            for i, j in pairs:
                if e in table[(i, j)]:
                    continue
                # cross-multiplied ratios; a difference certifies influence
                if (base[i - 1] * alt[j - 1] - alt[i - 1] * base[j - 1]) % PRIME:
                    table[(i, j)].add(e)
    return table


def _table(G, pairs, method, trials, seed):
    if method == EXACT:
        return _exact_table(G, pairs)
    if method == RANDOMIZED:
        return _randomized_table(G, pairs, trials, seed)
    raise ValueError(f"unknown method {method!r}; use 'exact' or 'randomized'")


def influential_edges(
    G: DirectedGraph,
    i: int,
    j: int,
    method: str = EXACT,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
) -> InfluenceReport:
    """Edges whose weight can change ``p_i / p_j`` on the open positive orthant.

    The randomized report never contains a false positive; it may miss an
    influential edge with probability at most ``(2(m-1)/PRIME) ** trials``.
    """
    require_connected(G)
    if i == j:
        raise ValueError("influential_edges needs i != j")
    found = _table(G, [(i, j)], method, trials, seed)[(i, j)]
    return InfluenceReport((i, j), frozenset(found), method)


def pi_profile(
    G: DirectedGraph, method: str = EXACT, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> ComplexityProfile:
    require_connected(G)
    n = G.m
    unordered = [(i, j) for i in G.vertices for j in G.vertices if i < j]
    table = _table(G, unordered, method, trials, seed)
    pi_ij = [[0] * n for _ in range(n)]
    for (i, j), found in table.items():
        # the influential set of p_i/p_j equals that of its reciprocal
        pi_ij[i - 1][j - 1] = pi_ij[j - 1][i - 1] = len(found)
    pi = max((max(row) for row in pi_ij), default=0)
    return ComplexityProfile(n, pi_ij=pi_ij, pi=pi, method=method, trials=trials, seed=seed)


def complexity_profile(
    G: DirectedGraph, method: str = EXACT, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> ComplexityProfile:
    t = tau_profile(G)
    p = pi_profile(G, method, trials, seed)
    p.tau_ij, p.tau = t.tau_ij, t.tau
    if method == RANDOMIZED:
        p.trials, p.seed = trials, seed
    else:
        p.trials = p.seed = None
    if G.m == 2:
        p.notes.append(
            "m=2: the single mechanism is the bidirected pair; computed tau=1, "
            "whereas the closed-form table lists 2"
        )
    return p


@dataclass(frozen=True)
class SpecialComplexity:
    tau: int
    pi: int
    closed_form: bool
    note: str | None = None


def special_complexity(cls: str, m: int) -> SpecialComplexity:
    """(tau, pi) of the star, cycle or complete mechanism on m commodities.

    Closed forms hold for ``m > 3``; smaller m is computed directly.
    """
    from .graphs import complete, cycle, star

    builders = {
        MechanismClass.STAR: star,
        MechanismClass.CYCLE: cycle,
        MechanismClass.COMPLETE: complete,
    }
    if cls not in builders:
        raise ValueError(f"no closed form for class {cls!r}")
    if not isinstance(m, int) or m < 2:
        raise ValueError("m must be an integer >= 2")
    if m > 3:
        tau, pi = {
            MechanismClass.STAR: (2, 4),
            MechanismClass.CYCLE: (m - 1, 2),
            MechanismClass.COMPLETE: (1, m * (m - 1)),
        }[cls]
        return SpecialComplexity(tau, pi, True)
    prof = complexity_profile(builders[cls](m))
    note = (
        "m=2: star, cycle and complete coincide (bidirected pair)"
        if m == 2
        else "m=3: the chorded triangle also scores (2, 4)"
    )
    return SpecialComplexity(prof.tau, prof.pi, False, note)
