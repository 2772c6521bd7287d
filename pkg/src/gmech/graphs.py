"""Opportunity graphs: simple loop-free digraphs on commodities 1..m.

Besides connectivity and distances this module holds the structural
machinery used when reasoning about price complexity: arborescence
enumeration, circuit rank, shape recognition (cycles, roses, chorded
cycles), edge collapses, augmenting paths and canonical keys.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

Edge = tuple[int, int]


class GraphError(ValueError):
    """Malformed graph input (loops, duplicates, bad labels)."""


class DisconnectedGraphError(GraphError):
    """Operation requires a strongly connected graph."""


class NotCollapsible(GraphError):
    """Edge fails one of the three collapsibility conditions."""

    def __init__(self, edge: Edge, condition: int, reason: str):
        super().__init__(f"edge {edge} not collapsible (condition {condition}): {reason}")
        self.edge = edge
        self.condition = condition
        self.reason = reason


class NotProperSubgraph(GraphError):
    pass


@dataclass(frozen=True)
class DirectedGraph:
    """Opportunity structure on commodities ``1..m``.

    ``edges`` holds ordered pairs ``(i, j)`` meaning commodity ``i`` may be
    offered for commodity ``j``.
    """

    m: int
    edges: frozenset[Edge]

    def __init__(self, m: int, edges: Iterable[Iterable[int]]):
        if not isinstance(m, int) or isinstance(m, bool) or m < 1:
            raise GraphError(f"vertex count must be a positive integer, got {m!r}")
        seen: set[Edge] = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if not (1 <= i <= m and 1 <= j <= m):
                raise GraphError(f"edge {(i, j)} has a label outside 1..{m}")
            if i == j:
                raise GraphError(f"loop {(i, j)} not allowed")
            if (i, j) in seen:
                raise GraphError(f"duplicate edge {(i, j)}")
            seen.add((i, j))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "edges", frozenset(seen))

    def __repr__(self) -> str:
        return f"DirectedGraph(m={self.m}, edges={self.sorted_edges()})"

    @property
    def vertices(self) -> range:
        return range(1, self.m + 1)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def out_neighbors(self, v: int) -> list[int]:
        return sorted(j for i, j in self.edges if i == v)

    def in_neighbors(self, v: int) -> list[int]:
        return sorted(i for i, j in self.edges if j == v)

    def out_degree(self, v: int) -> int:
        return sum(1 for i, _ in self.edges if i == v)

    def in_degree(self, v: int) -> int:
        return sum(1 for _, j in self.edges if j == v)

    def relabel(self, perm: dict[int, int] | Iterable[int]) -> DirectedGraph:
        """Apply a vertex permutation; ``perm`` maps old label to new label."""
        if not isinstance(perm, dict):
            perm = {v + 1: int(p) for v, p in enumerate(perm)}
        return DirectedGraph(self.m, ((perm[i], perm[j]) for i, j in self.edges))

    def to_json(self) -> dict:
        return {"m": self.m, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, data: dict | str) -> DirectedGraph:
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict) or "m" not in data or "edges" not in data:
            raise GraphError('graph JSON must be an object with "m" and "edges"')
        edges = data["edges"]
        if not isinstance(edges, list) or any(
            not isinstance(e, list) or len(e) != 2 or not all(isinstance(v, int) for v in e)
            for e in edges
        ):
            raise GraphError("edges must be a list of [i, j] integer pairs")
        if len({tuple(e) for e in edges}) != len(edges):
            dup = next(e for k, e in enumerate(edges) if e in edges[:k])
            raise GraphError(f"duplicate edge {tuple(dup)}")
        return cls(data["m"], edges)


# -- named families ---------------------------------------------------------

def star(m: int, money: int | None = None) -> DirectedGraph:
    """Every commodity trades only against ``money`` (default ``m``)."""
    c = m if money is None else money
    return DirectedGraph(m, [e for i in range(1, m + 1) if i != c for e in ((i, c), (c, i))])


def cycle(m: int) -> DirectedGraph:
    return DirectedGraph(m, [(i, i % m + 1) for i in range(1, m + 1)])


def complete(m: int) -> DirectedGraph:
    return DirectedGraph(m, itertools.permutations(range(1, m + 1), 2))


def chorded_triangle() -> DirectedGraph:
    return DirectedGraph(3, [(1, 3), (3, 1), (1, 2), (2, 3)])


def edge_index(m: int) -> dict[Edge, int]:
    """Bit position of each ordered pair; lexicographic over (i, j)."""
    return {e: k for k, e in enumerate(itertools.permutations(range(1, m + 1), 2))}


def to_mask(G: DirectedGraph) -> int:
    idx = edge_index(G.m)
    return sum(1 << idx[e] for e in G.edges)


def from_mask(m: int, mask: int) -> DirectedGraph:
    pairs = list(itertools.permutations(range(1, m + 1), 2))
    return DirectedGraph(m, [pairs[k] for k in range(len(pairs)) if mask >> k & 1])


# -- connectivity and distances ----------------------------------------------

def _reach(adj: dict[int, list[int]], src: int) -> dict[int, int]:
    dist = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        for w in adj.get(u, ()):
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def _adjacency(edges: Iterable[Edge]) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {}
    for i, j in sorted(edges):
        adj.setdefault(i, []).append(j)
    return adj


def strongly_connected(vertices: Iterable[int], edges: Iterable[Edge]) -> bool:
    vs = set(vertices)
    edges = list(edges)
    if len(vs) <= 1:
        return True
    fwd = _adjacency(edges)
    bwd = _adjacency((j, i) for i, j in edges)
    v0 = min(vs)
    return vs <= set(_reach(fwd, v0)) and vs <= set(_reach(bwd, v0))


def is_connected(G: DirectedGraph) -> bool:
    """True iff every ordered pair i != j is joined by a directed path."""
    return strongly_connected(G.vertices, G.edges)


def require_connected(G: DirectedGraph) -> None:
    if not is_connected(G):
        raise DisconnectedGraphError(f"{G!r} is not strongly connected")


def distance_matrix(G: DirectedGraph) -> list[list[int]]:
    """0-based ``d[i-1][j-1]`` shortest path lengths; diagonal is 0."""
    require_connected(G)
    adj = _adjacency(G.edges)
    d = [[0] * G.m for _ in range(G.m)]
    for i in G.vertices:
        for j, k in _reach(adj, i).items():
            d[i - 1][j - 1] = k
    return d


def shortest_path_length(G: DirectedGraph, i: int, j: int) -> int:
    if i == j:
        raise ValueError("shortest_path_length needs i != j")
    return distance_matrix(G)[i - 1][j - 1]


def shortest_path(G: DirectedGraph, i: int, j: int) -> list[int]:
    """Lexicographically least among the shortest i -> j vertex sequences."""
    require_connected(G)
    if i == j:
        raise ValueError("shortest_path needs i != j")
    # distances to j let us walk greedily from i picking the smallest label
    to_j = _reach(_adjacency((b, a) for a, b in G.edges), j)
    path = [i]
    while path[-1] != j:
        u = path[-1]
        path.append(min(w for w in G.out_neighbors(u) if to_j.get(w, -1) == to_j[u] - 1))
    return path


def all_simple_paths(G: DirectedGraph, i: int, j: int) -> Iterator[list[int]]:
    """Every simple directed path from i to j (i != j), lexicographic order."""
    adj = _adjacency(G.edges)

    def walk(path: list[int]) -> Iterator[list[int]]:
        u = path[-1]
        if u == j:
            yield list(path)
            return
        for w in adj.get(u, ()):
            if w not in path:
                path.append(w)
                yield from walk(path)
                path.pop()

    yield from walk([i])


# -- arborescences -------------------------------------------------------------

def enumerate_arborescences(G: DirectedGraph, root: int) -> list[frozenset[Edge]]:
    """All spanning trees with a unique directed path from each vertex to ``root``.

    Backtracks over one outgoing edge per non-root vertex and rejects choices
    that close a cycle.
    """
    require_connected(G)
    others = [v for v in G.vertices if v != root]
    choices = {v: G.out_neighbors(v) for v in others}
    parent: dict[int, int] = {}
    found: list[frozenset[Edge]] = []

    def closes_cycle(v: int) -> bool:
        u = parent[v]
        while u != root:
            if u == v:
                return True
            if u not in parent:
                return False
            u = parent[u]
        return False

    def rec(k: int) -> None:
        if k == len(others):
            found.append(frozenset(parent.items()))
            return
        v = others[k]
        for w in choices[v]:
            parent[v] = w
            if not closes_cycle(v):
                rec(k + 1)
            del parent[v]

    rec(0)
    return found


def bareiss_det(M: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free elimination."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(row) for row in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if A[r][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def laplacian(G: DirectedGraph, weight=None) -> list[list]:
    """Out-degree Laplacian ``D_out - A``, 0-based."""
    n = G.m
    L = [[0] * n for _ in range(n)]
    for i, j in G.edges:
        w = 1 if weight is None else weight[(i, j)]
        L[i - 1][j - 1] -= w
        L[i - 1][i - 1] += w
    return L


def count_arborescences(G: DirectedGraph, root: int) -> int:
    """Matrix-tree count: determinant of the Laplacian with ``root`` struck out."""
    require_connected(G)
    L = laplacian(G)
    r = root - 1
    minor = [[L[a][b] for b in range(G.m) if b != r] for a in range(G.m) if a != r]
    return bareiss_det(minor)


# -- structure --------------------------------------------------------------------

def circuit_rank(G: DirectedGraph) -> int:
    require_connected(G)
    return len(G.edges) - G.m + 1


def is_cycle(G: DirectedGraph) -> bool:
    return (
        G.m >= 2
        and len(G.edges) == G.m
        and all(G.out_degree(v) == 1 and G.in_degree(v) == 1 for v in G.vertices)
        and is_connected(G)
    )


def rose_petals(G: DirectedGraph) -> tuple[int, list[list[int]]] | None:
    """Decompose G as k >= 2 cycles sharing one vertex and otherwise disjoint.

    Returns ``(center, petals)`` with each petal the vertex sequence after the
    center, or None when G is not a rose.
    """
    for c in G.vertices:
        rest = [e for e in G.edges if c not in e]
        # away from the center every petal is a directed path
        nxt = dict(rest)
        if len(nxt) != len(rest) or len(set(nxt.values())) != len(rest):
            continue
        starts = [j for i, j in G.edges if i == c]
        ends = {i for i, j in G.edges if j == c}
        if len(starts) < 2 or len(ends) != len(starts):
            continue
        petals, used = [], {c}
        ok = True
        for s in sorted(starts):
            petal = [s]
            while petal[-1] in nxt:
                petal.append(nxt[petal[-1]])
                if len(petal) > G.m:
                    break
            if petal[-1] not in ends or used & set(petal) or len(set(petal)) != len(petal):
                ok = False
                break
            used |= set(petal)
            petals.append(petal)
        if ok and used == set(G.vertices) and sum(len(p) + 1 for p in petals) == len(G.edges):
            return c, petals
    return None


def simple_cycles(G: DirectedGraph) -> Iterator[list[int]]:
    """Each simple directed cycle once, as a vertex list starting at its minimum."""
    adj = _adjacency(G.edges)
    for s in G.vertices:
        stack = [(s, [s])]
        while stack:
            u, path = stack.pop()
            for w in adj.get(u, ()):
                if w == s and len(path) >= 2:
                    yield path
                elif w > s and w not in path:
                    stack.append((w, path + [w]))


def chord_decomposition(G: DirectedGraph) -> tuple[list[int], list[int]] | None:
    """Find a cycle C and a path P joining two distinct vertices of C, otherwise
    disjoint from it, with ``G = C + P``. Returns ``(C, P)`` or None."""
    for C in simple_cycles(G):
        cyc = {(C[k], C[(k + 1) % len(C)]) for k in range(len(C))}
        rest = G.edges - cyc
        if not rest:
            continue
        nxt = dict(rest)
        if len(nxt) != len(rest):
            continue
        targets = set(nxt.values())
        heads = [v for v in nxt if v not in targets]
        if len(heads) != 1 or heads[0] not in C:
            continue
        P = [heads[0]]
        while P[-1] in nxt and len(P) <= G.m:
            P.append(nxt[P[-1]])
        if (
            len(P) - 1 == len(rest)
            and P[-1] in C
            and P[-1] != P[0]
            and not set(P[1:-1]) & set(C)
            and len(set(P)) == len(P)
            and set(C) | set(P) == set(G.vertices)
        ):
            return C, P
    return None


class MechanismClass(str):
    """Shape tag. Plain string values; ``Rose(k)`` carries its petal count."""

    SINGLE_VERTEX = "SingleVertex"
    CYCLE = "Cycle"
    CHORDED_CYCLE = "ChordedCycle"
    STAR = "Star"
    COMPLETE = "Complete"
    OTHER = "Other"

    @classmethod
    def rose(cls, k: int) -> MechanismClass:
        return cls(f"Rose({k})")

    @property
    def is_rose(self) -> bool:
        return self.startswith("Rose(") or self == self.STAR


def classify(G: DirectedGraph) -> MechanismClass:
    """Most specific shape tag: Star, Rose(k), ChordedCycle, Cycle, Complete,
    SingleVertex, else Other."""
    require_connected(G)
    if G.m == 1:
        return MechanismClass(MechanismClass.SINGLE_VERTEX)
    rose = rose_petals(G)
    if rose is not None:
        _, petals = rose
        if all(len(p) == 1 for p in petals):
            return MechanismClass(MechanismClass.STAR)
        return MechanismClass.rose(len(petals))
    if chord_decomposition(G) is not None:
        return MechanismClass(MechanismClass.CHORDED_CYCLE)
    if is_cycle(G):
        return MechanismClass(MechanismClass.CYCLE)
    if len(G.edges) == G.m * (G.m - 1):
        return MechanismClass(MechanismClass.COMPLETE)
    return MechanismClass(MechanismClass.OTHER)


# -- collapses ----------------------------------------------------------------------

def collapse_failure(G: DirectedGraph, e: Edge) -> tuple[int, str] | None:
    i, j = e
    if e not in G.edges:
        return 0, "not an edge of the graph"
    if G.out_degree(i) != 1:
        return 1, f"vertex {i} has out-degree {G.out_degree(i)}, not ordinary"
    if (j, i) in G.edges:
        return 2, f"reverse edge {(j, i)} present"
    for k in G.vertices:
        if (k, i) in G.edges and (k, j) in G.edges:
            return 3, f"vertex {k} has edges to both {i} and {j}"
    return None


def collapsible_edges(G: DirectedGraph) -> tuple[frozenset[Edge], bool]:
    """Edges passing the collapse test, and whether the graph is rigid."""
    found = frozenset(e for e in G.edges if collapse_failure(G, e) is None)
    return found, not found


def collapse(G: DirectedGraph, e: Edge) -> DirectedGraph:
    """Contract collapsible edge ``(i, j)``: drop ``i`` and redirect ``l -> i``
    to ``l -> j``. Labels above ``i`` shift down by one."""
    fail = collapse_failure(G, e)
    if fail is not None:
        raise NotCollapsible(e, *fail)
    i, j = e

    def shift(v: int) -> int:
        return v - 1 if v > i else v

    new_edges = []
    for a, b in G.edges:
        if a == i:
            continue
        new_edges.append((shift(a), shift(j if b == i else b)))
    return DirectedGraph(G.m - 1, new_edges)


# -- augmentation ------------------------------------------------------------------

def find_augmenting_path(
    G: DirectedGraph, h_edges: Iterable[Edge], h_vertices: Iterable[int] | None = None
) -> list[int]:
    """Shortest path of G whose endpoints lie in H and which otherwise avoids H.

    H is given by its edges (and vertices, needed when H is a single vertex).
    Ties go to the lexicographically least vertex sequence. The endpoints may
    coincide, in which case the path is a cycle through H.
    """
    h_edges = frozenset(tuple(e) for e in h_edges)
    hv = set(h_vertices) if h_vertices is not None else {v for e in h_edges for v in e}
    if not hv:
        raise NotProperSubgraph("subgraph has no vertices")
    if not h_edges <= G.edges or not hv <= set(G.vertices):
        raise NotProperSubgraph("H is not contained in G")
    if any(a not in hv or b not in hv for a, b in h_edges):
        raise NotProperSubgraph("H edges must join H vertices")
    if h_edges == G.edges and hv == set(G.vertices):
        raise NotProperSubgraph("H equals G")
    if not strongly_connected(hv, h_edges):
        raise NotProperSubgraph("H is not connected")
    adj = _adjacency(G.edges - h_edges)

    def dfs(path: list[int], remaining: int) -> list[int] | None:
        u = path[-1]
        for w in adj.get(u, ()):
            if remaining == 1:
                if w in hv and (w != path[0] or len(path) >= 2):
                    return path + [w]
            elif w not in hv and w not in path:
                got = dfs(path + [w], remaining - 1)
                if got:
                    return got
        return None

    for length in range(1, G.m + 1):
        for s in sorted(hv):
            got = dfs([s], length)
            if got:
                return got
    raise NotProperSubgraph("no augmenting path; G is not connected")  # pragma: no cover


# -- canonical form ------------------------------------------------------------

def canonical_mask(G: DirectedGraph) -> int:
    """Minimum edge bitmask over every relabeling of the vertices."""
    idx = edge_index(G.m)
    best = None
    for perm in itertools.permutations(range(1, G.m + 1)):
        mask = 0
        for i, j in G.edges:
            mask |= 1 << idx[(perm[i - 1], perm[j - 1])]
        if best is None or mask < best:
            best = mask
    return best


def key_from_mask(m: int, mask: int) -> bytes:
    nbytes = max(1, (m * (m - 1) + 7) // 8)
    return bytes([m]) + mask.to_bytes(nbytes, "big")


def canonical_key(G: DirectedGraph) -> bytes:
    return key_from_mask(G.m, canonical_mask(G))


def canonical_form(G: DirectedGraph) -> DirectedGraph:
    return from_mask(G.m, canonical_mask(G))
