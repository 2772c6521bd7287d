"""Price rays of a G-mechanism.

Prices are computed two independent ways in exact rational arithmetic:
summing arborescence weights (the tree formula), and solving the
value-conservation system ``sum_i p_i b_ij = p_j sum_i b_ji`` for its
one-dimensional kernel. Both are normalized so that ``p_1 = 1``.

A third path evaluates the tree formula over a fixed prime field through
Laplacian minors; the complexity screen uses it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Mapping

from .graphs import (
    DirectedGraph,
    Edge,
    GraphError,
    enumerate_arborescences,
    laplacian,
    require_connected,
)

# 2**62 - 57, the largest prime below 2**62
PRIME = 4611686018427387847


class WeightError(ValueError):
    """Weights missing, off-graph or not strictly positive."""


class InternalInvariantError(RuntimeError):
    """An identity that must hold by construction failed."""


def as_rational(x) -> Fraction:
    """Exact rational from an int, Fraction or string ("3/5", "0.25")."""
    if isinstance(x, bool):
        raise TypeError("booleans are not weights")
    if isinstance(x, float):
        raise TypeError(f"float {x!r} is not exact; pass a string or Fraction")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise WeightError(f"cannot parse {x!r} as a rational") from exc
    raise TypeError(f"unsupported weight type {type(x).__name__}")


def format_rational(q: Fraction) -> str:
    """"num/den", or just "num" when the denominator is 1."""
    return str(Fraction(q))


def parse_edge_key(key: str) -> Edge:
    try:
        i, j = (int(t) for t in key.split(","))
    except ValueError as exc:
        raise WeightError(f"bad edge key {key!r}; expected 'i,j'") from exc
    return i, j


@dataclass(frozen=True)
class EdgeWeights:
    """Aggregate offer ``b``: a strictly positive rational on every edge of G."""

    graph: DirectedGraph
    weights: Mapping[Edge, Fraction]

    def __init__(self, graph: DirectedGraph, weights: Mapping[Edge, object]):
        w = {}
        for e, x in weights.items():
            e = tuple(e)
            if e not in graph.edges:
                raise WeightError(f"weight given for {e}, which is not an edge")
            q = as_rational(x)
            if q <= 0:
                raise WeightError(f"weight on {e} must be strictly positive, got {q}")
            w[e] = q
        missing = sorted(graph.edges - w.keys())
        if missing:
            raise WeightError(f"missing weights for edges {missing}")
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "weights", w)

    def __getitem__(self, e: Edge) -> Fraction:
        return self.weights[e]

    def scaled(self, c) -> EdgeWeights:
        c = as_rational(c)
        return EdgeWeights(self.graph, {e: c * x for e, x in self.weights.items()})

    def to_json(self) -> dict:
        return {
            "weights": {
                f"{i},{j}": format_rational(self.weights[(i, j)])
                for i, j in self.graph.sorted_edges()
            }
        }

    @classmethod
    def from_json(cls, graph: DirectedGraph, data: dict | str) -> EdgeWeights:
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict) or not isinstance(data.get("weights"), dict):
            raise WeightError('weights JSON must be {"weights": {"i,j": "num/den"}}')
        return cls(graph, {parse_edge_key(k): v for k, v in data["weights"].items()})

    @classmethod
    def uniform(cls, graph: DirectedGraph, value=1) -> EdgeWeights:
        return cls(graph, {e: value for e in graph.edges})


@dataclass(frozen=True)
class TreePolynomial:
    """Sum of squarefree monomials, one per arborescence rooted at ``root``."""

    graph: DirectedGraph
    root: int
    terms: frozenset[frozenset[Edge]]

    def evaluate(self, weights: Mapping[Edge, object]):
        total = 0
        for t in self.terms:
            total += reduce(lambda acc, e: acc * weights[e], t, 1)
        return total

    def __len__(self) -> int:
        return len(self.terms)

    def __str__(self) -> str:
        monos = sorted("".join(f"b{i}{j}" for i, j in sorted(t)) for t in self.terms)
        return " + ".join(monos)


@lru_cache(maxsize=8192)
def tree_price_polynomial(G: DirectedGraph, i: int) -> TreePolynomial:
    return TreePolynomial(G, i, frozenset(enumerate_arborescences(G, i)))


@dataclass(frozen=True)
class PriceVector:
    """Representative of the price ray with ``p_1 = 1``."""

    prices: tuple[Fraction, ...]

    def __getitem__(self, i: int) -> Fraction:
        """1-based commodity lookup."""
        return self.prices[i - 1]

    def __len__(self) -> int:
        return len(self.prices)

    def ratio(self, i: int, j: int) -> Fraction:
        return self[i] / self[j]

    def to_json(self) -> dict:
        return {"prices": [format_rational(p) for p in self.prices], "normalization": "p1=1"}


def _normalize(raw: list[Fraction]) -> PriceVector:
    if any(x <= 0 for x in raw):
        raise InternalInvariantError(f"nonpositive price in {raw}")
    return PriceVector(tuple(x / raw[0] for x in raw))


def _check(G: DirectedGraph, b: EdgeWeights) -> None:
    if b.graph != G:
        raise WeightError("weights belong to a different graph")
    require_connected(G)


def prices_by_tree_formula(G: DirectedGraph, b: EdgeWeights) -> PriceVector:
    _check(G, b)
    # every tree has m-1 edges, so clearing denominators scales all prices alike
    d = math.lcm(*(w.denominator for w in b.weights.values())) if b.weights else 1
    ints = {e: int(w * d) for e, w in b.weights.items()}
    return _normalize([Fraction(tree_price_polynomial(G, i).evaluate(ints)) for i in G.vertices])


def balance_matrix(G: DirectedGraph, b: EdgeWeights) -> list[list[Fraction]]:
    """Row j: ``sum_i p_i b_ij - p_j sum_i b_ji`` as coefficients of p."""
    n = G.m
    M = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), w in b.weights.items():
        M[j - 1][i - 1] += w
        M[i - 1][i - 1] -= w
    return M


def kernel(M: list[list[Fraction]]) -> list[list[Fraction]]:
    """Basis of the right kernel via reduced row echelon form, pivots chosen
    left to right, first nonzero row."""
    rows = [list(r) for r in M]
    n_rows, n_cols = len(rows), len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        piv = next((k for k in range(r, n_rows) if rows[k][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for k in range(n_rows):
            if k != r and rows[k][c] != 0:
                f = rows[k][c]
                rows[k] = [x - f * y for x, y in zip(rows[k], rows[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n_cols
        v[fc] = Fraction(1)
        for k, pc in enumerate(pivots):
            v[pc] = -rows[k][fc]
        basis.append(v)
    return basis


def prices_by_balance_solve(G: DirectedGraph, b: EdgeWeights) -> PriceVector:
    _check(G, b)
    basis = kernel(balance_matrix(G, b))
    if len(basis) != 1:
        raise InternalInvariantError(f"balance kernel has dimension {len(basis)}, expected 1")
    v = basis[0]
    if v[0] < 0:
        v = [-x for x in v]
    return _normalize(v)


def balance_residual(G: DirectedGraph, b: EdgeWeights, p: PriceVector) -> list[Fraction]:
    M = balance_matrix(G, b)
    return [sum((row[k] * p.prices[k] for k in range(G.m)), Fraction(0)) for row in M]


def price_ratio(G: DirectedGraph, b: EdgeWeights, i: int, j: int) -> Fraction:
    if i == j:
        raise ValueError("price_ratio needs i != j")
    return prices_by_tree_formula(G, b).ratio(i, j)


# -- prime field ------------------------------------------------------------------

def det_mod(M: list[list[int]], p: int = PRIME) -> int:
    n = len(M)
    A = [[x % p for x in row] for row in M]
    det = 1
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det = det * A[c][c] % p
        inv = pow(A[c][c], -1, p)
        for r in range(c + 1, n):
            f = A[r][c] * inv % p
            if f:
                A[r] = [(x - f * y) % p for x, y in zip(A[r], A[c])]
    return det % p


def tree_prices_mod(G: DirectedGraph, weights: Mapping[Edge, int], p: int = PRIME) -> list[int]:
    """Unnormalized tree-formula prices mod ``p`` via Laplacian minors."""
    L = laplacian(G, weights)
    n = G.m
    out = []
    for r in range(n):
        minor = [[L[a][c] for c in range(n) if c != r] for a in range(n) if a != r]
        out.append(det_mod(minor, p))
    return out


def reduce_mod(x: Fraction, p: int = PRIME) -> int:
    return x.numerator % p * pow(x.denominator, -1, p) % p


__all__ = [
    "PRIME",
    "EdgeWeights",
    "GraphError",
    "InternalInvariantError",
    "PriceVector",
    "TreePolynomial",
    "WeightError",
    "as_rational",
    "balance_matrix",
    "balance_residual",
    "det_mod",
    "format_rational",
    "kernel",
    "price_ratio",
    "prices_by_balance_solve",
    "prices_by_tree_formula",
    "tree_price_polynomial",
    "tree_prices_mod",
]
