"""Exhaustive sweep of G-mechanisms on m commodities.

Labeled edge sets are bitmasks (bit order from :func:`graphs.edge_index`).
Strong connectivity and canonical keys are computed for whole blocks of
masks at once with numpy; the per-class complexity work then runs on one
representative per isomorphism class.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import complexity as cx
from .graphs import (
    DirectedGraph,
    MechanismClass,
    classify,
    complete,
    cycle,
    edge_index,
    from_mask,
    key_from_mask,
    star,
)
from .prices import PRIME, as_rational

MIN_M, MAX_M = 2, 6
BLOCK_BITS = 20

WEAK = "weak"  # no worse in both coordinates, strictly better in one
STRICT = "strict"  # strictly better in both coordinates
SCREENED = "screened"


class SearchError(ValueError):
    pass


@dataclass
class SearchConfig:
    m: int
    method: str = cx.EXACT  # exact | screened
    workers: int = 1
    seed: int = 0
    trials: int = cx.DEFAULT_TRIALS


@dataclass
class MechanismRecord:
    graph: DirectedGraph
    cls: str
    tau: int
    pi: int
    labeled_count: int
    pi_method: str = cx.EXACT

    @property
    def key(self) -> bytes:
        return key_from_mask(self.graph.m, _mask_of(self.graph))

    def cost(self, lam: Fraction, mu: Fraction) -> Fraction:
        return lam * self.pi + mu * self.tau

    def to_json(self) -> dict:
        return {
            "class": str(self.cls),
            "tau": self.tau,
            "pi": self.pi,
            "labeled_count": self.labeled_count,
            "pi_method": self.pi_method,
            "edges": [list(e) for e in self.graph.sorted_edges()],
        }


@dataclass
class ParetoFrontier:
    m: int
    minimal: list[MechanismRecord]
    dominance_rule: str
    metadata: dict = field(default_factory=dict)

    def profiles(self) -> set[tuple[str, int, int]]:
        return {(str(r.cls), r.tau, r.pi) for r in self.minimal}

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "dominance_rule": self.dominance_rule,
            "minimal": [r.to_json() for r in self.minimal],
            "metadata": self.metadata,
        }


def _mask_of(G: DirectedGraph) -> int:
    idx = edge_index(G.m)
    return sum(1 << idx[e] for e in G.edges)


# -- labeled enumeration ------------------------------------------------------

def _pairs(m: int) -> list[tuple[int, int]]:
    return list(itertools.permutations(range(m), 2))


def strongly_connected_masks(m: int, masks: np.ndarray) -> np.ndarray:
    """Boolean filter: which edge bitmasks are strongly connected on m vertices."""
    masks = masks.astype(np.int64)
    out = [np.zeros_like(masks) for _ in range(m)]
    inc = [np.zeros_like(masks) for _ in range(m)]
    for k, (i, j) in enumerate(_pairs(m)):
        bit = (masks >> k) & 1
        out[i] |= bit << j
        inc[j] |= bit << i
    full = (1 << m) - 1

    def closure(adj):
        reach = np.ones_like(masks)
        for _ in range(m - 1):
            for v in range(m):
                reach |= np.where((reach >> v) & 1 == 1, adj[v], 0)
        return reach

    return (closure(out) == full) & (closure(inc) == full)


def _perm_tables(m: int) -> list[list[np.ndarray]]:
    """Per vertex permutation, byte-chunk lookup tables mapping edge bits."""
    idx = {e: k for k, e in enumerate(_pairs(m))}
    n_bits = m * (m - 1)
    n_chunks = (n_bits + 7) // 8
    byte = np.arange(256, dtype=np.int64)
    tables = []
    for perm in itertools.permutations(range(m)):
        target = [1 << idx[(perm[i], perm[j])] for i, j in _pairs(m)]
        chunk_tables = []
        for c in range(n_chunks):
            t = np.zeros(256, dtype=np.int64)
            for b in range(8):
                k = 8 * c + b
                if k < n_bits:
                    t |= np.where((byte >> b) & 1 == 1, target[k], 0)
            chunk_tables.append(t)
        tables.append(chunk_tables)
    return tables


def canonical_masks(m: int, masks: np.ndarray, tables=None) -> np.ndarray:
    """Minimum permuted bitmask for every mask in the block."""
    tables = tables if tables is not None else _perm_tables(m)
    masks = masks.astype(np.int64)
    chunks = [(masks >> (8 * c)) & 255 for c in range(len(tables[0]))]
    best = None
    for chunk_tables in tables:
        permuted = chunk_tables[0][chunks[0]]
        for t, ch in zip(chunk_tables[1:], chunks[1:]):
            permuted = permuted | t[ch]
        best = permuted if best is None else np.minimum(best, permuted)
    return best


def _scan_block(args) -> dict[int, int]:
    m, start, stop = args
    masks = np.arange(start, stop, dtype=np.int64)
    masks = masks[strongly_connected_masks(m, masks)]
    if masks.size == 0:
        return {}
    keys, counts = np.unique(canonical_masks(m, masks), return_counts=True)
    return dict(zip(keys.tolist(), counts.tolist()))


def _check_m(m: int) -> None:
    if not isinstance(m, int) or not MIN_M <= m <= MAX_M:
        raise SearchError(f"m must be an integer in {MIN_M}..{MAX_M}, got {m!r}")


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def labeled_classes(m: int, workers: int = 1) -> dict[int, int]:
    """Canonical mask -> number of labeled strongly connected graphs in its class.

    The mask space is split into disjoint blocks; the merge sums counts, so
    the result does not depend on how blocks were distributed.
    """
    _check_m(m)
    total = 1 << (m * (m - 1))
    block = 1 << min(BLOCK_BITS, m * (m - 1))
    jobs = [(m, s, min(s + block, total)) for s in range(0, total, block)]
    merged: dict[int, int] = {}
    for part in _map(_scan_block, jobs, workers):
        for k, c in part.items():
            merged[k] = merged.get(k, 0) + c
    return dict(sorted(merged.items()))


def enumerate_mechanisms(m: int, workers: int = 1):
    """Yield ``(canonical graph, labeled multiplicity)`` in canonical-mask order.

    The canonical mask is also the first-seen labeled mask of its class
    under lexicographic enumeration, since it is the class minimum.
    """
    for mask, count in labeled_classes(m, workers).items():
        yield from_mask(m, mask), count


# -- profiles and frontier ---------------------------------------------------

def _profile_job(args) -> tuple[int, int, int]:
    m, mask, method, trials, seed = args
    G = from_mask(m, mask)
    tau = cx.tau_profile(G).tau
    pi = cx.pi_profile(G, method, trials, seed).pi
    return mask, tau, pi


def dominates(a: tuple[int, int], b: tuple[int, int], rule: str = WEAK) -> bool:
    """Does (tau, pi) profile ``a`` dominate ``b``?"""
    if rule == WEAK:
        return a[0] <= b[0] and a[1] <= b[1] and a != b
    if rule == STRICT:
        return a[0] < b[0] and a[1] < b[1]
    raise SearchError(f"unknown dominance rule {rule!r}")


def minimal_elements(records: list[MechanismRecord], rule: str = WEAK) -> list[MechanismRecord]:
    profiles = sorted({(r.tau, r.pi) for r in records})
    keep = {p for p in profiles if not any(dominates(q, p, rule) for q in profiles)}
    return [r for r in records if (r.tau, r.pi) in keep]


class Sweep:
    """All classes on m commodities with (tau, pi), upgrading screened pi values
    to exact ones on demand.

    A screened pi is a certified lower bound: every influence it reports was
    witnessed by an actual change in the ratio.
    """

    def __init__(self, cfg: SearchConfig):
        _check_m(cfg.m)
        if cfg.method not in (cx.EXACT, SCREENED):
            raise SearchError(f"method must be 'exact' or 'screened', got {cfg.method!r}")
        self.cfg = cfg
        t0 = time.perf_counter()
        classes = labeled_classes(cfg.m, cfg.workers)
        pi_method = cx.EXACT if cfg.method == cx.EXACT else cx.RANDOMIZED
        jobs = [(cfg.m, mask, pi_method, cfg.trials, cfg.seed) for mask in classes]
        results = _map(_profile_job, jobs, cfg.workers)
        self.records: list[MechanismRecord] = []
        for mask, tau, pi in results:
            G = from_mask(cfg.m, mask)
            self.records.append(
                MechanismRecord(G, classify(G), tau, pi, classes[mask],
                                cx.EXACT if cfg.method == cx.EXACT else SCREENED)
            )
        self.exact_verifications = 0
        self.sweep_seconds = time.perf_counter() - t0

    @property
    def labeled_total(self) -> int:
        return sum(r.labeled_count for r in self.records)

    def verify(self, rec: MechanismRecord) -> None:
        if rec.pi_method == cx.EXACT:
            return
        exact = cx.pi_profile(rec.graph, cx.EXACT).pi
        if exact < rec.pi:
            raise AssertionError(f"screened pi {rec.pi} exceeds exact {exact} for {rec.graph!r}")
        rec.pi, rec.pi_method = exact, cx.EXACT
        self.exact_verifications += 1

    def frontier(self, rule: str = WEAK) -> list[MechanismRecord]:
        """Minimal records under ``rule``, every one carrying an exact pi.

        Screened members are verified and the frontier recomputed until it is
        stable. Profiles tied with a member are members themselves and get
        verified too. Records left out stay dominated after verification,
        because exact pi can only be larger than its screened bound.
        """
        while True:
            front = minimal_elements(self.records, rule)
            pending = [r for r in front if r.pi_method != cx.EXACT]
            if not pending:
                return front
            for r in pending:
                self.verify(r)

    def weighted_argmin(self, lam: Fraction, mu: Fraction) -> list[MechanismRecord]:
        while True:
            best = min(r.cost(lam, mu) for r in self.records)
            winners = [r for r in self.records if r.cost(lam, mu) == best]
            pending = [r for r in winners if r.pi_method != cx.EXACT]
            if not pending:
                return winners
            for r in pending:
                self.verify(r)

    def metadata(self) -> dict:
        return {
            "method": self.cfg.method,
            "seed": self.cfg.seed,
            "trials": self.cfg.trials if self.cfg.method == SCREENED else None,
            "prime": str(PRIME),
            "workers": self.cfg.workers,
            "labeled_graphs": self.labeled_total,
            "classes": len(self.records),
            "exact_verifications": self.exact_verifications,
        }


def pareto_minimal(m: int, cfg: SearchConfig | None = None, rule: str = WEAK) -> ParetoFrontier:
    cfg = cfg or SearchConfig(m)
    if cfg.m != m:
        raise SearchError("config m disagrees with requested m")
    sweep = Sweep(cfg)
    front = sweep.frontier(rule)
    return ParetoFrontier(m, front, rule, sweep.metadata())


# -- weighted objective ------------------------------------------------------------

def special_records(m: int) -> list[MechanismRecord]:
    """Star, cycle and complete mechanisms with closed-form complexities."""
    out = []
    for cls, build, labeled in (
        (MechanismClass.STAR, star, m),
        (MechanismClass.CYCLE, cycle, math.factorial(m - 1)),
        (MechanismClass.COMPLETE, complete, 1),
    ):
        sc = cx.special_complexity(cls, m)
        out.append(MechanismRecord(build(m), MechanismClass(cls), sc.tau, sc.pi, labeled))
    return out


@dataclass
class WeightedChoice:
    record: MechanismRecord
    winners: list[MechanismRecord]
    unique: bool
    costs: dict[str, Fraction]
    cross_checked: bool


def _positive(x, name: str) -> Fraction:
    q = as_rational(x)
    if q <= 0:
        raise SearchError(f"{name} must be positive, got {q}")
    return q


def weighted_minimizer(
    m: int, lam, mu, cfg: SearchConfig | None = None, enumerate_up_to: int = 5
) -> WeightedChoice:
    """Minimize ``lam * pi + mu * tau`` over the mechanisms on m commodities.

    A positive weighted sum is minimized on the Pareto frontier, which for
    m > 3 consists of the star, cycle and complete mechanisms; their closed
    forms give the answer. For ``m <= enumerate_up_to`` the full sweep is
    searched as well and must agree.
    """
    lam, mu = _positive(lam, "lambda"), _positive(mu, "mu")
    if not isinstance(m, int) or m <= 3:
        raise SearchError("weighted_minimizer needs m > 3")
    specials = special_records(m)
    costs = {str(r.cls): r.cost(lam, mu) for r in specials}
    best = min(costs.values())
    winners = [r for r in specials if r.cost(lam, mu) == best]
    cross = False
    if m <= min(enumerate_up_to, MAX_M):
        sweep = Sweep(cfg or SearchConfig(m, method=SCREENED))
        full = sweep.weighted_argmin(lam, mu)
        full_profiles = sorted((str(r.cls), r.tau, r.pi) for r in full)
        spec_profiles = sorted((str(r.cls), r.tau, r.pi) for r in winners)
        if full_profiles != spec_profiles:
            raise AssertionError(
                f"enumeration argmin {full_profiles} disagrees with closed forms {spec_profiles}"
            )
        winners = full
        cross = True
    return WeightedChoice(winners[0], winners, len(winners) == 1, costs, cross)


def m0_bound(lam, mu) -> int:
    """Least m > 3 with ``m > 2 lam/mu + 3`` and ``m^2 - m > mu/lam + 4``.

    From there on the star strictly beats both the cycle and the complete
    mechanism under ``lam * pi + mu * tau``.
    """
    lam, mu = _positive(lam, "lambda"), _positive(mu, "mu")
    m = 4
    while not (m > 2 * lam / mu + 3 and m * m - m > mu / lam + 4):
        m += 1
    return m


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GMECH_WORKERS", "1")))
    except ValueError:
        return 1
