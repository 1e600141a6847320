"""Category co-occurrence graph built from search sessions.

Each session contributes, for every pair of categories, the maximum evidence
any of its queries gives that pair; edge weights sum those contributions over
sessions. Evidence is accumulated as exact fractions, so the resulting weights
do not depend on session order.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction
from itertools import combinations
from pathlib import Path

from eccf.concepts import Lexicon, QueryMatch, match_query
from eccf.datamodel import Interner
from eccf.errors import DataError
from eccf.ingest import Session

_log = logging.getLogger(__name__)

Pair = tuple[int, int]
ONE = Fraction(1)


def _pair(a: int, b: int) -> Pair:
    return (a, b) if a < b else (b, a)


def _offer(ev: dict[Pair, Fraction], a: int, b: int, value: Fraction):
    if a == b or value <= 0:
        return
    key = _pair(a, b)
    if value > ev.get(key, 0):
        ev[key] = value


def query_evidence(q: QueryMatch, session_unambiguous: Iterable[int]) -> dict[Pair, Fraction]:
    """Co-occurrence evidence contributed by one query of a session.

    Unambiguous categories of ``q`` pair with each other and with every
    unambiguous category of the session at evidence 1. Each ambiguous term
    with ``m`` readings pairs its readings with those categories at ``1/m``;
    readings of one term never pair with each other, and readings of two
    different ambiguous terms pair at the product of their weights.
    """
    ev: dict[Pair, Fraction] = {}
    anchors = set(q.unambiguous) | set(session_unambiguous)
    for c in q.unambiguous:
        for d in anchors:
            _offer(ev, c, d, ONE)
    for group, weight in q.ambiguous:
        for a in group:
            for d in anchors:
                _offer(ev, a, d, weight)
    for (g1, w1), (g2, w2) in combinations(q.ambiguous, 2):
        for a in g1:
            for b in g2:
                _offer(ev, a, b, w1 * w2)
    return ev


def session_evidence(matches: Sequence[QueryMatch]) -> dict[Pair, Fraction]:
    """Running maximum of :func:`query_evidence` over the queries of a session."""
    unambiguous: set[int] = set()
    for q in matches:
        unambiguous |= q.unambiguous
    out: dict[Pair, Fraction] = {}
    for q in matches:
        for key, value in query_evidence(q, unambiguous).items():
            if value > out.get(key, 0):
                out[key] = value
    return out


class CoocGraph:
    """Undirected weighted graph over category handles.

    Edges are stored once under ``(low, high)`` handle order. Adjacency lists are
    sorted by descending weight, ties broken by category name.
    """

    def __init__(self, categories: Interner, weights: Mapping[Pair, float]):
        self.categories = categories
        edges: dict[Pair, float] = {}
        for (a, b), w in weights.items():
            if a == b:
                raise ValueError(f"self-loop on category {a}")
            w = float(w)
            if w < 0:
                raise ValueError(f"negative weight on edge ({a}, {b})")
            if w > 0:
                edges[_pair(a, b)] = w
        self._edges = dict(sorted(edges.items()))
        adj: dict[int, list[tuple[int, float]]] = {}
        for (a, b), w in self._edges.items():
            adj.setdefault(a, []).append((b, w))
            adj.setdefault(b, []).append((a, w))
        for nbrs in adj.values():
            nbrs.sort(key=lambda e: (-e[1], categories.name(e[0])))
        self._adj = {c: tuple(v) for c, v in adj.items()}

    @property
    def edges(self) -> Mapping[Pair, float]:
        return self._edges

    def weight(self, a: int, b: int) -> float:
        return self._edges.get(_pair(a, b), 0.0)

    def neighbors(self, c: int) -> tuple[tuple[int, float], ...]:
        return self._adj.get(c, ())

    @property
    def nodes(self) -> list[int]:
        return sorted(self._adj)

    def __len__(self) -> int:
        return len(self._edges)

    def max_weight(self) -> float:
        return max(self._edges.values(), default=0.0)

    def heaviest_neighbors(self, c: int, top_arcs: int = 1) -> frozenset[int]:
        """Neighbors of ``c`` over its heaviest incident edges.

        With ``top_arcs=1`` this is the argmax set (all co-maximal neighbors).
        Larger values widen the cut to the ``top_arcs``-th heaviest edge; ties at
        the cut are included.
        """
        if top_arcs < 1:
            raise ValueError("top_arcs must be >= 1")
        nbrs = self._adj.get(c, ())
        if not nbrs:
            return frozenset()
        cut = nbrs[min(top_arcs, len(nbrs)) - 1][1]
        return frozenset(n for n, w in nbrs if w >= cut)

    def weight_distribution(self) -> list[float]:
        return sorted(self._edges.values(), reverse=True)

    def __repr__(self) -> str:
        return f"<CoocGraph {len(self._adj)} nodes, {len(self._edges)} edges>"


def heaviest_neighbors(g: CoocGraph, c: int, top_arcs: int = 1) -> frozenset[int]:
    return g.heaviest_neighbors(c, top_arcs)


def align_graph(g: CoocGraph, categories: Interner) -> CoocGraph:
    """Re-key ``g`` onto another category space, matching categories by name."""
    if g.categories is categories:
        return g
    weights = {}
    for (a, b), w in g.edges.items():
        ha = categories.lookup(g.categories.name(a))
        hb = categories.lookup(g.categories.name(b))
        if ha is None or hb is None:
            missing = g.categories.name(a) if ha is None else g.categories.name(b)
            raise DataError(f"graph category {missing!r} is not in the category universe")
        weights[_pair(ha, hb)] = w
    return CoocGraph(categories, weights)


def accumulate(sessions: Iterable[Sequence[QueryMatch]]) -> dict[Pair, Fraction]:
    """Exact edge weights: the sum over sessions of per-session evidence."""
    totals: dict[Pair, Fraction] = {}
    for matches in sessions:
        if not matches:
            continue
        for key, value in session_evidence(matches).items():
            totals[key] = totals.get(key, 0) + value
    return totals


def build_graph(sessions: Iterable[Session], lex: Lexicon) -> CoocGraph:
    totals = accumulate([match_query(q, lex) for q in s.queries] for s in sessions)
    g = CoocGraph(lex.categories, totals)
    _log.info("built co-occurrence graph: %r", g)
    return g


def write_graph(g: CoocGraph, path: str | Path):
    """CSV ``category_a,category_b,weight``; weights use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("category_a", "category_b", "weight"))
        for (a, b), weight in g.edges.items():
            w.writerow((g.categories.name(a), g.categories.name(b), repr(weight)))


def read_graph(path: str | Path, categories: Interner | None = None) -> CoocGraph:
    categories = categories if categories is not None else Interner(kind="category")
    weights: dict[Pair, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["category_a", "category_b", "weight"]:
            raise DataError(f"{path}: expected header category_a,category_b,weight")
        for row in reader:
            try:
                a = categories.intern(row["category_a"])
                b = categories.intern(row["category_b"])
            except KeyError as exc:
                raise DataError(f"{path}: {exc.args[0]}") from None
            try:
                weights[_pair(a, b)] = float(row["weight"])
            except ValueError:
                raise DataError(f"{path}: bad weight {row['weight']!r}") from None
    return CoocGraph(categories, weights)


def write_weight_distribution(g: CoocGraph, path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("rank", "weight"))
        for rank, weight in enumerate(g.weight_distribution(), start=1):
            w.writerow((rank, repr(weight)))
