"""Category-based user profiles: rating counts (UC) and their extension (EP)."""

from __future__ import annotations

import csv
from collections.abc import Iterable
from pathlib import Path

import numpy as np
import scipy.sparse as sps

from eccf.ccg import CoocGraph, align_graph
from eccf.datamodel import CategoryCatalog, ProfileMatrix, RatingsMatrix

DEFAULT_POSITIVE = frozenset({4, 5})


def positive_set(ratings: Iterable[int]) -> frozenset[int]:
    pos = frozenset(int(r) for r in ratings)
    if not pos:
        raise ValueError("PositiveRatings must not be empty")
    if not pos <= {1, 2, 3, 4, 5}:
        raise ValueError(f"PositiveRatings outside 1..5: {sorted(pos)}")
    return pos


def positive_label(pos: Iterable[int]) -> str:
    return "{" + ",".join(str(r) for r in sorted(pos)) + "}"


def _indicator(R: RatingsMatrix, keep: Iterable[int] | None = None) -> sps.csr_matrix:
    m = R.csr.copy()
    if keep is None:
        m.data = np.ones_like(m.data)
    else:
        m.data = np.isin(m.data, list(keep)).astype(np.int64)
        m.eliminate_zeros()
    return m


def build_uc(R: RatingsMatrix, cat: CategoryCatalog) -> ProfileMatrix:
    """UC[u, c]: number of items rated by ``u`` that carry category ``c``."""
    return ProfileMatrix(_indicator(R) @ cat.matrix, "UC")


def catset(cat: CategoryCatalog, g: CoocGraph, item: int, top_arcs: int = 1) -> frozenset[int]:
    """Heaviest CCG neighbors of any category of ``item``."""
    g = align_graph(g, cat.categories)
    out: set[int] = set()
    for c in cat.categories_of(item):
        out |= g.heaviest_neighbors(c, top_arcs)
    return frozenset(out)


def catset_matrix(cat: CategoryCatalog, g: CoocGraph, top_arcs: int = 1) -> sps.csr_matrix:
    """Binary items x categories matrix with a 1 wherever ``c`` is in CatSet_i."""
    n_items, n_cats = cat.matrix.shape
    g = align_graph(g, cat.categories)
    per_cat = {c: g.heaviest_neighbors(c, top_arcs) for c in g.nodes}
    rows, cols = [], []
    for i in range(n_items):
        reach: set[int] = set()
        for c in cat.categories_of(i):
            reach |= per_cat.get(c, frozenset())
        for c in sorted(reach):
            rows.append(i)
            cols.append(c)
    return sps.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n_items, n_cats))


def build_ep(
    UC: ProfileMatrix,
    R: RatingsMatrix,
    cat: CategoryCatalog,
    g: CoocGraph,
    pos: Iterable[int] = DEFAULT_POSITIVE,
    top_arcs: int = 1,
) -> ProfileMatrix:
    """Extend UC by one unit per positively rated item whose CatSet holds ``c``."""
    pos = positive_set(pos)
    extension = _indicator(R, pos) @ catset_matrix(cat, g, top_arcs)
    return ProfileMatrix(UC.matrix + extension, "EP")


def ep_contributions(
    u: int, R: RatingsMatrix, cat: CategoryCatalog, g: CoocGraph, pos: Iterable[int], top_arcs: int = 1
) -> list[tuple[int, int, frozenset[int]]]:
    """``(item, rating, CatSet)`` for every positively rated item of ``u`` that extends EP."""
    pos = positive_set(pos)
    out = []
    for i, r in zip(*R.user_row(u)):
        if int(r) in pos:
            cs = catset(cat, g, int(i), top_arcs)
            if cs:
                out.append((int(i), int(r), cs))
    return out


def write_profile(P: ProfileMatrix, users, categories, path: str | Path):
    """CSV ``user_id,category,weight`` of the nonzero cells."""
    coo = P.matrix.tocoo()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("user_id", "category", "weight"))
        for u, c, v in zip(coo.row, coo.col, coo.data):
            w.writerow((users.name(int(u)), categories.name(int(c)), v.item()))
