"""Identifier spaces and the frozen matrices shared by every stage.

All containers here are built once and then frozen: after construction they
expose read-only views and never mutate.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Mapping
from typing import Literal

import numpy as np
import scipy.sparse as sps

from eccf.errors import ColdStartError, DataError

_log = logging.getLogger(__name__)

RATING_SCALE = (1, 2, 3, 4, 5)


class Interner:
    """Bijection between external string ids and dense integer handles."""

    def __init__(self, names: Iterable[str] = (), kind: str = "id"):
        self.kind = kind
        self._index: dict[str, int] = {}
        self._names: list[str] = []
        self._frozen = False
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        if not isinstance(name, str) or not name:
            raise ValueError(f"{self.kind} name must be a nonempty string, got {name!r}")
        handle = self._index.get(name)
        if handle is None:
            if self._frozen:
                raise KeyError(f"unknown {self.kind} {name!r}")
            handle = len(self._names)
            self._index[name] = handle
            self._names.append(name)
        return handle

    def lookup(self, name: str) -> int | None:
        return self._index.get(name)

    def name(self, handle: int) -> str:
        return self._names[handle]

    def freeze(self) -> Interner:
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __repr__(self) -> str:
        return f"<Interner {self.kind}: {len(self)} names{' frozen' if self._frozen else ''}>"


class RatingsMatrix:
    """Sparse users x items matrix of integer ratings in 1..5.

    Build with :meth:`from_triples`. The matrix stores both a CSR view (rows are
    users) and a CSC view (columns are items); user means are computed once at
    construction.
    """

    def __init__(self, users: Interner, items: Interner, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values)
        if values.size and not np.issubdtype(values.dtype, np.integer):
            raise DataError("ratings must be integers")
        values = values.astype(np.int64)
        if values.size and (values.min() < 1 or values.max() > 5):
            raise DataError("ratings must lie in 1..5")

        self.users = users
        self.items = items
        shape = (len(users), len(items))
        csr = sps.csr_matrix((values, (rows, cols)), shape=shape, dtype=np.int64)
        if csr.nnz != values.size:
            raise DataError("duplicate (user, item) pairs; use from_triples to deduplicate")
        csr.sort_indices()
        self._csr = csr
        self._csc = csr.tocsc()
        self._csc.sort_indices()

        counts = np.diff(csr.indptr)
        sums = np.asarray(csr.sum(axis=1)).ravel().astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        self._counts = counts
        self._means = means
        for arr in (self._csr.data, self._csr.indices, self._csr.indptr, self._means, self._counts):
            arr.setflags(write=False)

    @classmethod
    def from_triples(
        cls,
        triples: Iterable[tuple[str, str, int]],
        users: Interner | None = None,
        items: Interner | None = None,
    ) -> RatingsMatrix:
        """Build from ``(user, item, rating)`` string triples.

        A repeated (user, item) pair keeps the last rating and logs a warning.
        """
        users = users if users is not None else Interner(kind="user")
        items = items if items is not None else Interner(kind="item")
        cells: dict[tuple[int, int], int] = {}
        dupes = 0
        for user, item, rating in triples:
            if isinstance(rating, bool) or not isinstance(rating, (int, np.integer)):
                raise DataError(f"rating for ({user}, {item}) is not an integer: {rating!r}")
            if rating not in RATING_SCALE:
                raise DataError(f"rating for ({user}, {item}) outside 1..5: {rating}")
            key = (users.intern(user), items.intern(item))
            if key in cells:
                dupes += 1
            cells[key] = int(rating)
        if dupes:
            _log.warning("%d duplicate ratings replaced by their last occurrence", dupes)
        if cells:
            (rows, cols), vals = zip(*cells.keys()), list(cells.values())
        else:
            rows, cols, vals = (), (), ()
        return cls(users, items, rows, cols, vals)

    # -- views -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def csr(self) -> sps.csr_matrix:
        return self._csr

    @property
    def csc(self) -> sps.csc_matrix:
        return self._csc

    @property
    def means(self) -> np.ndarray:
        """Per-user rating means; NaN for users without ratings."""
        return self._means

    @property
    def counts(self) -> np.ndarray:
        return self._counts

    def triples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(users, items, ratings)`` arrays in row-major order."""
        coo = self._csr.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data.astype(np.int64)

    def user_row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Items and ratings of user ``u``."""
        lo, hi = self._csr.indptr[u], self._csr.indptr[u + 1]
        return self._csr.indices[lo:hi], self._csr.data[lo:hi]

    def item_column(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Users who rated item ``i`` and their ratings."""
        lo, hi = self._csc.indptr[i], self._csc.indptr[i + 1]
        return self._csc.indices[lo:hi], self._csc.data[lo:hi]

    def get(self, u: int, i: int) -> int | None:
        items, ratings = self.user_row(u)
        pos = np.searchsorted(items, i)
        if pos < len(items) and items[pos] == i:
            return int(ratings[pos])
        return None

    def subset(self, mask: np.ndarray) -> RatingsMatrix:
        """Matrix over the same id spaces holding the triples selected by ``mask``.

        ``mask`` indexes the arrays returned by :meth:`triples`.
        """
        rows, cols, vals = self.triples()
        return RatingsMatrix(self.users, self.items, rows[mask], cols[mask], vals[mask])

    def __repr__(self) -> str:
        return f"<RatingsMatrix {self.shape[0]}x{self.shape[1]}, {self.nnz} ratings>"


def user_mean(R: RatingsMatrix, u: int) -> float:
    """Mean rating of user ``u``; raises :class:`ColdStartError` if ``u`` has none."""
    if u < 0 or u >= R.shape[0] or R.counts[u] == 0:
        raise ColdStartError(f"user {u} has no ratings")
    return float(R.means[u])


class CategoryCatalog:
    """Item -> category sets, with the exact reverse map and the category universe."""

    def __init__(self, items: Interner, categories: Interner, assignments: Mapping[int, Iterable[int]]):
        self.items = items
        self.categories = categories
        forward: dict[int, frozenset[int]] = {}
        reverse: dict[int, set[int]] = {}
        for item, cats in assignments.items():
            cats = frozenset(int(c) for c in cats)
            forward[int(item)] = cats
            for c in cats:
                reverse.setdefault(c, set()).add(int(item))
        self._forward = forward
        self._reverse = {c: frozenset(v) for c, v in reverse.items()}
        rows, cols = [], []
        for item, cats in forward.items():
            for c in sorted(cats):
                rows.append(item)
                cols.append(c)
        self._matrix = sps.csr_matrix(
            (np.ones(len(rows), dtype=np.int64), (rows, cols)),
            shape=(len(items), len(categories)),
        )

    def categories_of(self, item: int) -> frozenset[int]:
        return self._forward.get(item, frozenset())

    def items_of(self, category: int) -> frozenset[int]:
        return self._reverse.get(category, frozenset())

    @property
    def universe(self) -> range:
        return range(len(self.categories))

    @property
    def matrix(self) -> sps.csr_matrix:
        """Binary items x categories membership matrix."""
        return self._matrix

    def __len__(self) -> int:
        return len(self._forward)

    def __repr__(self) -> str:
        return f"<CategoryCatalog {len(self)} items, {len(self.categories)} categories>"


class ProfileMatrix:
    """Non-negative users x categories weights (the UC or EP matrix)."""

    def __init__(self, matrix: sps.spmatrix, role: Literal["UC", "EP"]):
        if role not in ("UC", "EP"):
            raise ValueError(f"unknown profile role {role!r}")
        m = sps.csr_matrix(matrix)
        m.eliminate_zeros()
        m.sort_indices()
        if m.nnz and m.data.min() < 0:
            raise ValueError("profile weights must be non-negative")
        if role == "UC" and m.nnz and not np.all(np.equal(np.mod(m.data, 1), 0)):
            raise ValueError("UC weights must be integer counts")
        m.data.setflags(write=False)
        self.role = role
        self._m = m

    @property
    def matrix(self) -> sps.csr_matrix:
        return self._m

    @property
    def shape(self) -> tuple[int, int]:
        return self._m.shape

    def row(self, u: int) -> dict[int, float]:
        lo, hi = self._m.indptr[u], self._m.indptr[u + 1]
        return {int(c): self._m.data[k].item() for k, c in zip(range(lo, hi), self._m.indices[lo:hi])}

    def __getitem__(self, key: tuple[int, int]):
        u, c = key
        return self._m[u, c]

    def toarray(self) -> np.ndarray:
        return self._m.toarray()

    def __repr__(self) -> str:
        return f"<ProfileMatrix {self.role} {self.shape[0]}x{self.shape[1]}, {self._m.nnz} nonzeros>"
