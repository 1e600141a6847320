"""Readers for the ratings corpus, item categories and the raw query log.

File formats:

* ratings: CSV with header ``user_id,item_id,rating``
* items: CSV with header ``item_id,categories``; categories separated by ``|``
* query log: TSV with header ``AnonID Query QueryTime ItemRank ClickURL``,
  ``QueryTime`` formatted ``YYYY-MM-DD HH:MM:SS``
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from eccf.concepts import Lexicon, match_query, normalize_query
from eccf.datamodel import CategoryCatalog, Interner, RatingsMatrix
from eccf.errors import DataError

_log = logging.getLogger(__name__)

TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
SESSION_GAP = timedelta(minutes=30)
MIN_USER_RATINGS = 20

RATINGS_HEADER = ("user_id", "item_id", "rating")
ITEMS_HEADER = ("item_id", "categories")
LOG_HEADER = ("AnonID", "Query", "QueryTime", "ItemRank", "ClickURL")


@dataclass
class IngestStats:
    """Tallies of everything dropped or skipped while reading input files."""

    counts: Counter = field(default_factory=Counter)

    def add(self, key: str, n: int = 1):
        self.counts[key] += n

    def __getitem__(self, key: str) -> int:
        return self.counts[key]

    def to_dict(self) -> dict[str, int]:
        return dict(sorted(self.counts.items()))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class RawQueryRecord:
    anon_id: str
    query_text: str
    timestamp: datetime
    item_rank: int | None = None
    click_url: str | None = None


@dataclass(frozen=True)
class Session:
    user: str
    queries: tuple[str, ...]
    timestamps: tuple[datetime, ...]

    def __len__(self) -> int:
        return len(self.queries)


def _check_header(path, found, expected):
    if found is None or tuple(found[: len(expected)]) != expected:
        raise DataError(f"{path}: expected header {','.join(expected)}, found {found}")


def read_items(path: str | Path, stats: IngestStats | None = None) -> dict[str, list[str]]:
    """Item id -> category names, in file order."""
    stats = stats if stats is not None else IngestStats()
    out: dict[str, list[str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        _check_header(path, next(reader, None), ITEMS_HEADER)
        for row in reader:
            if len(row) < 2 or not row[0]:
                stats.add("items_malformed_rows")
                continue
            cats = [c.strip() for c in row[1].split("|") if c.strip()]
            out[row[0]] = list(dict.fromkeys(cats))
    return out


def read_ratings(path: str | Path, stats: IngestStats | None = None) -> Iterator[tuple[str, str, int]]:
    stats = stats if stats is not None else IngestStats()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        _check_header(path, next(reader, None), RATINGS_HEADER)
        for row in reader:
            if len(row) < 3 or not row[0] or not row[1]:
                stats.add("ratings_malformed_rows")
                continue
            try:
                rating = int(row[2])
            except ValueError:
                stats.add("ratings_malformed_rows")
                continue
            if not 1 <= rating <= 5:
                stats.add("ratings_out_of_scale")
                continue
            yield row[0], row[1], rating


def load_ratings(
    ratings_path: str | Path,
    items_path: str | Path,
    categories: Iterable[str] | None = None,
    min_user_ratings: int = MIN_USER_RATINGS,
    stats: IngestStats | None = None,
) -> tuple[RatingsMatrix, CategoryCatalog]:
    """Load and filter the rating corpus.

    Filters run once, in order: items are projected onto the in-scope
    ``categories`` (default: every category in the items file) and items left
    without a category are dropped together with their ratings; then users with
    fewer than ``min_user_ratings`` ratings are dropped.

    The category universe is the sorted in-scope set, so it also holds
    categories whose items were all filtered out.
    """
    stats = stats if stats is not None else IngestStats()
    try:
        item_cats = read_items(items_path, stats)
        triples = list(read_ratings(ratings_path, stats))
    except OSError as exc:
        raise DataError(f"cannot read input: {exc}") from exc

    scope = set(categories) if categories is not None else None
    kept_items: dict[str, list[str]] = {}
    for item, cats in item_cats.items():
        if scope is not None:
            cats = [c for c in cats if c in scope]
        if cats:
            kept_items[item] = cats
        else:
            stats.add("items_without_category")

    in_scope = []
    for user, item, rating in triples:
        if item in kept_items:
            in_scope.append((user, item, rating))
        elif item in item_cats:
            stats.add("ratings_of_dropped_items")
        else:
            stats.add("ratings_unknown_item")

    last: dict[tuple[str, str], int] = {}
    for user, item, rating in in_scope:
        if (user, item) in last:
            stats.add("ratings_duplicate")
        last[(user, item)] = rating
    if stats["ratings_duplicate"]:
        _log.warning("%d duplicate ratings replaced by their last occurrence", stats["ratings_duplicate"])

    per_user = Counter(user for user, _ in last)
    kept = [(u, i, r) for (u, i), r in last.items() if per_user[u] >= min_user_ratings]
    dropped_users = sum(1 for n in per_user.values() if n < min_user_ratings)
    stats.add("users_below_min_ratings", dropped_users)
    stats.add("ratings_of_dropped_users", len(last) - len(kept))

    users = Interner(kind="user")
    items = Interner(kind="item")
    universe = scope if scope is not None else {c for cats in item_cats.values() for c in cats}
    cat_space = Interner(sorted(universe), kind="category")
    for _, item, _ in kept:
        items.intern(item)
    R = RatingsMatrix.from_triples(kept, users=users, items=items)
    users.freeze()
    items.freeze()
    cat_space.freeze()
    catalog = CategoryCatalog(
        items, cat_space, {items.lookup(i): [cat_space.lookup(c) for c in kept_items[i]] for i in items}
    )
    stats.add("users", len(users))
    stats.add("items", len(items))
    stats.add("ratings", R.nnz)
    _log.info("loaded %d ratings from %d users on %d items", R.nnz, len(users), len(items))
    return R, catalog


def write_ratings(R: RatingsMatrix, path: str | Path):
    rows, cols, vals = R.triples()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATINGS_HEADER)
        for u, i, r in zip(rows, cols, vals):
            w.writerow((R.users.name(u), R.items.name(i), int(r)))


def write_items(catalog: CategoryCatalog, path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ITEMS_HEADER)
        for i, name in enumerate(catalog.items):
            cats = sorted(catalog.categories.name(c) for c in catalog.categories_of(i))
            w.writerow((name, "|".join(cats)))


def read_query_log(path: str | Path, stats: IngestStats | None = None) -> Iterator[RawQueryRecord]:
    """Stream the records of a tab-separated query log, skipping malformed rows."""
    stats = stats if stats is not None else IngestStats()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        _check_header(path, next(reader, None), LOG_HEADER)
        for row in reader:
            if len(row) < 3 or not row[0]:
                stats.add("log_malformed_rows")
                continue
            try:
                ts = datetime.strptime(row[2], TIME_FORMAT)
            except ValueError:
                stats.add("log_bad_timestamp")
                continue
            rank = row[3] if len(row) > 3 else ""
            url = row[4] if len(row) > 4 else ""
            try:
                item_rank = int(rank) if rank else None
            except ValueError:
                item_rank = None
                stats.add("log_bad_item_rank")
            stats.add("log_records")
            yield RawQueryRecord(row[0], row[1], ts, item_rank, url or None)


def split_sessions(
    records: Iterable[RawQueryRecord], gap: timedelta = SESSION_GAP
) -> Iterator[Session]:
    """Group records per user and cut a new session whenever the gap exceeds ``gap``.

    Records are buffered per user and stably sorted by timestamp, so the input
    need not be ordered. Users are emitted in order of first appearance.
    """
    buffers: dict[str, list[RawQueryRecord]] = {}
    for rec in records:
        buffers.setdefault(rec.anon_id, []).append(rec)
    for user, recs in buffers.items():
        recs.sort(key=lambda r: r.timestamp)
        start = 0
        for k in range(1, len(recs) + 1):
            if k == len(recs) or recs[k].timestamp - recs[k - 1].timestamp > gap:
                chunk = recs[start:k]
                yield Session(
                    user,
                    tuple(normalize_query(r.query_text) for r in chunk),
                    tuple(r.timestamp for r in chunk),
                )
                start = k


def segment_sessions(
    log_path: str | Path, gap: timedelta = SESSION_GAP, stats: IngestStats | None = None
) -> Iterator[Session]:
    """Read a query log and split it into sessions (see :func:`split_sessions`)."""
    stats = stats if stats is not None else IngestStats()
    for session in split_sessions(read_query_log(log_path, stats), gap):
        stats.add("sessions")
        stats.add("session_queries", len(session))
        yield session


def filter_relevant_sessions(sessions: Iterable[Session], lexicon: Lexicon) -> Iterator[Session]:
    """Keep whole sessions in which at least one query matches a lexicon term."""
    for session in sessions:
        if any(match_query(q, lexicon) for q in session.queries):
            yield session


def sessions_summary(sessions: Iterable[Session]) -> dict[str, int]:
    n_sessions = n_queries = 0
    for s in sessions:
        n_sessions += 1
        n_queries += len(s)
    return {"sessions": n_sessions, "queries": n_queries}


def rating_histogram(R: RatingsMatrix) -> dict[int, int]:
    _, _, vals = R.triples()
    return {int(v): int(n) for v, n in zip(*np.unique(vals, return_counts=True))}
