"""Synthetic corpora with planted category-preference clusters.

Categories are split into clusters. Each user belongs to one cluster, explores
a random subset of that cluster's categories more often than the rest, and
rates in-cluster items higher. Search sessions are drawn from the same
clusters, so the co-occurrence graph links categories of one cluster.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from eccf.ingest import ITEMS_HEADER, LOG_HEADER, RATINGS_HEADER, TIME_FORMAT

NAMES = (
    "Pizza", "Sushi Bars", "Burgers", "Italian", "Japanese", "American",
    "Desserts", "Ramen", "Barbeque", "Wine Bars", "Tea Rooms", "Chicken Wings",
)  # fmt: skip

SYNONYMS = {
    "Pizza": ["pizzeria"],
    "Sushi Bars": ["sushi", "sashimi"],
    "Burgers": ["burger", "cheeseburger"],
    "Italian": ["trattoria"],
    "Japanese": ["izakaya"],
    "American": ["diner"],
    "Desserts": ["ice cream", "cake shop"],
    "Ramen": ["tonkotsu"],
    "Barbeque": ["bbq", "smokehouse"],
    "Wine Bars": ["wine tasting"],
    "Tea Rooms": ["green tea", "matcha"],
    "Chicken Wings": ["buffalo wings"],
}

# each ambiguous term refers to every category listed
AMBIGUOUS = {
    "noodles": ("Ramen", "Italian"),
    "bar": ("Wine Bars", "Sushi Bars"),
    "wings": ("Chicken Wings", "Barbeque"),
    "sweet": ("Desserts", "Tea Rooms", "Barbeque"),
}

FILLER = ("best", "near me", "cheap", "open late", "reviews", "downtown", "menu", "delivery", "recipe", "coupons")
OFFTOPIC = ("weather", "lyrics", "used cars", "flights", "horoscope", "tax forms", "movie times", "jobs")


@dataclass
class Corpus:
    ratings: list[tuple[str, str, int]]
    items: dict[str, list[str]]
    log: list[tuple[str, str, str, str, str]]
    lexicon: list[tuple[str, str]]
    user_cluster: dict[str, int]
    category_cluster: dict[str, int]

    def write(self, directory: str | Path) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {
            "ratings": d / "ratings.csv",
            "items": d / "items.csv",
            "log": d / "query_log.tsv",
            "lexicon": d / "lexicon.csv",
        }
        with open(paths["ratings"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RATINGS_HEADER)
            w.writerows(self.ratings)
        with open(paths["items"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ITEMS_HEADER)
            for item, cats in self.items.items():
                w.writerow((item, "|".join(cats)))
        with open(paths["log"], "w", newline="", encoding="utf-8") as fh:
            fh.write("\t".join(LOG_HEADER) + "\n")
            for row in self.log:
                fh.write("\t".join(row) + "\n")
        with open(paths["lexicon"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("term", "category"))
            w.writerows(self.lexicon)
        return paths


def category_names(n: int) -> list[str]:
    if n <= len(NAMES):
        return list(NAMES[:n])
    return list(NAMES) + [f"Category {k:02d}" for k in range(len(NAMES), n)]


def make_corpus(
    n_users: int = 50,
    n_items: int = 100,
    n_categories: int = 12,
    n_clusters: int = 3,
    n_sessions: int = 200,
    ratings_per_user: tuple[int, int] = (24, 45),
    offtopic_sessions: float = 0.15,
    seed: int = 0,
) -> Corpus:
    """Generate ratings, item categories, a query log and a lexicon."""
    rng = np.random.default_rng(seed)
    cats = category_names(n_categories)
    cat_cluster = {c: k % n_clusters for k, c in enumerate(cats)}
    by_cluster = [[c for c in cats if cat_cluster[c] == k] for k in range(n_clusters)]

    # items: one primary category, sometimes a second one from the same cluster
    items: dict[str, list[str]] = {}
    item_cluster = []
    for j in range(n_items):
        primary = cats[rng.integers(n_categories)]
        chosen = [primary]
        if rng.random() < 0.4:
            pool = [c for c in by_cluster[cat_cluster[primary]] if c != primary]
            if pool:
                chosen.append(pool[rng.integers(len(pool))])
        items[f"b{j:04d}"] = chosen
        item_cluster.append(cat_cluster[primary])
    item_names = list(items)
    quality = rng.normal(0.0, 0.4, n_items)

    ratings = []
    user_cluster = {}
    for u in range(n_users):
        name = f"u{u:04d}"
        k = int(rng.integers(n_clusters))
        user_cluster[name] = k
        own = by_cluster[k]
        favorites = set(rng.choice(own, size=max(1, len(own) // 2), replace=False).tolist())
        weights = np.array(
            [6.0 if favorites & set(items[i]) else 2.0 if item_cluster[j] == k else 1.0
             for j, i in enumerate(item_names)]
        )  # fmt: skip
        n = min(n_items, int(rng.integers(ratings_per_user[0], ratings_per_user[1] + 1)))
        picked = rng.choice(n_items, size=n, replace=False, p=weights / weights.sum())
        for j in sorted(picked.tolist()):
            base = 4.2 if item_cluster[j] == k else 2.2
            r = int(np.clip(np.rint(base + quality[j] + rng.normal(0.0, 0.7)), 1, 5))
            ratings.append((name, item_names[j], r))

    lexicon = []
    terms_of: dict[str, list[str]] = {}
    for c in cats:
        terms = [c.lower()] + SYNONYMS.get(c, [])
        terms_of[c] = terms
        lexicon.extend((t, c) for t in terms)
    ambiguous = {t: cs for t, cs in AMBIGUOUS.items() if all(c in cat_cluster for c in cs)}
    for t, cs in ambiguous.items():
        lexicon.extend((t, c) for c in cs)

    log = []
    n_searchers = max(1, n_sessions // 5)
    clock = {s: datetime(2006, 3, 1) + timedelta(minutes=int(rng.integers(0, 600))) for s in range(n_searchers)}
    for _ in range(n_sessions):
        s = int(rng.integers(n_searchers))
        anon = str(1000 + s)
        t = clock[s] + timedelta(minutes=31 + int(rng.integers(0, 2000)))
        if rng.random() < offtopic_sessions:
            queries = [OFFTOPIC[rng.integers(len(OFFTOPIC))] for _ in range(int(rng.integers(1, 3)))]
        else:
            k = int(rng.integers(n_clusters))
            queries = []
            for _ in range(int(rng.integers(1, 5))):
                words = []
                for _ in range(int(rng.integers(1, 3))):
                    r = rng.random()
                    if r < 0.1:
                        words.append(cats[rng.integers(n_categories)].lower())
                    elif r < 0.2 and ambiguous:
                        words.append(list(ambiguous)[rng.integers(len(ambiguous))])
                    else:
                        c = by_cluster[k][rng.integers(len(by_cluster[k]))]
                        words.append(terms_of[c][rng.integers(len(terms_of[c]))])
                if rng.random() < 0.5:
                    words.append(FILLER[rng.integers(len(FILLER))])
                queries.append(" ".join(words))
        for q in queries:
            stamp = t.strftime(TIME_FORMAT)
            log.append((anon, q, stamp, "", ""))
            if rng.random() < 0.3:
                rank = int(rng.integers(1, 10))
                log.append((anon, q, stamp, str(rank), f"http://www.example{rank}.com"))
            t += timedelta(minutes=int(rng.integers(1, 29)))
        clock[s] = t
    return Corpus(ratings, items, log, lexicon, user_cluster, cat_cluster)
