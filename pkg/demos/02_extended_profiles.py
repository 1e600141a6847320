"""
Category profiles and their extension
=====================================

UC counts, per user, the rated items of each category. EP adds one unit to a
category whenever a positively rated item has it among the heaviest
co-occurrence neighbors of its own categories.
"""

import numpy as np

from eccf import demo_dir, load_ratings
from eccf.ccg import build_graph
from eccf.concepts import load_lexicon
from eccf.ingest import filter_relevant_sessions, segment_sessions
from eccf.profiles import build_ep, build_uc, ep_contributions

data = demo_dir()
R, cat = load_ratings(data / "ratings.csv", data / "items.csv")
lex = load_lexicon(data / "lexicon.csv", cat.categories)
g = build_graph(filter_relevant_sessions(segment_sessions(data / "query_log.tsv"), lex), lex)
print(R, "over", len(cat.categories), "categories")

UC = build_uc(R, cat)
u = 0
print("UC of", R.users.name(u), {cat.categories.name(c): w for c, w in UC.row(u).items()})

# Stricter notions of a positive rating extend less
for pos in ({3, 4, 5}, {4, 5}, {5}):
    EP = build_ep(UC, R, cat, g, pos)
    added = EP.toarray() - UC.toarray()
    print(f"positive={sorted(pos)}: {int(added.sum())} increments, user {u} gets {int(added[u].sum())}")

# Where the increments of one user come from
for item, rating, reached in ep_contributions(u, R, cat, g, {5})[:3]:
    print(R.items.name(item), rating, "->", sorted(cat.categories.name(c) for c in reached))

# Each positive item adds at most one unit per category
EP = build_ep(UC, R, cat, g, {4, 5}).toarray()
assert np.all(EP >= UC.toarray())
