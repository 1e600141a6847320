"""
Building a category co-occurrence graph from a query log
=========================================================

Sessions are cut from the raw log, each query is matched against a
term -> category lexicon, and co-occurring categories are linked.
"""

from datetime import timedelta

from eccf import demo_dir
from eccf.ccg import build_graph, session_evidence
from eccf.concepts import load_lexicon, match_query
from eccf.ingest import IngestStats, filter_relevant_sessions, segment_sessions

data = demo_dir()
lex = load_lexicon(data / "lexicon.csv")
print(len(lex), "lexicon terms;", "'noodles' maps to", lex.ambiguity("noodles"), "categories")

# A query can carry unambiguous and ambiguous concepts
m = match_query("best sushi and noodles downtown", lex)
name = lex.categories.name
print("unambiguous:", [name(c) for c in m.unambiguous])
print("ambiguous:", [([name(c) for c in g], str(w)) for g, w in m.ambiguous])

# Evidence of a session is the maximum over its queries, so repeating a query
# does not add anything
ev = session_evidence([m, m, match_query("ramen", lex)])
for (a, b), w in sorted(ev.items()):
    print(f"  {name(a):>12} -- {name(b):<12} {w}")

stats = IngestStats()
sessions = list(segment_sessions(data / "query_log.tsv", timedelta(minutes=30), stats))
relevant = list(filter_relevant_sessions(sessions, lex))
print(f"{len(sessions)} sessions, {len(relevant)} mention a category")

g = build_graph(relevant, lex)
print(g)
for c in g.nodes[:4]:
    heavy = sorted(name(n) for n in g.heaviest_neighbors(c))
    print(f"{name(c):>14} -> {heavy}  (weight {g.neighbors(c)[0][1]:g})")
