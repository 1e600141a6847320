"""
Comparing recommenders with k-fold cross-validation
===================================================

Every algorithm ranks each user's held-out items; lists are cut at k and
scored with precision, recall, F1, RMSE, MRR, diversity and coverage.
"""

from eccf import demo_dir, load_ratings
from eccf.ccg import CoocGraph, build_graph
from eccf.cli import format_report
from eccf.concepts import load_lexicon
from eccf.evaluation import ProtocolSettings, cross_validate
from eccf.ingest import filter_relevant_sessions, segment_sessions
from eccf.recommenders import SVDppParams

data = demo_dir()
R, cat = load_ratings(data / "ratings.csv", data / "items.csv")
lex = load_lexicon(data / "lexicon.csv", cat.categories)
g = build_graph(filter_relevant_sessions(segment_sessions(data / "query_log.tsv"), lex), lex)

settings = ProtocolSettings(
    algorithms=("U2UCF", "SCCF", "ECCF", "SVD++", "Random"),
    positive_variants=((4, 5), (5,)),
    k_values=(5, 10),
    folds=5,
    seed=1,
    svdpp=SVDppParams(n_epochs=10),
)
report = cross_validate(R, cat, g, settings)
print(format_report(report))

# With an empty graph the extension does nothing and ECCF reduces to SCCF
empty = CoocGraph(cat.categories, {})
degenerate = cross_validate(R, cat, empty, ProtocolSettings(algorithms=("SCCF", "ECCF"), positive_variants=((4, 5),), folds=5))
print("ECCF on empty graph == SCCF:", degenerate.values["SCCF"] == degenerate.values["ECCF{4,5}"])

# Long-format rows, ready for a dataframe
print(report.to_csv().splitlines()[:4])
