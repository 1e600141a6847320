"""Category-based collaborative filtering with profiles extended by
co-occurring search interests."""

from importlib import resources
from pathlib import Path

from eccf.ccg import CoocGraph, build_graph, read_graph, write_graph
from eccf.concepts import Lexicon, QueryMatch, load_lexicon, match_query
from eccf.datamodel import CategoryCatalog, Interner, ProfileMatrix, RatingsMatrix, user_mean
from eccf.errors import ColdStartError, DataError, TrainingDivergence
from eccf.evaluation import MetricReport, ProtocolSettings, cross_validate, make_folds
from eccf.ingest import filter_relevant_sessions, load_ratings, segment_sessions
from eccf.profiles import build_ep, build_uc
from eccf.recommenders import NeighborModel, SVDpp, eccf, sccf, top_k, u2ucf

__version__ = "0.1.0"


def demo_dir() -> Path:
    """Directory of the bundled synthetic mini-corpus."""
    return Path(str(resources.files("eccf") / "data" / "demo"))


__all__ = [
    "CategoryCatalog", "ColdStartError", "CoocGraph", "DataError", "Interner", "Lexicon",
    "MetricReport", "NeighborModel", "ProfileMatrix", "ProtocolSettings", "QueryMatch",
    "RatingsMatrix", "SVDpp", "TrainingDivergence", "build_ep", "build_graph", "build_uc",
    "cross_validate", "demo_dir", "eccf", "filter_relevant_sessions", "load_lexicon",
    "load_ratings", "make_folds", "match_query", "read_graph", "sccf", "segment_sessions",
    "top_k", "u2ucf", "user_mean", "write_graph",
]  # fmt: skip
