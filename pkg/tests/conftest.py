import pytest

from eccf import demo_dir, load_ratings
from eccf.ccg import build_graph
from eccf.concepts import load_lexicon
from eccf.ingest import filter_relevant_sessions, segment_sessions

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def demo_paths():
    d = demo_dir()
    return {
        "ratings": d / "ratings.csv",
        "items": d / "items.csv",
        "log": d / "query_log.tsv",
        "lexicon": d / "lexicon.csv",
        "config": d / "config.yaml",
    }


@pytest.fixture(scope="session")
def demo(demo_paths):
    R, cat = load_ratings(demo_paths["ratings"], demo_paths["items"])
    lex = load_lexicon(demo_paths["lexicon"], cat.categories)
    g = build_graph(filter_relevant_sessions(segment_sessions(demo_paths["log"]), lex), lex)
    return R, cat, lex, g


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
