from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eccf.ccg import (
    CoocGraph,
    accumulate,
    build_graph,
    query_evidence,
    read_graph,
    session_evidence,
    write_graph,
    write_weight_distribution,
)
from eccf.concepts import Lexicon, QueryMatch
from eccf.datamodel import Interner
from eccf.ingest import Session

A, B, C, D, E = range(5)
HALF = Fraction(1, 2)


def qm(unamb=(), *groups):
    return QueryMatch(frozenset(unamb), tuple((frozenset(g), Fraction(1, len(g))) for g in groups))


def test_unambiguous_pair_in_query():
    assert query_evidence(qm({A, B}), {A, B}) == {(A, B): 1}


def test_ambiguous_term_splits_evidence():
    ev = query_evidence(qm((), {A, B}), {C})
    assert ev == {(A, C): HALF, (B, C): HALF}


def test_single_category_gives_no_pair():
    assert query_evidence(qm({A}), {A}) == {}


def test_session_categories_pair_with_query_categories():
    ev = query_evidence(qm({A}), {A, B, C})
    assert ev == {(A, B): 1, (A, C): 1}


def test_cross_term_ambiguity_uses_product():
    ev = query_evidence(qm((), {A, B}, {C, D, E}), set())
    assert ev[(A, C)] == Fraction(1, 6)
    assert (A, B) not in ev and (C, D) not in ev


def test_repeated_query_is_not_summed():
    q = qm({A, B})
    assert session_evidence([q] * 5) == {(A, B): 1}


def test_session_takes_max():
    ev = session_evidence([qm((), {A, B}), qm({A, C})])
    # C is unambiguous in the session, so the ambiguous reading A-C gets 1/2
    # in the first query and 1 in the second
    assert ev[(A, C)] == 1
    assert ev[(B, C)] == HALF


def test_zero_evidence_session():
    assert session_evidence([qm(), qm({A})]) == {}


def test_sum_over_sessions():
    totals = accumulate([[qm({A, B})], [qm((), {A, D}), qm({B})]])
    assert totals[(A, B)] == Fraction(3, 2)


def graph(weights, n=5):
    return CoocGraph(Interner([f"c{k}" for k in range(n)]), weights)


def test_build_graph_single_pair():
    lex = Lexicon.from_pairs([("pizza", "Pizza"), ("cafe", "Cafes")])
    g = build_graph([Session("1", ("pizza cafe",), (None,))], lex)
    assert dict(g.edges) == {(0, 1): 1.0}


def test_empty_graph():
    g = build_graph([], Lexicon.from_pairs([("pizza", "Pizza")]))
    assert len(g) == 0
    assert g.heaviest_neighbors(0) == frozenset()


def test_heaviest_neighbors_argmax():
    assert graph({(C, A): 5, (C, B): 3}).heaviest_neighbors(C) == {A}


def test_heaviest_neighbors_ties():
    assert graph({(C, A): 5, (C, B): 5}).heaviest_neighbors(C) == {A, B}


def test_heaviest_neighbors_isolated():
    assert graph({(A, B): 1}).heaviest_neighbors(C) == frozenset()


def test_top_arcs_widens():
    g = graph({(C, A): 5, (C, B): 3, (C, D): 3, (C, E): 1})
    assert g.heaviest_neighbors(C, 2) == {A, B, D}
    assert g.heaviest_neighbors(C, 10) == {A, B, D, E}


def test_graph_invariants():
    g = graph({(B, A): 2.5, (C, D): 0})
    assert dict(g.edges) == {(A, B): 2.5}
    assert g.weight(B, A) == g.weight(A, B) == 2.5
    with pytest.raises(ValueError):
        graph({(A, A): 1})
    with pytest.raises(ValueError):
        graph({(A, B): -1})


def test_adjacency_sorted_by_weight_then_name():
    g = graph({(A, C): 2, (A, B): 2, (A, D): 7})
    assert [n for n, _ in g.neighbors(A)] == [D, B, C]


def test_csv_round_trip_is_bit_exact(tmp_path):
    g = graph({(A, B): 1 / 3 + 7, (B, C): 0.1 + 0.2, (C, D): 272224.0})
    write_graph(g, tmp_path / "g.csv")
    g2 = read_graph(tmp_path / "g.csv", g.categories)
    assert dict(g2.edges) == dict(g.edges)
    g3 = read_graph(tmp_path / "g.csv")
    assert {(g3.categories.name(a), g3.categories.name(b)): w for (a, b), w in g3.edges.items()} == {
        (g.categories.name(a), g.categories.name(b)): w for (a, b), w in g.edges.items()
    }


def test_weight_distribution_export(tmp_path):
    g = graph({(A, B): 1, (B, C): 4, (C, D): 2})
    write_weight_distribution(g, tmp_path / "w.csv")
    assert (tmp_path / "w.csv").read_text().splitlines() == ["rank,weight", "1,4.0", "2,2.0", "3,1.0"]


# -- properties -------------------------------------------------------------

cats = st.integers(0, 6)
groups = st.frozensets(cats, min_size=2, max_size=4)
matches = st.builds(
    lambda u, gs: QueryMatch(frozenset(u), tuple((g, Fraction(1, len(g))) for g in dict.fromkeys(gs))),
    st.frozensets(cats, max_size=3),
    st.lists(groups, max_size=2),
)
sessions = st.lists(matches, min_size=1, max_size=5)


@given(st.lists(sessions, max_size=8), st.randoms(use_true_random=False))
@settings(max_examples=50)
def test_session_order_does_not_matter(sess, rnd):
    shuffled = list(sess)
    rnd.shuffle(shuffled)
    assert accumulate(sess) == accumulate(shuffled)


@given(sessions, st.data())
def test_duplicating_a_query_changes_nothing(sess, data):
    k = data.draw(st.integers(0, len(sess) - 1))
    assert session_evidence(sess[: k + 1] + [sess[k]] + sess[k + 1 :]) == session_evidence(sess)


@given(sessions)
def test_session_evidence_in_unit_interval(sess):
    assert all(0 < v <= 1 for v in session_evidence(sess).values())


@given(sessions, st.integers(1, 4))
def test_splitting_a_session_never_lowers_weights(sess, cut):
    cut = min(cut, len(sess))
    whole = accumulate([sess])
    split = accumulate([sess[:cut], sess[cut:]])
    # pairs whose categories co-occur inside either half keep at least their weight
    for pair, w in whole.items():
        halves = [session_evidence(part).get(pair, 0) for part in (sess[:cut], sess[cut:]) if part]
        if max(halves) == w:
            assert split.get(pair, 0) >= w
