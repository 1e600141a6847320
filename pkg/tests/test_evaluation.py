import json
import math
from fractions import Fraction

import numpy as np
import pytest

from eccf.datamodel import CategoryCatalog, Interner, RatingsMatrix
from eccf.evaluation import (
    METRICS,
    MetricReport,
    ProtocolSettings,
    UserOutcome,
    category_similarity,
    cross_validate,
    fold_metrics,
    intra_list_diversity,
    make_folds,
    mrr,
    precision_recall_f1,
    rank_fold,
    reciprocal_rank,
    rmse,
    user_coverage,
)

from oracles import diversity_oracle


def matrix(n_ratings, n_users=10):
    users = Interner([f"u{k}" for k in range(n_users)])
    items = Interner([f"i{k}" for k in range(n_ratings)])
    return RatingsMatrix.from_triples(
        [(f"u{k % n_users}", f"i{k}", 1 + k % 5) for k in range(n_ratings)], users, items
    )


def catalog(item_cats, n_cats):
    items = Interner([f"i{k}" for k in range(len(item_cats))])
    return CategoryCatalog(items, Interner([f"c{k}" for k in range(n_cats)]), dict(enumerate(item_cats)))


# -- folds -----------------------------------------------------------------


def test_folds_partition_evenly():
    plan = make_folds(matrix(100), 10, seed=0)
    assert plan.sizes() == [10] * 10
    assert np.array_equal(np.sort(np.concatenate([np.flatnonzero(plan.test_mask(f)) for f in range(10)])), np.arange(100))


def test_uneven_split_puts_one_extra_in_one_fold():
    sizes = make_folds(matrix(101), 10, seed=3).sizes()
    assert sorted(sizes) == [10] * 9 + [11]


def test_folds_deterministic_and_seed_dependent():
    R = matrix(100)
    assert np.array_equal(make_folds(R, 10, 4).assignment, make_folds(R, 10, 4).assignment)
    assert not np.array_equal(make_folds(R, 10, 4).assignment, make_folds(R, 10, 5).assignment)


def test_more_folds_than_ratings_is_an_error():
    with pytest.raises(ValueError):
        make_folds(matrix(5, 5), 10)


def test_split_train_and_test_disjoint():
    R = matrix(50)
    plan = make_folds(R, 5, 0)
    train, (u, i, r) = plan.split(R, 2)
    assert train.nnz + u.size == R.nnz
    for a, b in zip(u.tolist(), i.tolist()):
        assert train.get(a, b) is None


# -- per-list metrics --------------------------------------------------------


def test_precision_recall_f1_example():
    p, r, f = precision_recall_f1([1, 2, 3, 4], {2, 4, 9})
    assert (p, r) == (0.5, pytest.approx(2 / 3))
    assert f == pytest.approx(2 * 0.5 * (2 / 3) / (0.5 + 2 / 3))


def test_precision_recall_undefined_cases():
    assert precision_recall_f1([], {1}) is None
    assert precision_recall_f1([1], set()) is None
    assert precision_recall_f1([1, 2], {3}) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        precision_recall_f1([1, 2, 3], {1}, k=2)


@pytest.mark.parametrize(
    "pred, truth, expected",
    [([4, 3], [4, 3], 0.0), ([5, 5], [3, 3], 2.0), ([4, 2], [3, 3], 1.0)],
)
def test_rmse_examples(pred, truth, expected):
    assert rmse(pred, truth) == pytest.approx(expected)


def test_rmse_needs_pairs():
    with pytest.raises(ValueError):
        rmse([], [])


def test_reciprocal_rank_examples():
    assert reciprocal_rank([7, 8, 9], {7}) == 1.0
    assert reciprocal_rank([7, 8, 9], {9}) == pytest.approx(1 / 3)
    assert reciprocal_rank([7, 8, 9], {1}) == 0.0
    assert mrr([([7, 8, 9], {7}), ([7, 8, 9], {9})]) == pytest.approx(2 / 3)


def test_diversity_examples():
    cat = catalog([{0}, {0}, {1}, {0, 1}], 2)
    assert intra_list_diversity([0, 1], cat) == 0.0
    assert intra_list_diversity([0], cat) == 0.0
    # disjoint pair: one off-diagonal term of 1 over n(n+1)/2 = 3 terms
    assert intra_list_diversity([0, 2], cat) == pytest.approx(float(Fraction(1, 3)))
    assert category_similarity(cat, 0, 3) == pytest.approx(1 / math.sqrt(2))


def test_diversity_matches_oracle():
    rng = np.random.default_rng(1)
    cats = [set(rng.choice(5, size=rng.integers(1, 4), replace=False).tolist()) for _ in range(20)]
    cat = catalog(cats, 5)
    for _ in range(20):
        lst = rng.choice(20, size=rng.integers(1, 8), replace=False).tolist()
        assert intra_list_diversity(lst, cat) == pytest.approx(diversity_oracle(lst, dict(enumerate(cats))), abs=1e-12)


def test_coverage_examples():
    assert user_coverage([[1], [2, 3]]) == 1.0
    assert user_coverage([[1], []]) == 0.5
    with pytest.raises(ValueError):
        user_coverage([])


# -- fold aggregation -------------------------------------------------------


class Stub:
    def __init__(self, table):
        self.table = table

    def predict(self, u, i):
        return self.table.get((u, i))


def tiny_fold():
    users = Interner(["a", "b"])
    items = Interner([f"i{k}" for k in range(4)])
    train = RatingsMatrix.from_triples([("a", "i3", 4), ("b", "i3", 2)], users, items)
    test = (np.array([0, 0, 1]), np.array([0, 1, 2]), np.array([5, 2, 4]))
    cat = catalog([{0}, {1}, {0}, {1}], 2)
    return train, test, cat


def test_two_item_user_example():
    train, test, cat = tiny_fold()
    model = Stub({(0, 0): 4.0, (0, 1): 3.0})
    outcomes = rank_fold(model, train, test)
    m = fold_metrics(outcomes, cat, 10)
    # user a: 2 recs, 1 relevant hit -> P .5, R 1, RR 1; user b: no recs
    assert m["precision"] == 0.5 and m["recall"] == 1.0 and m["mrr"] == 1.0
    assert m["coverage"] == 0.5
    assert m["rmse"] == pytest.approx(math.sqrt((1 + 1) / 2))
    assert m["f1"] == pytest.approx(2 / 3)


def test_metric_keys_and_undefined_values():
    train, test, cat = tiny_fold()
    m = fold_metrics(rank_fold(Stub({}), train, test), cat, 10, extra=True)
    assert set(m) == set(METRICS) | {"relevant_coverage"}
    assert m["precision"] is None and m["rmse"] is None and m["coverage"] == 0.0


def test_all_candidates_protocol():
    train, test, _ = tiny_fold()
    model = Stub({(0, 2): 5.0, (0, 0): 1.0})
    out = rank_fold(model, train, test, candidates="all")
    assert out[0].ranked == [(2, 5.0), (0, 1.0)]
    with pytest.raises(ValueError):
        rank_fold(model, train, test, candidates="bogus")


@pytest.fixture(scope="module")
def small_report(demo):
    R, cat, _, g = demo
    settings = ProtocolSettings(algorithms=("U2UCF", "SCCF", "ECCF"), positive_variants=((4, 5),), folds=3, k_values=(1, 2, 10))
    return cross_validate(R, cat, g, settings)


def test_recall_monotone_and_coverage_constant_in_k(small_report):
    for alg in small_report.values:
        for fold in range(3):
            r = [small_report.values[alg][k]["recall"][fold] for k in (1, 2, 10)]
            assert r[0] <= r[1] <= r[2]
            c = [small_report.values[alg][k]["coverage"][fold] for k in (1, 2, 10)]
            assert c[0] == c[1] == c[2]


def test_report_shapes(small_report):
    d = json.loads(small_report.to_json())
    assert set(d["results"]) == {"U2UCF", "SCCF", "ECCF{4,5}"}
    entry = d["results"]["SCCF"]["10"]["precision"]
    assert len(entry["per_fold"]) == 3
    assert entry["mean"] == pytest.approx(np.mean(entry["per_fold"]))
    lines = small_report.to_csv().splitlines()
    assert lines[0] == "algorithm,fold,k,metric,value"
    assert len(lines) - 1 == 3 * 3 * 3 * len(METRICS)
    back = MetricReport.from_dict(d)
    assert back.to_json() == small_report.to_json()


def test_cross_validation_deterministic(demo, small_report):
    R, cat, _, g = demo
    settings = ProtocolSettings(algorithms=("U2UCF", "SCCF", "ECCF"), positive_variants=((4, 5),), folds=3, k_values=(1, 2, 10))
    assert cross_validate(R, cat, g, settings).to_json() == small_report.to_json()


def test_svdpp_and_random_in_protocol(demo):
    R, cat, _, g = demo
    from eccf.recommenders import SVDppParams

    settings = ProtocolSettings(algorithms=("SVD++", "Random"), folds=2, k_values=(5,), svdpp=SVDppParams(n_epochs=2))
    rep = cross_validate(R, cat, g, settings)
    assert rep.mean("SVD++", 5, "coverage") == 1.0
    assert rep.mean("Random", 5, "coverage") == 1.0
