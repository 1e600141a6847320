"""Cross-validation driver and top-k metrics.

Averaging conventions: Precision, Recall, MRR and Diversity are averaged per
user (macro); RMSE is pooled over all recommended (user, item) pairs that have
a held-out rating (micro). F1 is the harmonic mean of the fold's P and R.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from eccf.ccg import CoocGraph
from eccf.datamodel import CategoryCatalog, RatingsMatrix
from eccf.profiles import positive_label
from eccf.recommenders import (
    DEFAULT_NEIGHBORS,
    Predictor,
    RandomRanker,
    SVDppParams,
    eccf,
    sccf,
    top_k,
    train_svdpp,
    u2ucf,
)

_log = logging.getLogger(__name__)

METRICS = ("precision", "recall", "f1", "rmse", "mrr", "diversity", "coverage")


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every rating (in :meth:`RatingsMatrix.triples` order) to a fold."""

    n_folds: int
    seed: int
    assignment: np.ndarray

    def test_mask(self, fold: int) -> np.ndarray:
        return self.assignment == fold

    def sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.n_folds).tolist()

    def split(self, R: RatingsMatrix, fold: int) -> tuple[RatingsMatrix, tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Training matrix and test ``(users, items, ratings)`` arrays for ``fold``."""
        mask = self.test_mask(fold)
        users, items, ratings = R.triples()
        return R.subset(~mask), (users[mask], items[mask], ratings[mask])


def make_folds(R: RatingsMatrix, n: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle ratings with ``seed`` and deal them round-robin into ``n`` folds."""
    if n < 2:
        raise ValueError("need at least 2 folds")
    if R.nnz < n:
        raise ValueError(f"cannot split {R.nnz} ratings into {n} folds")
    order = np.random.default_rng(seed).permutation(R.nnz)
    assignment = np.empty(R.nnz, dtype=np.int64)
    assignment[order] = np.arange(R.nnz) % n
    return FoldPlan(n, seed, assignment)


# -- per-list metrics ------------------------------------------------------


def precision_recall_f1(
    recs: Sequence[int], relevant: Iterable[int], k: int | None = None
) -> tuple[float, float, float] | None:
    """P, R and F1 of one list; None when the list or the relevant set is empty.

    Precision divides by the list length, which may be shorter than ``k``.
    """
    relevant = set(relevant)
    if k is not None and len(recs) > k:
        raise ValueError(f"list of {len(recs)} items is longer than k={k}")
    if not recs or not relevant:
        return None
    hits = len(set(recs) & relevant)
    p, r = hits / len(recs), hits / len(relevant)
    return p, r, f1_score(p, r)


def f1_score(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def rmse(predictions: Sequence[float], truths: Sequence[float]) -> float:
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths differ in length")
    if not len(predictions):
        raise ValueError("RMSE needs at least one predicted pair")
    diff = np.asarray(predictions, dtype=np.float64) - np.asarray(truths, dtype=np.float64)
    return float(np.sqrt(np.mean(diff**2)))


def reciprocal_rank(recs: Sequence[int], relevant: Iterable[int]) -> float:
    relevant = set(relevant)
    for rank, item in enumerate(recs, start=1):
        if item in relevant:
            return 1.0 / rank
    return 0.0


def mrr(lists: Iterable[tuple[Sequence[int], Iterable[int]]]) -> float:
    rrs = [reciprocal_rank(recs, rel) for recs, rel in lists]
    if not rrs:
        raise ValueError("MRR needs at least one list")
    return float(np.mean(rrs))


def category_similarity(cat: CategoryCatalog, i: int, j: int) -> float:
    """Cosine of the binary category vectors of two items."""
    a, b = cat.categories_of(i), cat.categories_of(j)
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


def intra_list_diversity(recs: Sequence[int], cat: CategoryCatalog) -> float:
    """Mean of ``1 - sim(i, j)`` over pairs ``i <= j`` (diagonal included) of the list."""
    n = len(recs)
    if n == 0:
        raise ValueError("diversity of an empty list is undefined")
    total = 0.0
    for a in range(n):
        for b in range(a, n):
            total += 1.0 - (1.0 if a == b else category_similarity(cat, recs[a], recs[b]))
    return total / (n * (n + 1) / 2)


def user_coverage(outcomes: Iterable[Sequence[int]]) -> float:
    """Share of users whose recommendation list is nonempty."""
    lists = list(outcomes)
    if not lists:
        raise ValueError("coverage over zero users is undefined")
    return sum(1 for recs in lists if len(recs) > 0) / len(lists)


# -- fold evaluation -------------------------------------------------------


@dataclass
class UserOutcome:
    user: int
    ranked: list[tuple[int, float]]
    relevant: frozenset[int]
    truths: dict[int, int]

    def recs(self, k: int) -> list[int]:
        return [i for i, _ in self.ranked[:k]]


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def fold_metrics(outcomes: Sequence[UserOutcome], cat: CategoryCatalog, k: int, extra: bool = False) -> dict:
    """Aggregate the metric suite for lists cut at ``k``."""
    ps, rs, rrs, divs = [], [], [], []
    preds, truths = [], []
    covered = relevant_covered = 0
    for o in outcomes:
        recs = o.recs(k)
        if recs:
            covered += 1
            divs.append(intra_list_diversity(recs, cat))
            if o.relevant & set(recs):
                relevant_covered += 1
        for i, est in o.ranked[:k]:
            if i in o.truths:
                preds.append(est)
                truths.append(o.truths[i])
        prf = precision_recall_f1(recs, o.relevant, k)
        if prf is not None:
            ps.append(prf[0])
            rs.append(prf[1])
            rrs.append(reciprocal_rank(recs, o.relevant))
    p, r = _mean(ps), _mean(rs)
    out = {
        "precision": p,
        "recall": r,
        "f1": None if p is None else f1_score(p, r),
        "rmse": rmse(preds, truths) if preds else None,
        "mrr": _mean(rrs),
        "diversity": _mean(divs),
        "coverage": covered / len(outcomes) if outcomes else None,
    }
    if extra:
        out["relevant_coverage"] = relevant_covered / len(outcomes) if outcomes else None
    return out


def rank_fold(
    model: Predictor,
    train: RatingsMatrix,
    test: tuple[np.ndarray, np.ndarray, np.ndarray],
    relevance: int = 4,
    candidates: str = "test",
    depth: int | None = None,
) -> list[UserOutcome]:
    """Rank candidates for every user holding test ratings.

    ``candidates="test"`` ranks the user's held-out items; ``"all"`` ranks every
    item the user did not rate in training.
    """
    users, items, ratings = test
    per_user: dict[int, dict[int, int]] = {}
    for u, i, r in zip(users.tolist(), items.tolist(), ratings.tolist()):
        per_user.setdefault(u, {})[i] = r
    n_items = train.shape[1]
    outcomes = []
    for u in sorted(per_user):
        truths = per_user[u]
        if candidates == "test":
            cands = truths.keys()
        elif candidates == "all":
            cands = np.setdiff1d(np.arange(n_items), train.user_row(u)[0]).tolist()
        else:
            raise ValueError(f"unknown candidate protocol {candidates!r}")
        ranked = top_k(u, cands, depth if depth is not None else len(cands), model)
        relevant = frozenset(i for i, r in truths.items() if r >= relevance)
        outcomes.append(UserOutcome(u, ranked, relevant, truths))
    return outcomes


def evaluate_fold(
    model: Predictor,
    train: RatingsMatrix,
    test: tuple[np.ndarray, np.ndarray, np.ndarray],
    k: int,
    cat: CategoryCatalog,
    relevance: int = 4,
    candidates: str = "test",
) -> tuple[list[UserOutcome], dict]:
    outcomes = rank_fold(model, train, test, relevance, candidates, depth=k)
    return outcomes, fold_metrics(outcomes, cat, k)


# -- experiment protocol ---------------------------------------------------


@dataclass(frozen=True)
class ProtocolSettings:
    algorithms: tuple[str, ...] = ("U2UCF", "SCCF", "ECCF", "SVD++")
    positive_variants: tuple[tuple[int, ...], ...] = ((3, 4, 5), (4, 5), (5,))
    k_values: tuple[int, ...] = (10, 20)
    neighbors: int = DEFAULT_NEIGHBORS
    folds: int = 10
    seed: int = 0
    relevance: int = 4
    candidates: str = "test"
    top_arcs: int = 1
    similarity: str = "cosine"
    relevant_coverage: bool = False
    svdpp: SVDppParams = field(default_factory=SVDppParams)

    def algorithm_labels(self) -> list[str]:
        """Algorithms with ``ECCF`` expanded once per PositiveRatings variant."""
        out = []
        for name in self.algorithms:
            if name == "ECCF":
                out.extend("ECCF" + positive_label(p) for p in self.positive_variants)
            else:
                out.append(name)
        return out


def parse_positive_label(label: str) -> tuple[int, ...]:
    body = label[label.index("{") + 1 : label.rindex("}")]
    return tuple(int(x) for x in body.split(",") if x.strip())


def build_model(
    label: str, train: RatingsMatrix, cat: CategoryCatalog, g: CoocGraph, settings: ProtocolSettings
) -> Predictor:
    if label == "U2UCF":
        return u2ucf(train, settings.neighbors, settings.similarity)
    if label == "SCCF":
        return sccf(train, cat, settings.neighbors)
    if label.startswith("ECCF{"):
        return eccf(train, cat, g, parse_positive_label(label), settings.neighbors, settings.top_arcs)
    if label == "SVD++":
        return train_svdpp(train, settings.svdpp)
    if label == "Random":
        return RandomRanker(train, settings.seed)
    raise ValueError(f"unknown algorithm {label!r}")


@dataclass
class MetricReport:
    """Per-algorithm, per-k, per-metric values for every fold, with their means."""

    header: dict
    values: dict[str, dict[int, dict[str, list[float | None]]]]

    def mean(self, algorithm: str, k: int, metric: str) -> float | None:
        vals = [v for v in self.values[algorithm][k][metric] if v is not None]
        return float(np.mean(vals)) if vals else None

    def to_dict(self) -> dict:
        results = {
            alg: {
                str(k): {m: {"per_fold": vals, "mean": self.mean(alg, k, m)} for m, vals in per_k.items()}
                for k, per_k in by_k.items()
            }
            for alg, by_k in self.values.items()
        }
        return {"protocol": self.header, "results": results}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def rows(self) -> list[tuple[str, int, int, str, float | None]]:
        out = []
        for alg, by_k in self.values.items():
            n_folds = len(next(iter(next(iter(by_k.values())).values())))
            for fold in range(n_folds):
                for k, per_k in by_k.items():
                    for metric, vals in per_k.items():
                        out.append((alg, fold, k, metric, vals[fold]))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("algorithm", "fold", "k", "metric", "value"))
        for alg, fold, k, metric, value in self.rows():
            w.writerow((alg, fold, k, metric, "" if value is None else repr(value)))
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: Mapping) -> MetricReport:
        values = {
            alg: {int(k): {m: list(v["per_fold"]) for m, v in per_k.items()} for k, per_k in by_k.items()}
            for alg, by_k in data["results"].items()
        }
        return cls(dict(data["protocol"]), values)


def protocol_header(settings: ProtocolSettings) -> dict:
    d = asdict(settings)
    d["algorithms"] = settings.algorithm_labels()
    d["positive_variants"] = [list(p) for p in settings.positive_variants]
    d["k_values"] = list(settings.k_values)
    d["averaging"] = {
        "precision": "macro",
        "recall": "macro",
        "mrr": "macro",
        "diversity": "macro",
        "f1": "harmonic mean of fold precision and recall",
        "rmse": "micro over recommended pairs with held-out ratings",
        "coverage": "share of test users with >= 1 recommendation",
    }
    return d


def cross_validate(
    R: RatingsMatrix, cat: CategoryCatalog, g: CoocGraph, settings: ProtocolSettings | None = None
) -> MetricReport:
    """Run every algorithm on every fold and collect the metric suite."""
    settings = settings or ProtocolSettings()
    plan = make_folds(R, settings.folds, settings.seed)
    labels = settings.algorithm_labels()
    depth = max(settings.k_values)
    values: dict = {
        alg: {k: {} for k in settings.k_values} for alg in labels
    }
    for fold in range(plan.n_folds):
        train, test = plan.split(R, fold)
        for alg in labels:
            model = build_model(alg, train, cat, g, settings)
            outcomes = rank_fold(model, train, test, settings.relevance, settings.candidates, depth)
            for k in settings.k_values:
                metrics = fold_metrics(outcomes, cat, k, settings.relevant_coverage)
                for m, v in metrics.items():
                    values[alg][k].setdefault(m, []).append(v)
            _log.info("fold %d/%d: %s done", fold + 1, plan.n_folds, alg)
    return MetricReport(protocol_header(settings), values)
