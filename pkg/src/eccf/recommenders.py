"""Rating predictors.

Three user-based KNN variants share one mean-centered prediction rule and
differ only in the vectors used to compare users: raw rating rows (U2UCF),
category counts UC (SCCF) and extended preferences EP (ECCF). SVD++ is the
matrix-factorization baseline, trained by plain SGD.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass
from typing import Protocol

import numpy as np
import scipy.sparse as sps

from eccf.ccg import CoocGraph
from eccf.datamodel import CategoryCatalog, ProfileMatrix, RatingsMatrix
from eccf.errors import TrainingDivergence
from eccf.profiles import build_ep, build_uc

_log = logging.getLogger(__name__)

MIN_RATING, MAX_RATING = 1.0, 5.0
DEFAULT_NEIGHBORS = 50


class Predictor(Protocol):
    def predict(self, u: int, i: int) -> float | None: ...


def _as_dense(v) -> np.ndarray:
    if sps.issparse(v):
        return np.asarray(v.todense(), dtype=np.float64).ravel()
    if isinstance(v, Mapping):
        raise TypeError("cannot compare a mapping with an array")
    return np.asarray(v, dtype=np.float64).ravel()


def cosine(a, b) -> float:
    """Cosine similarity of two vectors (dense, sparse, or dicts); 0 if either is null."""
    if isinstance(a, Mapping) and isinstance(b, Mapping):
        dot = sum(float(w) * float(b[k]) for k, w in a.items() if k in b)
        na = np.sqrt(sum(float(w) ** 2 for w in a.values()))
        nb = np.sqrt(sum(float(w) ** 2 for w in b.values()))
    else:
        a, b = _as_dense(a), _as_dense(b)
        dot = float(a @ b)
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(dot / (na * nb))


def _row_normalize(X: sps.csr_matrix) -> sps.csr_matrix:
    X = sps.csr_matrix(X, dtype=np.float64)
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sps.csr_matrix(sps.diags(scale) @ X)


def _center_rows(R: RatingsMatrix) -> sps.csr_matrix:
    X = sps.csr_matrix(R.csr, dtype=np.float64)
    counts = np.diff(X.indptr)
    X.data = X.data - np.repeat(np.nan_to_num(R.means), counts)
    return X


class NeighborModel:
    """User-based KNN predictor over an arbitrary user feature matrix.

    Args:
        R: training ratings.
        features: users x features matrix the similarities are computed on;
            defaults to the rating rows themselves.
        k: neighborhood size.
        similarity: ``"cosine"`` or ``"pearson"`` (cosine of mean-centered rows).
        name: label used in reports.
    """

    def __init__(
        self,
        R: RatingsMatrix,
        features: sps.spmatrix | ProfileMatrix | None = None,
        k: int = DEFAULT_NEIGHBORS,
        similarity: str = "cosine",
        name: str = "KNN",
    ):
        if k < 1:
            raise ValueError("neighborhood size must be >= 1")
        self.R = R
        self.k = k
        self.name = name
        if isinstance(features, ProfileMatrix):
            features = features.matrix
        if similarity == "cosine":
            X = R.csr if features is None else features
        elif similarity == "pearson":
            if features is not None:
                raise ValueError("pearson similarity is defined on rating rows only")
            X = _center_rows(R)
        else:
            raise ValueError(f"unknown similarity {similarity!r}")
        if X.shape[0] != R.shape[0]:
            raise ValueError("feature matrix and ratings disagree on the number of users")
        self.similarity = similarity
        self._Xn = _row_normalize(X)
        self._XnT = sps.csc_matrix(self._Xn.T)
        self._cache: dict[int, np.ndarray] = {}

    def similarities(self, u: int) -> np.ndarray:
        """Similarity of ``u`` to every user (``u`` itself set to 0)."""
        sims = self._cache.get(u)
        if sims is None:
            sims = np.asarray((self._Xn[u] @ self._XnT).todense()).ravel()
            sims[u] = 0.0
            sims.setflags(write=False)
            self._cache[u] = sims
        return sims

    def neighbors(self, u: int, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Top-k positive-similarity users who rated ``i``: ``(users, sims)``."""
        raters, _ = self.R.item_column(i)
        sims = self.similarities(u)[raters]
        keep = (sims > 0) & (raters != u)
        raters, sims = raters[keep], sims[keep]
        order = np.lexsort((raters, -sims))[: self.k]
        return raters[order], sims[order]

    def predict(self, u: int, i: int) -> float | None:
        """Mean-centered weighted estimate of ``u``'s rating of ``i``, or None."""
        n_users, n_items = self.R.shape
        if not (0 <= u < n_users and 0 <= i < n_items) or self.R.counts[u] == 0:
            return None
        raters, sims = self.neighbors(u, i)
        if raters.size == 0:
            return None
        col_users, col_ratings = self.R.item_column(i)
        dev = col_ratings[np.searchsorted(col_users, raters)] - self.R.means[raters]
        est = self.R.means[u] + float(sims @ dev) / float(np.abs(sims).sum())
        return float(min(MAX_RATING, max(MIN_RATING, est)))

    def __repr__(self) -> str:
        return f"<NeighborModel {self.name} k={self.k} {self.similarity}>"


def u2ucf(R: RatingsMatrix, k: int = DEFAULT_NEIGHBORS, similarity: str = "cosine") -> NeighborModel:
    return NeighborModel(R, None, k, similarity, name="U2UCF")


def sccf(R: RatingsMatrix, cat: CategoryCatalog, k: int = DEFAULT_NEIGHBORS) -> NeighborModel:
    return NeighborModel(R, build_uc(R, cat), k, name="SCCF")


def eccf(
    R: RatingsMatrix,
    cat: CategoryCatalog,
    g: CoocGraph,
    positive: Iterable[int] = (4, 5),
    k: int = DEFAULT_NEIGHBORS,
    top_arcs: int = 1,
) -> NeighborModel:
    positive = sorted(set(positive))
    EP = build_ep(build_uc(R, cat), R, cat, g, positive, top_arcs)
    label = "ECCF{" + ",".join(map(str, positive)) + "}"
    return NeighborModel(R, EP, k, name=label)


def top_k(u: int, candidates: Iterable[int], k: int, model: Predictor) -> list[tuple[int, float]]:
    """Predictable candidates ranked by estimate (ties: lower item id first), cut to ``k``."""
    scored = []
    for i in sorted(set(int(c) for c in candidates)):
        est = model.predict(u, i)
        if est is not None:
            scored.append((i, est))
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored[:k]


class RandomRanker:
    """Scores every known (user, item) pair uniformly at random in [1, 5]."""

    name = "Random"

    def __init__(self, R: RatingsMatrix, seed: int = 0):
        self.R = R
        self.seed = seed

    def predict(self, u: int, i: int) -> float | None:
        n_users, n_items = self.R.shape
        if not (0 <= u < n_users and 0 <= i < n_items):
            return None
        return float(np.random.default_rng([self.seed, u, i]).uniform(MIN_RATING, MAX_RATING))


@dataclass(frozen=True)
class SVDppParams:
    n_factors: int = 20
    n_epochs: int = 20
    lr: float = 0.007
    reg: float = 0.02
    init_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_factors < 1 or self.n_epochs < 1:
            raise ValueError("SVD++ needs n_factors >= 1 and n_epochs >= 1")


class SVDpp:
    """SVD++ with implicit feedback from the set of items each user rated.

    The estimate is ``mu + b_u + b_i + q_i . (p_u + |N(u)|^-1/2 sum_j y_j)``,
    fit by SGD on the regularized squared error.
    """

    name = "SVD++"

    def __init__(self, params: SVDppParams | None = None):
        self.params = params or SVDppParams()

    def fit(self, R: RatingsMatrix) -> SVDpp:
        p = self.params
        rng = np.random.default_rng(p.seed)
        n_users, n_items = R.shape
        users, items, ratings = R.triples()
        ratings = ratings.astype(np.float64)
        self.R = R
        self.mu = float(ratings.mean()) if ratings.size else 3.0
        self.bu = np.zeros(n_users)
        self.bi = np.zeros(n_items)
        self.P = rng.normal(0.0, p.init_std, (n_users, p.n_factors))
        self.Q = rng.normal(0.0, p.init_std, (n_items, p.n_factors))
        self.Y = rng.normal(0.0, p.init_std, (n_items, p.n_factors))
        self._rated = [R.user_row(u)[0] for u in range(n_users)]
        self._known_items = np.diff(R.csc.indptr) > 0

        lr, reg = p.lr, p.reg
        for epoch in range(p.n_epochs):
            for k in rng.permutation(ratings.size):
                u, i, r = users[k], items[k], ratings[k]
                Nu = self._rated[u]
                norm = 1.0 / np.sqrt(len(Nu))
                implicit = norm * self.Y[Nu].sum(axis=0)
                pu, qi = self.P[u].copy(), self.Q[i].copy()
                err = r - (self.mu + self.bu[u] + self.bi[i] + qi @ (pu + implicit))
                self.bu[u] += lr * (err - reg * self.bu[u])
                self.bi[i] += lr * (err - reg * self.bi[i])
                self.P[u] = pu + lr * (err * qi - reg * pu)
                self.Q[i] = qi + lr * (err * (pu + implicit) - reg * qi)
                self.Y[Nu] += lr * (err * norm * qi - reg * self.Y[Nu])
            if not all(np.all(np.isfinite(a)) for a in (self.bu, self.bi, self.P, self.Q, self.Y)):
                raise TrainingDivergence(epoch)
            _log.debug("SVD++ epoch %d done", epoch)
        return self

    def predict(self, u: int, i: int) -> float:
        n_users, n_items = self.R.shape
        known_user = 0 <= u < n_users and self.R.counts[u] > 0
        known_item = 0 <= i < n_items and self._known_items[i]
        if not known_user:
            est = self.mu
        elif not known_item:
            est = self.mu + self.bu[u]
        else:
            Nu = self._rated[u]
            implicit = self.Y[Nu].sum(axis=0) / np.sqrt(len(Nu))
            est = self.mu + self.bu[u] + self.bi[i] + self.Q[i] @ (self.P[u] + implicit)
        return float(min(MAX_RATING, max(MIN_RATING, est)))

    def config(self) -> dict:
        return asdict(self.params)


def train_svdpp(R: RatingsMatrix, params: SVDppParams | None = None) -> SVDpp:
    return SVDpp(params).fit(R)


def predict_svdpp(u: int, i: int, model: SVDpp) -> float:
    return model.predict(u, i)
