"""Latent factor model: SGD matrix factorization and top-N recommendation.

Training minimizes  sum_(u,i) (r_ui - p_u.q_i)^2 + reg * (sum_u |p_u|^2 +
sum_i |q_i|^2)  by per-sample stochastic gradient descent. Each visited
sample applies the simultaneous update

    p_u <- p_u + lr * (e * q_i - reg * p_u)
    q_i <- q_i + lr * (e * p_u - reg * q_i)      with e = r_ui - p_u.q_i,

where both right-hand sides use the pre-update vectors. Visit order is
reshuffled every epoch from the seeded PRNG, so training is deterministic
and sequential by contract.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from numba import njit

from . import seeding
from .dataset import InteractionTable


class DivergenceError(RuntimeError):
    """Training produced a non-finite factor entry."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one SGD matrix-factorization run.

    ``init_scale=None`` means the default 1/sqrt(k), which keeps initial
    predictions O(1) regardless of the latent dimension.
    """

    k: int = 50
    learning_rate: float = 0.01
    regularization: float = 0.01
    epochs: int = 30
    seed: int = 0
    init_scale: float | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.regularization < 0:
            raise ValueError(
                f"regularization must be >= 0, got {self.regularization}"
            )
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")

    @property
    def resolved_init_scale(self) -> float:
        return 1.0 / math.sqrt(self.k) if self.init_scale is None else self.init_scale


@dataclass(frozen=True, eq=False)
class FactorModel:
    """User and item latent vectors of a common dimension ``k``.

    Row ``j`` of ``user_mat`` is the vector of ``user_ids[j]`` (training
    produces catalogs in sorted id order). The matrices are read-only.
    """

    k: int
    user_ids: tuple[int, ...]
    item_ids: tuple[int, ...]
    user_mat: np.ndarray
    item_mat: np.ndarray
    _user_index: Mapping[int, int] = field(repr=False)
    _item_index: Mapping[int, int] = field(repr=False)

    @classmethod
    def from_arrays(
        cls,
        user_ids: Iterable[int],
        item_ids: Iterable[int],
        user_mat: np.ndarray,
        item_mat: np.ndarray,
    ) -> "FactorModel":
        user_ids = tuple(user_ids)
        item_ids = tuple(item_ids)
        user_mat = np.ascontiguousarray(user_mat, dtype=np.float64)
        item_mat = np.ascontiguousarray(item_mat, dtype=np.float64)
        if user_mat.shape[0] != len(user_ids) or item_mat.shape[0] != len(item_ids):
            raise ValueError("factor matrix rows do not match id catalogs")
        if user_mat.shape[1] != item_mat.shape[1]:
            raise ValueError("user and item factors disagree on k")
        if not (np.isfinite(user_mat).all() and np.isfinite(item_mat).all()):
            raise ValueError("factor matrices contain non-finite entries")
        user_mat.flags.writeable = False
        item_mat.flags.writeable = False
        return cls(
            k=user_mat.shape[1],
            user_ids=user_ids,
            item_ids=item_ids,
            user_mat=user_mat,
            item_mat=item_mat,
            _user_index={u: j for j, u in enumerate(user_ids)},
            _item_index={i: j for j, i in enumerate(item_ids)},
        )

    def user_vector(self, user_id: int) -> np.ndarray:
        try:
            return self.user_mat[self._user_index[user_id]]
        except KeyError:
            raise KeyError(f"user {user_id} not in model") from None

    def item_vector(self, item_id: int) -> np.ndarray:
        try:
            return self.item_mat[self._item_index[item_id]]
        except KeyError:
            raise KeyError(f"item {item_id} not in model") from None

    @property
    def user_factors(self) -> dict[int, np.ndarray]:
        return {u: self.user_mat[j] for u, j in self._user_index.items()}

    @property
    def item_factors(self) -> dict[int, np.ndarray]:
        return {i: self.item_mat[j] for i, j in self._item_index.items()}


@njit(cache=True)
def _sgd_epoch(P, Q, u_idx, i_idx, ratings, order, lr, reg):  # pragma: no cover
    nf = P.shape[1]
    for n in range(order.shape[0]):
        s = order[n]
        u = u_idx[s]
        i = i_idx[s]
        e = ratings[s]
        for f in range(nf):
            e -= P[u, f] * Q[i, f]
        for f in range(nf):
            pf = P[u, f]
            qf = Q[i, f]
            P[u, f] = pf + lr * (e * qf - reg * pf)
            Q[i, f] = qf + lr * (e * pf - reg * qf)


def initial_factors(
    n_users: int, n_items: int, config: TrainConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise Uniform(0, init_scale) init, users drawn before items.

    Drawn from a sub-seed of ``config.seed`` distinct from the epoch
    shuffle stream, so overriding the init never changes visit orders.
    """
    rng = seeding.generator(seeding.derive_seed(config.seed, "mf-init"))
    scale = config.resolved_init_scale
    P = rng.uniform(0.0, scale, size=(n_users, config.k))
    Q = rng.uniform(0.0, scale, size=(n_items, config.k))
    return P, Q


def train_mf(
    interactions: InteractionTable,
    config: TrainConfig,
    initial: tuple[Mapping[int, Iterable[float]], Mapping[int, Iterable[float]]]
    | None = None,
) -> FactorModel:
    """Fit latent factors to the given interactions.

    The returned model covers exactly the users of ``interactions`` and
    the items they rated. ``initial`` optionally replaces the random
    initialization with explicit per-user / per-item vectors (used for
    warm starts and by the arithmetic goldens in the tests).

    Raises ``ValueError`` on an empty table and ``DivergenceError`` (naming
    the epoch) if any factor entry becomes non-finite.
    """
    if interactions.n_records == 0:
        raise ValueError("cannot train on an empty interaction table")
    users = interactions.users
    items = interactions.items
    user_index = {u: j for j, u in enumerate(users)}
    item_index = {i: j for j, i in enumerate(items)}

    n = interactions.n_records
    u_idx = np.empty(n, dtype=np.int64)
    i_idx = np.empty(n, dtype=np.int64)
    ratings = np.empty(n, dtype=np.float64)
    for s, rec in enumerate(interactions.records):
        u_idx[s] = user_index[rec.user_id]
        i_idx[s] = item_index[rec.item_id]
        ratings[s] = rec.rating

    if initial is None:
        P, Q = initial_factors(len(users), len(items), config)
    else:
        user_init, item_init = initial
        P = np.array([np.asarray(user_init[u], dtype=np.float64) for u in users])
        Q = np.array([np.asarray(item_init[i], dtype=np.float64) for i in items])
        if P.shape != (len(users), config.k) or Q.shape != (len(items), config.k):
            raise ValueError("initial factors do not match catalog and k")

    order_rng = seeding.generator(seeding.derive_seed(config.seed, "mf-epoch-order"))
    for epoch in range(config.epochs):
        order = order_rng.permutation(n)
        _sgd_epoch(
            P, Q, u_idx, i_idx, ratings, order,
            config.learning_rate, config.regularization,
        )
        if not (np.isfinite(P).all() and np.isfinite(Q).all()):
            raise DivergenceError(
                f"non-finite factor entry after epoch {epoch} "
                f"(lr={config.learning_rate}, k={config.k})"
            )
    return FactorModel.from_arrays(users, items, P, Q)


def regularized_objective(
    P: np.ndarray,
    Q: np.ndarray,
    u_idx: np.ndarray,
    i_idx: np.ndarray,
    ratings: np.ndarray,
    regularization: float,
) -> float:
    """The training objective on explicit arrays (used by the tests)."""
    err = ratings - np.einsum("sk,sk->s", P[u_idx], Q[i_idx])
    return float(
        np.dot(err, err)
        + regularization * (np.sum(P * P) + np.sum(Q * Q))
    )


def objective_of(
    model: FactorModel, interactions: InteractionTable, regularization: float
) -> float:
    """Regularized squared-error objective of a model on a table."""
    u_idx = np.array([model._user_index[r.user_id] for r in interactions.records])
    i_idx = np.array([model._item_index[r.item_id] for r in interactions.records])
    ratings = np.array([r.rating for r in interactions.records])
    return regularized_objective(
        model.user_mat, model.item_mat, u_idx, i_idx, ratings, regularization
    )


def predict(model: FactorModel, user_id: int, item_id: int) -> float:
    """Predicted score p_u.q_i; unknown ids raise ``KeyError``."""
    return float(np.dot(model.user_vector(user_id), model.item_vector(item_id)))


def recommend_top_n(
    model: FactorModel,
    user_id: int,
    interacted_items: Iterable[int],
    n: int,
) -> list[int]:
    """Top-``n`` unconsumed catalog items by predicted score.

    Ties break by ascending item id; the result never contains an item
    from ``interacted_items``.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    p = model.user_vector(user_id)
    if n == 0:
        return []
    scores = model.item_mat @ p
    interacted = set(interacted_items)
    # primary key: score descending; secondary: item id ascending
    order = np.lexsort((np.asarray(model.item_ids), -scores))
    out: list[int] = []
    for j in order:
        item = model.item_ids[j]
        if item in interacted:
            continue
        out.append(item)
        if len(out) == n:
            break
    return out


def popular_top_n(
    interactions: InteractionTable, excluded: Iterable[int], n: int
) -> list[int]:
    """Most-interacted items of a training table, minus ``excluded``.

    The cold-start list served to users the recommender was not trained
    on. Ties break by ascending item id.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    skip = set(excluded)
    ranked = sorted(interactions.items, key=lambda i: (-interactions.item_counts[i], i))
    return [i for i in ranked if i not in skip][:n]


def dump_model(model: FactorModel, path: str | Path) -> None:
    """Debug dump: JSON ``{k, users: {id: [floats]}, items: {id: [floats]}}``."""
    payload = {
        "k": model.k,
        "users": {str(u): [float(x) for x in model.user_vector(u)] for u in model.user_ids},
        "items": {str(i): [float(x) for x in model.item_vector(i)] for i in model.item_ids},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
