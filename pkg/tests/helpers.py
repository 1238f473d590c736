"""Shared oracles and fixture builders for the test suite.

Everything here is deliberately independent of the library code paths it
checks: AUC by exhaustive pair counting, gradients by central finite
differences, top-N by a brute-force sort.
"""

from __future__ import annotations

import numpy as np

from recmia.dataset import InteractionTable, RatingRecord
from recmia.mf import TrainConfig
from recmia.mlp import AttackTrainConfig
from recmia.pipeline import ExperimentConfig


def brute_force_auc(member_scores, nonmember_scores) -> float:
    """O(P*N) pair count: wins + half-ties over all pairs."""
    wins = 0.0
    for m in member_scores:
        for n in nonmember_scores:
            if m > n:
                wins += 1.0
            elif m == n:
                wins += 0.5
    return wins / (len(member_scores) * len(nonmember_scores))


def central_difference(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of scalar f at x."""
    grad = np.empty_like(x, dtype=np.float64)
    for j in range(x.size):
        step = h * max(1.0, abs(x.flat[j]))
        xp = x.copy()
        xm = x.copy()
        xp.flat[j] += step
        xm.flat[j] -= step
        grad.flat[j] = (f(xp) - f(xm)) / (2.0 * step)
    return grad


def brute_force_top_n(item_ids, scores, interacted, n):
    """Reference top-N: full sort by (-score, item_id), then filter."""
    ranked = sorted(zip(item_ids, scores), key=lambda t: (-t[1], t[0]))
    return [i for i, _ in ranked if i not in interacted][:n]


def mf_update_gradient_max_rel_err(n_points: int = 10, seed: int = 7) -> float:
    """Worst relative error between the implemented SGD step and a
    finite-difference gradient of the pointwise loss, over random points.

    One training step moves (p, q) by lr * (e*q - reg*p, e*p - reg*q),
    which is -lr/2 times the gradient of (r - p.q)^2 + reg*(|p|^2+|q|^2).
    """
    from recmia.mf import TrainConfig, train_mf

    rng = np.random.default_rng(seed)
    k, reg, lr = 5, 0.3, 0.5
    worst = 0.0
    for _ in range(n_points):
        p0 = rng.normal(0.0, 1.0, k)
        q0 = rng.normal(0.0, 1.0, k)
        r = float(rng.uniform(0.5, 5.0))
        table = InteractionTable.from_records([RatingRecord(1, 2, r, 0)])
        cfg = TrainConfig(k=k, learning_rate=lr, regularization=reg, epochs=1, seed=0)
        model = train_mf(table, cfg, initial=({1: p0}, {2: q0}))
        step = np.concatenate(
            [(model.user_vector(1) - p0) / lr, (model.item_vector(2) - q0) / lr]
        )

        def loss(theta):
            p, q = theta[:k], theta[k:]
            err = r - p @ q
            return err * err + reg * (p @ p + q @ q)

        grad = central_difference(loss, np.concatenate([p0, q0]))
        analytic = -2.0 * step
        worst = max(worst, np.linalg.norm(grad - analytic) / np.linalg.norm(grad))
    return worst


def mlp_backprop_max_rel_err(n_points: int = 10, seed: int = 12) -> float:
    """Worst relative error between backprop and central differences at
    ``n_points`` random parameter coordinates of a random network."""
    from recmia import mlp as mlp_mod

    rng = np.random.default_rng(seed)
    k, h1, h2, n = 3, 4, 3, 6
    X = rng.normal(0, 1, (n, k))
    y = (rng.uniform(size=n) > 0.5).astype(float)
    params = [
        rng.normal(0, 0.8, (k, h1)), rng.normal(0, 0.3, h1),
        rng.normal(0, 0.8, (h1, h2)), rng.normal(0, 0.3, h2),
        rng.normal(0, 0.8, (h2, 1)), rng.normal(0, 0.3, 1),
    ]
    grads = mlp_mod._batch_gradients(params, X, y)
    flat = np.concatenate([p.ravel() for p in params])
    flat_grads = np.concatenate([g.ravel() for g in grads])

    def loss_at(theta):
        rebuilt, pos = [], 0
        for p in params:
            rebuilt.append(theta[pos : pos + p.size].reshape(p.shape))
            pos += p.size
        return mlp_mod._bce_from_logits(mlp_mod._forward_logits(rebuilt, X), y)

    worst = 0.0
    for j in rng.choice(flat.size, size=n_points, replace=False):
        h = 1e-6 * max(1.0, abs(flat[j]))
        up, down = flat.copy(), flat.copy()
        up[j] += h
        down[j] -= h
        numeric = (loss_at(up) - loss_at(down)) / (2 * h)
        denom = max(abs(numeric), abs(flat_grads[j]), 1e-12)
        worst = max(worst, abs(numeric - flat_grads[j]) / denom)
    return worst


def run_recommend_fuzz(n_trials: int = 100, seed: int = 11) -> int:
    """Fuzz recommend_top_n against the brute-force oracle.

    Asserts the outputs match exactly and never contain an interacted
    item; returns the number of trials run.
    """
    from recmia.mf import FactorModel, predict, recommend_top_n

    rng = np.random.default_rng(seed)
    for _ in range(n_trials):
        n_items = int(rng.integers(1, 51))
        k = int(rng.integers(1, 5))
        item_ids = sorted(rng.choice(1000, size=n_items, replace=False).tolist())
        model = FactorModel.from_arrays(
            [1], item_ids, rng.normal(0, 1, (1, k)), rng.normal(0, 1, (n_items, k))
        )
        interacted = {
            int(i)
            for i in rng.choice(item_ids, size=int(rng.integers(0, n_items + 1)), replace=False)
        }
        n = int(rng.integers(0, n_items + 2))
        got = recommend_top_n(model, 1, interacted, n)
        scores = [predict(model, 1, i) for i in item_ids]
        assert got == brute_force_top_n(item_ids, scores, interacted, n)
        assert not set(got) & interacted
    return n_trials


def separable_records(
    n_users: int = 40,
    n_popular: int = 10,
    taste_size: int = 20,
    rated_per_user: int = 10,
) -> list[RatingRecord]:
    """Ratings whose member/non-member recommendation centers separate.

    Every user rates all ``n_popular`` popular items, so the popularity
    list any non-member receives is exactly those items, while members
    (who already consumed them) can only be recommended taste items.
    Taste items live in two cluster ranges; users alternate cluster by
    id parity and rate a rotating window of their cluster, so shadow
    data covers every item.
    """
    records: list[RatingRecord] = []
    ts = 0
    for u in range(1, n_users + 1):
        base = 101 if u % 2 == 1 else 201
        for p in range(1, n_popular + 1):
            ts += 1
            records.append(RatingRecord(u, p, 5.0, ts))
        for j in range(rated_per_user):
            item = base + ((u // 2) + j) % taste_size
            ts += 1
            records.append(RatingRecord(u, item, 4.0 + 0.5 * ((u + j) % 3), ts))
    return records


def separable_table() -> InteractionTable:
    return InteractionTable.from_records(separable_records())


def separable_config(csv_path, seed: int, output_dir) -> ExperimentConfig:
    """Experiment config sized for the 40-user separable fixture."""
    return ExperimentConfig(
        data_path=str(csv_path),
        seed=seed,
        recommender=TrainConfig(k=8, epochs=30),  # embedding mirrors this
        rec_list_length=10,
        attack=AttackTrainConfig(epochs=200),
        output_dir=str(output_dir),
    )
