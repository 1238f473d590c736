import numpy as np
import pytest

from recmia.dataset import InteractionTable, RatingRecord
from recmia.mf import (
    DivergenceError,
    FactorModel,
    TrainConfig,
    dump_model,
    initial_factors,
    objective_of,
    popular_top_n,
    predict,
    recommend_top_n,
    regularized_objective,
    train_mf,
)
from helpers import mf_update_gradient_max_rel_err, run_recommend_fuzz


def single_rating_table(rating=1.0):
    return InteractionTable.from_records([RatingRecord(1, 5, rating, 0)])


def random_table(rng, n_users=6, n_items=9, n_ratings=24):
    pairs = set()
    while len(pairs) < n_ratings:
        pairs.add((int(rng.integers(1, n_users + 1)), int(rng.integers(1, n_items + 1))))
    return InteractionTable.from_records(
        RatingRecord(u, i, float(rng.integers(1, 11)) / 2.0, t)
        for t, (u, i) in enumerate(sorted(pairs))
    )


class TestTrainConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(k=0), dict(learning_rate=0.0), dict(regularization=-0.1), dict(epochs=0)],
    )
    def test_invariants(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_default_init_scale_is_inverse_sqrt_k(self):
        assert TrainConfig(k=25).resolved_init_scale == pytest.approx(0.2)
        assert TrainConfig(k=4, init_scale=0.7).resolved_init_scale == 0.7


class TestTrainMf:
    def test_zero_init_is_a_fixed_point(self):
        # e*q and reg*p both vanish at zero, so nothing ever moves:
        # this is why the default init must be nonzero
        cfg = TrainConfig(k=1, learning_rate=0.5, regularization=0.0, epochs=1, seed=0, init_scale=0.0)
        model = train_mf(single_rating_table(), cfg)
        assert model.user_vector(1)[0] == 0.0
        assert model.item_vector(5)[0] == 0.0

    def test_one_update_golden(self):
        # r=1, p0=q0=0.1, lr=0.5, reg=0:
        # e = 1 - 0.01 = 0.99, p = q = 0.1 + 0.5*0.99*0.1 = 0.1495,
        # both sides updated from the pre-update vectors
        cfg = TrainConfig(k=1, learning_rate=0.5, regularization=0.0, epochs=1, seed=0)
        model = train_mf(single_rating_table(), cfg, initial=({1: [0.1]}, {5: [0.1]}))
        assert model.user_vector(1)[0] == pytest.approx(0.1495, abs=1e-12)
        assert model.item_vector(5)[0] == pytest.approx(0.1495, abs=1e-12)

    def test_convergence_500_epochs(self):
        cfg = TrainConfig(k=1, learning_rate=0.5, regularization=0.0, epochs=500, seed=0)
        model = train_mf(single_rating_table(), cfg, initial=({1: [0.1]}, {5: [0.1]}))
        assert abs(predict(model, 1, 5) - 1.0) < 1e-2

    def test_empty_table_rejected(self):
        table = InteractionTable.from_records([])
        with pytest.raises(ValueError, match="empty"):
            train_mf(table, TrainConfig())

    def test_divergence_names_epoch(self):
        cfg = TrainConfig(k=1, learning_rate=5.0, regularization=0.0, epochs=200, seed=0)
        with pytest.raises(DivergenceError, match="epoch"):
            train_mf(single_rating_table(rating=5.0), cfg, initial=({1: [1.0]}, {5: [1.0]}))

    def test_covers_exactly_training_users_and_items(self):
        rng = np.random.default_rng(0)
        table = random_table(rng)
        model = train_mf(table, TrainConfig(k=3, epochs=2, seed=1))
        assert model.user_ids == table.users
        assert model.item_ids == table.items

    def test_deterministic_bit_for_bit(self):
        rng = np.random.default_rng(1)
        table = random_table(rng)
        cfg = TrainConfig(k=4, epochs=5, seed=42)
        a = train_mf(table, cfg)
        b = train_mf(table, cfg)
        assert np.array_equal(a.user_mat, b.user_mat)
        assert np.array_equal(a.item_mat, b.item_mat)
        c = train_mf(table, TrainConfig(k=4, epochs=5, seed=43))
        assert not np.array_equal(a.user_mat, c.user_mat)

    @pytest.mark.parametrize("fixture_seed", [2, 3, 4, 5, 6])
    def test_objective_decreases(self, fixture_seed):
        rng = np.random.default_rng(fixture_seed)
        table = random_table(rng, n_ratings=int(rng.integers(1, 30)))
        cfg = TrainConfig(seed=fixture_seed)  # default k/lr/reg/epochs
        users, items = table.users, table.items
        uix = {u: j for j, u in enumerate(users)}
        iix = {i: j for j, i in enumerate(items)}
        u_idx = np.array([uix[r.user_id] for r in table.records])
        i_idx = np.array([iix[r.item_id] for r in table.records])
        ratings = np.array([r.rating for r in table.records])
        P0, Q0 = initial_factors(len(users), len(items), cfg)
        initial = regularized_objective(P0, Q0, u_idx, i_idx, ratings, cfg.regularization)
        final = objective_of(train_mf(table, cfg), table, cfg.regularization)
        assert final < initial

    def test_update_direction_matches_finite_differences(self):
        assert mf_update_gradient_max_rel_err(n_points=10) < 1e-5


class TestPredict:
    def model(self):
        return FactorModel.from_arrays(
            user_ids=[1, 2],
            item_ids=[10, 11],
            user_mat=np.array([[0.0, 0.0], [1.0, 2.0]]),
            item_mat=np.array([[1.0, 1.0], [3.0, 4.0]]),
        )

    def test_zero_vector(self):
        assert predict(self.model(), 1, 10) == 0.0

    def test_dot_product(self):
        assert predict(self.model(), 2, 11) == 11.0

    def test_unknown_ids(self):
        with pytest.raises(KeyError, match="user 99"):
            predict(self.model(), 99, 10)
        with pytest.raises(KeyError, match="item 99"):
            predict(self.model(), 1, 99)


class TestRecommendTopN:
    def model(self):
        # scores for user 1: A(10)=9, B(11)=2, C(12)=1
        return FactorModel.from_arrays(
            user_ids=[1],
            item_ids=[10, 11, 12],
            user_mat=np.array([[1.0]]),
            item_mat=np.array([[9.0], [2.0], [1.0]]),
        )

    def test_excludes_interacted_and_orders_by_score(self):
        assert recommend_top_n(self.model(), 1, {10}, 2) == [11, 12]

    def test_n_zero(self):
        assert recommend_top_n(self.model(), 1, set(), 0) == []

    def test_all_interacted(self):
        assert recommend_top_n(self.model(), 1, {10, 11, 12}, 5) == []

    def test_unknown_user(self):
        with pytest.raises(KeyError):
            recommend_top_n(self.model(), 9, set(), 1)

    def test_negative_n(self):
        with pytest.raises(ValueError):
            recommend_top_n(self.model(), 1, set(), -1)

    def test_tie_breaks_by_ascending_item_id(self):
        model = FactorModel.from_arrays(
            user_ids=[1],
            item_ids=[7, 3, 9],
            user_mat=np.array([[1.0]]),
            item_mat=np.array([[2.0], [2.0], [2.0]]),
        )
        assert recommend_top_n(model, 1, set(), 3) == [3, 7, 9]

    def test_fuzz_against_brute_force(self):
        assert run_recommend_fuzz(n_trials=100) == 100


class TestPopularTopN:
    def table(self, counts):
        records = []
        t = 0
        for item, c in counts.items():
            for u in range(1, c + 1):
                t += 1
                records.append(RatingRecord(u, item, 4.0, t))
        return InteractionTable.from_records(records)

    def test_hand_count(self):
        assert popular_top_n(self.table({10: 3, 11: 1}), set(), 1) == [10]

    def test_tie_rule(self):
        assert popular_top_n(self.table({11: 2, 10: 2}), set(), 2) == [10, 11]

    def test_n_larger_than_catalog(self):
        assert popular_top_n(self.table({10: 2, 11: 1}), set(), 99) == [10, 11]

    def test_excluded(self):
        assert popular_top_n(self.table({10: 3, 11: 1}), {10}, 2) == [11]

    def test_empty_table(self):
        assert popular_top_n(InteractionTable.from_records([]), set(), 3) == []


def test_dump_model_roundtrips_through_json(tmp_path):
    import json

    model = FactorModel.from_arrays(
        [1], [10, 11], np.array([[0.5, -0.5]]), np.array([[1.0, 2.0], [3.0, 4.0]])
    )
    path = tmp_path / "model.json"
    dump_model(model, path)
    payload = json.loads(path.read_text())
    assert payload["k"] == 2
    assert payload["users"]["1"] == [0.5, -0.5]
    assert payload["items"]["11"] == [3.0, 4.0]
