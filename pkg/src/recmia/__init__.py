"""User-level membership inference attack against a latent-factor recommender."""

__version__ = "0.1.0"

from .dataset import (
    InteractionTable,
    RatingRecord,
    RatingsFormatError,
    SplitPlan,
    load_ratings,
    split_users,
    write_ratings,
)
from .features import (
    ItemEmbeddingTable,
    Standardizer,
    UserFeature,
    build_embeddings,
    center,
    extract_feature,
    write_features_csv,
)
from .metrics import RocCurve, ScoredSample, auc, roc_points, trapezoid_area, write_roc_csv
from .mf import (
    DivergenceError,
    FactorModel,
    TrainConfig,
    popular_top_n,
    predict,
    recommend_top_n,
    train_mf,
)
from .mlp import AttackTrainConfig, MlpModel, predict_membership, train_attack
from .pipeline import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    StageError,
    load_config,
    run_experiment,
    run_sweep,
)

__all__ = [
    "AttackTrainConfig",
    "ConfigError",
    "DivergenceError",
    "ExperimentConfig",
    "ExperimentReport",
    "FactorModel",
    "InteractionTable",
    "ItemEmbeddingTable",
    "MlpModel",
    "RatingRecord",
    "RatingsFormatError",
    "RocCurve",
    "ScoredSample",
    "SplitPlan",
    "Standardizer",
    "StageError",
    "TrainConfig",
    "UserFeature",
    "auc",
    "build_embeddings",
    "center",
    "extract_feature",
    "load_config",
    "load_ratings",
    "popular_top_n",
    "predict",
    "predict_membership",
    "recommend_top_n",
    "roc_points",
    "run_experiment",
    "run_sweep",
    "split_users",
    "train_attack",
    "train_mf",
    "trapezoid_area",
    "write_features_csv",
    "write_ratings",
    "write_roc_csv",
]
