"""End-to-end attack experiment and hyperparameter sweeps.

One experiment executes this dataflow:

1.  load ratings, split users into shadow/target pools and member/
    non-member halves;
2.  train the shadow recommender on shadow-member interactions only;
    shadow members receive its personalized top-N, shadow non-members
    receive the popularity list over shadow-member interactions;
3.  train the adversary's item embeddings on all shadow interactions and
    turn every shadow user into a labeled center-difference feature;
4.  train the attack MLP on those shadow features;
5.  repeat step 2 on the target pool with an independently trained
    target recommender, featurize target users through the *shadow*
    embedding table and standardizer, score them with the attack model;
6.  report ROC/AUC and write ``report.json`` + ``roc.csv``.

Target-side training data never reaches any shadow-side stage; target
users are only ever seen through their recommendation lists.

Every stage draws its seed from the master seed by name
(:func:`recmia.seeding.derive_seed`), so e.g. changing the recommendation
list length never perturbs the user split.
"""

from __future__ import annotations

import json
import logging
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence, TypeVar

from . import seeding
from .dataset import InteractionTable, SplitPlan, load_ratings, split_users
from .features import (
    MEMBER,
    NONMEMBER,
    SHADOW,
    TARGET,
    ItemEmbeddingTable,
    UserFeature,
    build_embeddings,
    extract_feature,
)
from .metrics import RocCurve, ScoredSample, auc, roc_points, write_roc_csv
from .mf import FactorModel, TrainConfig, popular_top_n, recommend_top_n, train_mf
from .mlp import AttackTrainConfig, MlpModel, predict_membership, train_attack

logger = logging.getLogger("recmia")

T = TypeVar("T")

SWEEP_PARAMS = ("k", "recommender_lr", "attack_lr", "N")

REPORT_FILENAME = "report.json"
ROC_FILENAME = "roc.csv"
SWEEP_FILENAME = "sweep.csv"


class ConfigError(ValueError):
    """Bad experiment configuration (file or values)."""


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage


def _stage(name: str, fn: Callable[[], T]) -> T:
    try:
        return fn()
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment depends on.

    ``seed`` is the master seed; the ``seed`` fields of the nested
    training configs are ignored and filled in per stage at run time.
    ``embedding=None`` mirrors the ``recommender`` block.
    """

    data_path: str
    seed: int = 1
    shadow_fraction: float = 0.5
    member_fraction: float = 0.5
    recommender: TrainConfig = field(default_factory=TrainConfig)
    embedding: TrainConfig | None = None
    rec_list_length: int = 100
    attack: AttackTrainConfig = field(default_factory=AttackTrainConfig)
    output_dir: str = "out"

    def __post_init__(self) -> None:
        if self.embedding is None:
            object.__setattr__(self, "embedding", self.recommender)
        if self.rec_list_length < 1:
            raise ConfigError(
                f"rec_list_length must be >= 1, got {self.rec_list_length}"
            )


@dataclass(frozen=True)
class ExperimentReport:
    """What one experiment produced, echoed into ``report.json``.

    ``wall_clock_seconds`` is measured and logged but serialized as null,
    so reruns of an identical (config, seed) produce byte-identical
    artifacts.
    """

    auc: float
    sample_counts: dict
    config: dict
    seed: int
    degenerate_features: int
    wall_clock_seconds: float


def _train_config_to_dict(cfg: TrainConfig) -> dict:
    return {
        "k": cfg.k,
        "learning_rate": cfg.learning_rate,
        "regularization": cfg.regularization,
        "epochs": cfg.epochs,
        "init_scale": cfg.init_scale,
    }


def _attack_config_to_dict(cfg: AttackTrainConfig) -> dict:
    return {
        "hidden1": cfg.hidden1,
        "hidden2": cfg.hidden2,
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
    }


def config_to_dict(config: ExperimentConfig) -> dict:
    """The JSON-facing view of a config (per-stage seeds are derived)."""
    return {
        "data_path": str(config.data_path),
        "seed": config.seed,
        "shadow_fraction": config.shadow_fraction,
        "member_fraction": config.member_fraction,
        "recommender": _train_config_to_dict(config.recommender),
        "embedding": _train_config_to_dict(config.embedding),
        "rec_list_length": config.rec_list_length,
        "attack": _attack_config_to_dict(config.attack),
        "output_dir": str(config.output_dir),
    }


_TOP_KEYS = {
    "data_path",
    "seed",
    "shadow_fraction",
    "member_fraction",
    "recommender",
    "embedding",
    "rec_list_length",
    "attack",
    "output_dir",
}
_TRAIN_KEYS = {"k", "learning_rate", "regularization", "epochs", "init_scale"}
_ATTACK_KEYS = {"hidden1", "hidden2", "learning_rate", "epochs", "batch_size"}
_INT_KEYS = {
    "seed", "rec_list_length", "k", "epochs",
    "hidden1", "hidden2", "batch_size",
}
_FLOAT_KEYS = {
    "shadow_fraction", "member_fraction", "learning_rate", "regularization",
    "init_scale",
}
_STR_KEYS = {"data_path", "output_dir"}


def _reject_unknown(block: Mapping, allowed: set[str], where: str) -> None:
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _coerce(key: str, value, where: str):
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if key == "init_scale" and value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
        return float(value)
    if key in _STR_KEYS and not isinstance(value, str):
        raise ConfigError(f"{where}.{key} must be a string, got {value!r}")
    return value


def _train_config_from(block: Mapping, where: str, base: TrainConfig) -> TrainConfig:
    if not isinstance(block, Mapping):
        raise ConfigError(f"{where} must be an object")
    _reject_unknown(block, _TRAIN_KEYS, where)
    fields = {k: _coerce(k, v, where) for k, v in block.items()}
    try:
        return replace(base, **fields)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _attack_config_from(block: Mapping, where: str) -> AttackTrainConfig:
    if not isinstance(block, Mapping):
        raise ConfigError(f"{where} must be an object")
    _reject_unknown(block, _ATTACK_KEYS, where)
    fields = {k: _coerce(k, v, where) for k, v in block.items()}
    try:
        return AttackTrainConfig(**fields)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(obj: Mapping) -> ExperimentConfig:
    """Build a config from a JSON-style mapping; unknown keys are rejected."""
    if not isinstance(obj, Mapping):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(obj, _TOP_KEYS, "config")
    if "data_path" not in obj:
        raise ConfigError("config is missing required key 'data_path'")
    recommender = _train_config_from(
        obj.get("recommender", {}), "recommender", TrainConfig()
    )
    # absent embedding keys mirror the recommender block
    embedding = _train_config_from(obj.get("embedding", {}), "embedding", recommender)
    attack = _attack_config_from(obj.get("attack", {}), "attack")
    scalars = {
        k: _coerce(k, obj[k], "config")
        for k in ("seed", "shadow_fraction", "member_fraction", "rec_list_length", "output_dir")
        if k in obj
    }
    try:
        return ExperimentConfig(
            data_path=_coerce("data_path", obj["data_path"], "config"),
            recommender=recommender,
            embedding=embedding,
            attack=attack,
            **scalars,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ``ExperimentConfig`` from a JSON file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(obj)


def _stage_seed(config: ExperimentConfig, stage: str) -> int:
    return seeding.derive_seed(config.seed, stage)


def _pool_recommendations(
    table: InteractionTable,
    members: frozenset[int],
    nonmembers: frozenset[int],
    model: FactorModel,
    member_table: InteractionTable,
    n: int,
) -> dict[int, list[int]]:
    """Recommendation list served to every user of one pool.

    Members get the personalized top-N of the pool's recommender; users
    the recommender never saw get the popularity fallback over its
    training interactions (the system knows nothing about them, so
    nothing is excluded and all non-members receive the same list).
    """
    recs: dict[int, list[int]] = {}
    for u in sorted(members):
        recs[u] = recommend_top_n(model, u, set(table.items_of(u)), n)
    popular = popular_top_n(member_table, frozenset(), n)
    for u in sorted(nonmembers):
        recs[u] = popular
    return recs


def _pool_features(
    table: InteractionTable,
    members: frozenset[int],
    nonmembers: frozenset[int],
    recs: Mapping[int, list[int]],
    embeddings: ItemEmbeddingTable,
    origin: str,
) -> list[UserFeature]:
    out = []
    for u in sorted(members):
        out.append(
            extract_feature(table.items_of(u), recs[u], embeddings, MEMBER, origin, u)
        )
    for u in sorted(nonmembers):
        out.append(
            extract_feature(table.items_of(u), recs[u], embeddings, NONMEMBER, origin, u)
        )
    return out


def _run_attack(
    table: InteractionTable, plan: SplitPlan, config: ExperimentConfig
) -> tuple[list[UserFeature], list[UserFeature], MlpModel]:
    """Stages 3-9: returns (shadow features, target features, attack model)."""
    n = config.rec_list_length

    shadow_member_table = table.restrict(plan.shadow_members)
    shadow_model = _stage(
        "train-shadow-recommender",
        lambda: train_mf(
            shadow_member_table,
            replace(config.recommender, seed=_stage_seed(config, "shadow-recommender")),
        ),
    )
    shadow_recs = _stage(
        "shadow-recommendations",
        lambda: _pool_recommendations(
            table, plan.shadow_members, plan.shadow_nonmembers,
            shadow_model, shadow_member_table, n,
        ),
    )
    shadow_table = table.restrict(plan.shadow_members | plan.shadow_nonmembers)
    embeddings = _stage(
        "build-embeddings",
        lambda: build_embeddings(
            shadow_table,
            replace(config.embedding, seed=_stage_seed(config, "embedding")),
        ),
    )
    shadow_features = _stage(
        "extract-shadow-features",
        lambda: _pool_features(
            table, plan.shadow_members, plan.shadow_nonmembers,
            shadow_recs, embeddings, SHADOW,
        ),
    )
    attack_model = _stage(
        "train-attack",
        lambda: train_attack(
            shadow_features,
            replace(config.attack, seed=_stage_seed(config, "attack")),
        ),
    )

    target_member_table = table.restrict(plan.target_members)
    target_model = _stage(
        "train-target-recommender",
        lambda: train_mf(
            target_member_table,
            replace(config.recommender, seed=_stage_seed(config, "target-recommender")),
        ),
    )
    target_recs = _stage(
        "target-recommendations",
        lambda: _pool_recommendations(
            table, plan.target_members, plan.target_nonmembers,
            target_model, target_member_table, n,
        ),
    )
    # Target features go through the shadow-trained embedding table; the
    # standardizer fitted on shadow features lives inside the attack model.
    target_features = _stage(
        "extract-target-features",
        lambda: _pool_features(
            table, plan.target_members, plan.target_nonmembers,
            target_recs, embeddings, TARGET,
        ),
    )
    return shadow_features, target_features, attack_model


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the full attack experiment and write ``report.json`` and ``roc.csv``."""
    t0 = time.perf_counter()
    table = _stage("load", lambda: load_ratings(config.data_path))
    logger.info(
        "loaded %d ratings (%d users, %d items, %d duplicate rows collapsed)",
        table.n_records, len(table.users), len(table.items), table.duplicates_collapsed,
    )
    plan = _stage(
        "split",
        lambda: split_users(
            table,
            _stage_seed(config, "split"),
            config.shadow_fraction,
            config.member_fraction,
        ),
    )
    shadow_features, target_features, attack_model = _run_attack(table, plan, config)

    scored = _stage(
        "score",
        lambda: [
            ScoredSample(predict_membership(attack_model, f.vector), f.label)
            for f in target_features
        ],
    )
    auc_value = _stage("score", lambda: auc(scored))
    curve = _stage("score", lambda: roc_points(scored))

    degenerate = sum(f.degenerate for f in shadow_features + target_features)
    if degenerate:
        logger.warning("%d degenerate feature vector(s); audit embedding coverage", degenerate)
    counts = {
        "shadow": {
            "member": len(plan.shadow_members),
            "nonmember": len(plan.shadow_nonmembers),
        },
        "target": {
            "member": len(plan.target_members),
            "nonmember": len(plan.target_nonmembers),
        },
    }
    report = ExperimentReport(
        auc=auc_value,
        sample_counts=counts,
        config=config_to_dict(config),
        seed=config.seed,
        degenerate_features=degenerate,
        wall_clock_seconds=time.perf_counter() - t0,
    )
    _stage("write-report", lambda: _write_report(report, curve, Path(config.output_dir)))
    logger.info(
        "experiment done: auc=%.4f, %.1fs, artifacts in %s",
        report.auc, report.wall_clock_seconds, config.output_dir,
    )
    return report


def _write_report(report: ExperimentReport, curve: RocCurve, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "auc": report.auc,
        "sample_counts": report.sample_counts,
        "config": report.config,
        "seed": report.seed,
        "degenerate_features": report.degenerate_features,
        "wall_clock_seconds": None,  # measured value logged, not serialized
    }
    (out_dir / REPORT_FILENAME).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_roc_csv(curve, out_dir / ROC_FILENAME)


def _apply_sweep_param(
    base: ExperimentConfig, param: str, value: float
) -> ExperimentConfig:
    if param == "k":
        k = int(value)
        # the swept vector length applies to recommender and embeddings jointly
        return replace(
            base,
            recommender=replace(base.recommender, k=k),
            embedding=replace(base.embedding, k=k),
        )
    if param == "recommender_lr":
        return replace(base, recommender=replace(base.recommender, learning_rate=float(value)))
    if param == "attack_lr":
        return replace(base, attack=replace(base.attack, learning_rate=float(value)))
    if param == "N":
        return replace(base, rec_list_length=int(value))
    raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")


def _format_value(param: str, value: float) -> str:
    return str(int(value)) if param in ("k", "N") else repr(float(value))


def run_sweep(
    base: ExperimentConfig,
    param: str,
    values: Sequence[float],
    seeds: Sequence[int],
) -> list[dict]:
    """Run one experiment per (value, seed) and write ``sweep.csv``.

    Rows are ordered by (value, seed) as given; per-value median rows
    (seed column ``median``) are appended after the data rows. Each run's
    own artifacts land under ``<output_dir>/runs/``.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    if not values:
        raise ValueError("sweep needs at least one value")
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    out_dir = Path(base.output_dir)
    rows: list[dict] = []
    for value in values:
        for seed in seeds:
            cfg = _apply_sweep_param(base, param, value)
            run_dir = out_dir / "runs" / f"{param}-{_format_value(param, value)}-seed-{seed}"
            cfg = replace(cfg, seed=seed, output_dir=str(run_dir))
            report = run_experiment(cfg)
            rows.append(
                {"param": param, "value": value, "seed": seed, "auc": report.auc}
            )
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["param,value,seed,auc"]
    for row in rows:
        lines.append(
            f"{row['param']},{_format_value(param, row['value'])},{row['seed']},{row['auc']:.6f}"
        )
    for value in values:
        med = statistics.median(r["auc"] for r in rows if r["value"] == value)
        lines.append(f"{param},{_format_value(param, value)},median,{med:.6f}")
    (out_dir / SWEEP_FILENAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return rows
