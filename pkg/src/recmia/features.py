"""Adversary-side item embeddings and center-difference user features.

A user's feature vector is ``center(interacted items) - center(recommended
items)``, where ``center`` is the unweighted mean of the item embeddings.
The embedding table comes from one matrix factorization fitted on all
shadow interactions; target users are featurized through that same table,
because the adversary can observe target users' recommendation lists but
never their training data.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import InteractionTable
from .mf import TrainConfig, train_mf

MEMBER = "member"
NONMEMBER = "nonmember"
SHADOW = "shadow"
TARGET = "target"

STD_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class ItemEmbeddingTable:
    """Map item id -> embedding vector of length ``k``."""

    k: int
    vectors: Mapping[int, np.ndarray]

    def __post_init__(self) -> None:
        for item, vec in self.vectors.items():
            if vec.shape != (self.k,):
                raise ValueError(f"embedding of item {item} has shape {vec.shape}")
            if not np.isfinite(vec).all():
                raise ValueError(f"embedding of item {item} is non-finite")


@dataclass(frozen=True, eq=False)
class UserFeature:
    """Center-difference vector plus membership label and pool of origin.

    ``degenerate`` flags users for whom one of the two centers resolved no
    items at all; the pipeline counts these in its run report.
    """

    user_id: int
    vector: np.ndarray
    label: str
    origin: str
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.label not in (MEMBER, NONMEMBER):
            raise ValueError(f"bad label {self.label!r}")
        if self.origin not in (SHADOW, TARGET):
            raise ValueError(f"bad origin {self.origin!r}")
        if not np.isfinite(self.vector).all():
            raise ValueError(f"non-finite feature for user {self.user_id}")


def build_embeddings(
    shadow_interactions: InteractionTable, config: TrainConfig
) -> ItemEmbeddingTable:
    """Item-factor half of a matrix factorization on the shadow data.

    Trained on every shadow interaction (members and non-members alike);
    covers exactly the items rated there.
    """
    model = train_mf(shadow_interactions, config)
    return ItemEmbeddingTable(k=model.k, vectors=model.item_factors)


def center(items: Sequence[int], table: ItemEmbeddingTable) -> np.ndarray:
    """Mean embedding of the items present in the table.

    Items without an embedding are skipped; if nothing resolves the
    center is the zero vector.
    """
    resolved = [table.vectors[i] for i in items if i in table.vectors]
    if not resolved:
        return np.zeros(table.k)
    return np.mean(resolved, axis=0)


def extract_feature(
    interactions: Sequence[int],
    recommendations: Sequence[int],
    table: ItemEmbeddingTable,
    label: str,
    origin: str,
    user_id: int,
) -> UserFeature:
    """center(interactions) - center(recommendations), componentwise."""
    resolves = lambda items: any(i in table.vectors for i in items)
    vector = center(interactions, table) - center(recommendations, table)
    vector.flags.writeable = False
    return UserFeature(
        user_id=user_id,
        vector=vector,
        label=label,
        origin=origin,
        degenerate=not (resolves(interactions) and resolves(recommendations)),
    )


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Frozen per-dimension affine transform ``x -> (x - mean) / std``.

    Fitted once on the shadow feature sample and applied unchanged to
    target features; ``std`` is floored at ``STD_FLOOR`` so constant
    dimensions stay finite.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, vectors: Iterable[np.ndarray]) -> "Standardizer":
        X = np.asarray(list(vectors), dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("need a non-empty 2-D sample to fit a standardizer")
        mean = X.mean(axis=0)
        std = np.maximum(X.std(axis=0), STD_FLOOR)
        mean.flags.writeable = False
        std.flags.writeable = False
        return cls(mean=mean, std=std)

    @classmethod
    def identity(cls, k: int) -> "Standardizer":
        return cls(mean=np.zeros(k), std=np.ones(k))

    def apply(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != self.mean.shape:
            raise ValueError(
                f"feature of shape {vector.shape} does not match "
                f"standardizer of shape {self.mean.shape}"
            )
        return (vector - self.mean) / self.std


def write_features_csv(features: Sequence[UserFeature], path: str | Path) -> None:
    """Dump features for offline analysis: ``user_id,origin,label,f_1..f_k``."""
    if not features:
        raise ValueError("no features to write")
    k = features[0].vector.shape[0]
    header = "user_id,origin,label," + ",".join(f"f_{j + 1}" for j in range(k))
    lines = [header]
    for f in features:
        values = ",".join(repr(float(x)) for x in f.vector)
        lines.append(f"{f.user_id},{f.origin},{f.label},{values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
