"""MovieLens-style ratings ingestion and the shadow/target user split."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from . import seeding

RATINGS_HEADER = "userId,movieId,rating,timestamp"
RATING_MIN = 0.5
RATING_MAX = 5.0


class RatingsFormatError(ValueError):
    """Raised for unreadable or malformed ratings input."""


@dataclass(frozen=True)
class RatingRecord:
    """One user-item rating event. Timestamp is retained but unused downstream."""

    user_id: int
    item_id: int
    rating: float
    timestamp: int

    def __post_init__(self) -> None:
        if self.user_id < 0 or self.item_id < 0:
            raise ValueError(f"negative id in record ({self.user_id}, {self.item_id})")
        if not RATING_MIN <= self.rating <= RATING_MAX:
            raise ValueError(
                f"rating {self.rating} outside [{RATING_MIN}, {RATING_MAX}]"
            )


@dataclass(frozen=True, eq=True)
class InteractionTable:
    """Deduplicated rating events with derived user/item catalogs.

    ``records`` holds at most one record per (user, item) pair, sorted by
    (user_id, item_id). ``duplicates_collapsed`` counts input rows dropped
    by keep-latest-timestamp deduplication; it does not participate in
    equality so a table round-trips through ``write_ratings``.
    """

    records: tuple[RatingRecord, ...]
    users: tuple[int, ...]
    items: tuple[int, ...]
    item_counts: Mapping[int, int]
    duplicates_collapsed: int = field(default=0, compare=False)
    _by_user: Mapping[int, tuple[RatingRecord, ...]] = field(
        default_factory=dict, repr=False, compare=False
    )

    @classmethod
    def from_records(
        cls, records: Iterable[RatingRecord], duplicates_collapsed: int = 0
    ) -> "InteractionTable":
        recs = tuple(sorted(records, key=lambda r: (r.user_id, r.item_id)))
        seen: set[tuple[int, int]] = set()
        counts: dict[int, int] = {}
        by_user: dict[int, list[RatingRecord]] = {}
        for r in recs:
            key = (r.user_id, r.item_id)
            if key in seen:
                raise ValueError(f"duplicate (user, item) pair {key}")
            seen.add(key)
            counts[r.item_id] = counts.get(r.item_id, 0) + 1
            by_user.setdefault(r.user_id, []).append(r)
        return cls(
            records=recs,
            users=tuple(sorted(by_user)),
            items=tuple(sorted(counts)),
            item_counts=MappingProxyType(counts),
            duplicates_collapsed=duplicates_collapsed,
            _by_user=MappingProxyType({u: tuple(rs) for u, rs in by_user.items()}),
        )

    @property
    def n_records(self) -> int:
        return len(self.records)

    def records_of(self, user_id: int) -> tuple[RatingRecord, ...]:
        return self._by_user[user_id]

    def items_of(self, user_id: int) -> tuple[int, ...]:
        return tuple(r.item_id for r in self._by_user[user_id])

    def restrict(self, user_ids: Iterable[int]) -> "InteractionTable":
        """Sub-table containing exactly the records of the given users."""
        keep = set(user_ids)
        return InteractionTable.from_records(
            r for r in self.records if r.user_id in keep
        )


def load_ratings(path: str | Path) -> InteractionTable:
    """Parse a ratings CSV (header ``userId,movieId,rating,timestamp``).

    Duplicate (user, item) rows are collapsed keeping the one with the
    latest timestamp (later file position wins ties); the number of
    dropped rows is recorded on the table. Malformed rows and ratings off
    the [0.5, 5.0] scale are rejected with their line number.
    """
    path = Path(path)
    if not path.is_file():
        raise RatingsFormatError(f"ratings file not found: {path}")
    latest: dict[tuple[int, int], RatingRecord] = {}
    collapsed = 0
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if lineno == 1:
                if line != RATINGS_HEADER:
                    raise RatingsFormatError(
                        f"{path}:1: expected header {RATINGS_HEADER!r}, got {line!r}"
                    )
                continue
            if line == "":
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise RatingsFormatError(
                    f"{path}:{lineno}: expected 4 comma-separated fields, got {len(parts)}"
                )
            try:
                record = RatingRecord(
                    user_id=int(parts[0]),
                    item_id=int(parts[1]),
                    rating=float(parts[2]),
                    timestamp=int(parts[3]),
                )
            except ValueError as exc:
                raise RatingsFormatError(f"{path}:{lineno}: {exc}") from exc
            key = (record.user_id, record.item_id)
            prev = latest.get(key)
            if prev is None:
                latest[key] = record
            else:
                collapsed += 1
                if record.timestamp >= prev.timestamp:
                    latest[key] = record
    if not latest:
        raise RatingsFormatError(f"{path}: no rating rows after the header")
    return InteractionTable.from_records(latest.values(), duplicates_collapsed=collapsed)


def write_ratings(table: InteractionTable, path: str | Path) -> None:
    """Serialize back to the input CSV format.

    Ratings are written with shortest round-trip formatting, so loading
    the output reproduces the table exactly.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(RATINGS_HEADER + "\n")
        for r in table.records:
            fh.write(f"{r.user_id},{r.item_id},{r.rating!r},{r.timestamp}\n")


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint shadow/target, member/non-member user partition."""

    shadow_members: frozenset[int]
    shadow_nonmembers: frozenset[int]
    target_members: frozenset[int]
    target_nonmembers: frozenset[int]
    seed: int

    def all_users(self) -> frozenset[int]:
        return (
            self.shadow_members
            | self.shadow_nonmembers
            | self.target_members
            | self.target_nonmembers
        )


def split_users(
    table: InteractionTable,
    seed: int,
    shadow_fraction: float,
    member_fraction: float,
) -> SplitPlan:
    """Partition users into four disjoint sets by a seeded shuffle.

    Users are shuffled with the package PRNG (Fisher-Yates via
    ``Generator.permutation``); the first ``floor(U * shadow_fraction)``
    form the shadow pool and the rest the target pool, and within each
    pool the first ``floor(P * member_fraction)`` (in shuffled order)
    become members. Pure function of the user set, seed and fractions.
    """
    if not 0.0 < shadow_fraction < 1.0:
        raise ValueError(f"shadow_fraction must be in (0, 1), got {shadow_fraction}")
    if not 0.0 < member_fraction < 1.0:
        raise ValueError(f"member_fraction must be in (0, 1), got {member_fraction}")
    users = sorted(table.users)
    if len(users) < 4:
        raise ValueError(
            f"need at least 4 users to populate all four sets, got {len(users)}"
        )
    rng = seeding.generator(seed)
    shuffled = [users[i] for i in rng.permutation(len(users))]
    n_shadow = int(len(users) * shadow_fraction)
    pools = {"shadow": shuffled[:n_shadow], "target": shuffled[n_shadow:]}
    sets: dict[str, frozenset[int]] = {}
    for name, pool in pools.items():
        n_members = int(len(pool) * member_fraction)
        sets[f"{name}_members"] = frozenset(pool[:n_members])
        sets[f"{name}_nonmembers"] = frozenset(pool[n_members:])
    if any(not s for s in sets.values()):
        raise ValueError(
            "fractions leave one of the four user sets empty "
            f"(users={len(users)}, shadow_fraction={shadow_fraction}, "
            f"member_fraction={member_fraction})"
        )
    return SplitPlan(seed=seed, **sets)
