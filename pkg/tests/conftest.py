import os
from pathlib import Path

import pytest

from recmia.dataset import write_ratings

import helpers

REPO_ROOT = Path(__file__).resolve().parent.parent
MOVIELENS_DEFAULT = REPO_ROOT / "data" / "ml-latest-small" / "ratings.csv"


def movielens_ratings_path() -> Path | None:
    override = os.environ.get("RECMIA_MOVIELENS")
    path = Path(override) if override else MOVIELENS_DEFAULT
    return path if path.is_file() else None


@pytest.fixture(scope="session")
def movielens_path() -> Path:
    path = movielens_ratings_path()
    if path is None:
        pytest.skip(
            "MovieLens ml-latest-small not available (run scripts/fetch_movielens.py "
            "or set RECMIA_MOVIELENS to a ratings.csv)"
        )
    return path


@pytest.fixture(scope="session")
def separable_table():
    return helpers.separable_table()


@pytest.fixture(scope="session")
def separable_csv(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("synthetic") / "ratings.csv"
    write_ratings(helpers.separable_table(), path)
    return path
