"""
Ratings Ingestion
=================

Builds per-genre arms from a ratings table: one arm per genre, mean equal to
the genre's average rating over the scale maximum, cost drawn Uniform(0, 1)
from a seeded generator.

Inputs are local CSV files or DataFrames:
- ratings: `item_id,rating`
- genre map: `item_id,genre` (one row per pair) or `item_id,genres` with
  `|`-separated genres
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd

from core.errors import EmptyRatingsError, RatingOutOfRangeError, TraceIOError
from core.instance import BanditInstance, sort_by_cost

logger = logging.getLogger(__name__)

TableSource = Union[pd.DataFrame, str, Path]


@dataclass(frozen=True)
class IngestedArms:
    """Per-genre arms, cost-ascending, before a subsidy factor is chosen."""
    genres: Tuple[str, ...]
    means: Tuple[float, ...]
    costs: Tuple[float, ...]
    rating_counts: Tuple[int, ...]

    @property
    def num_arms(self) -> int:
        return len(self.genres)

    def to_instance(self, alpha: float) -> BanditInstance:
        """Bind a subsidy factor; needs at least two genres."""
        return sort_by_cost(self.means, self.costs, alpha, labels=self.genres)


def _read_table(source: TableSource, what: str) -> pd.DataFrame:
    if isinstance(source, pd.DataFrame):
        return source
    try:
        return pd.read_csv(source, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TraceIOError(str(source), f"cannot read {what}: {e}")


def _explode_genres(genre_map: pd.DataFrame) -> pd.DataFrame:
    """Normalise the genre map to one (item_id, genre) row per pair."""
    if "genre" in genre_map.columns:
        pairs = genre_map[["item_id", "genre"]]
    elif "genres" in genre_map.columns:
        pairs = genre_map[["item_id", "genres"]].assign(
            genre=genre_map["genres"].astype(str).str.split("|")
        ).explode("genre")[["item_id", "genre"]]
    else:
        raise EmptyRatingsError("Genre map needs an 'item_id' and a 'genre' or 'genres' column")
    pairs = pairs.dropna()
    pairs = pairs.assign(genre=pairs["genre"].astype(str).str.strip())
    return pairs[pairs["genre"] != ""].drop_duplicates()


def ingest_ratings(
    ratings: TableSource,
    genre_map: TableSource,
    rating_scale_max: float,
    cost_seed: int,
) -> IngestedArms:
    """
    Aggregate ratings into one Bernoulli arm per genre.

    Items tagged with several genres count once toward each genre. Genres in
    the map with no ratings are dropped with a warning. Costs are assigned in
    genre-name order from `numpy.random.default_rng(cost_seed)`, then arms are
    stable-sorted by cost, so identical inputs give identical arms.

    Raises:
        EmptyRatingsError: no ratings at all, or none matching a genre
        RatingOutOfRangeError: a rating outside (0, rating_scale_max]
    """
    ratings_df = _read_table(ratings, "ratings")
    genre_df = _read_table(genre_map, "genre map")

    if ratings_df.empty or not {"item_id", "rating"}.issubset(ratings_df.columns):
        raise EmptyRatingsError("Ratings input is empty or lacks item_id,rating columns")

    values = pd.to_numeric(ratings_df["rating"], errors="coerce")
    bad = values.isna() | (values <= 0) | (values > rating_scale_max)
    if bad.any():
        first = ratings_df.loc[bad, "rating"].iloc[0]
        raise RatingOutOfRangeError(first, rating_scale_max)

    pairs = _explode_genres(genre_df)
    joined = ratings_df.assign(rating=values).merge(pairs, on="item_id", how="inner")

    per_genre = joined.groupby("genre", sort=True)["rating"].agg(["sum", "count"])
    all_genres = sorted(pairs["genre"].unique())
    missing = [g for g in all_genres if g not in per_genre.index]
    for genre in missing:
        logger.warning("Genre excluded: no ratings", extra={"genre": genre})

    if per_genre.empty:
        raise EmptyRatingsError()

    genres = list(per_genre.index)
    means = (per_genre["sum"] / (per_genre["count"] * rating_scale_max)).clip(0.0, 1.0)
    rng = np.random.default_rng(cost_seed)
    costs = rng.uniform(0.0, 1.0, size=len(genres))

    order = sorted(range(len(genres)), key=lambda k: costs[k])
    logger.info(
        "Ingested ratings",
        extra={"genres": len(genres), "ratings": int(per_genre["count"].sum())}
    )
    return IngestedArms(
        genres=tuple(str(genres[k]) for k in order),
        means=tuple(float(means.iloc[k]) for k in order),
        costs=tuple(float(costs[k]) for k in order),
        rating_counts=tuple(int(per_genre["count"].iloc[k]) for k in order),
    )
