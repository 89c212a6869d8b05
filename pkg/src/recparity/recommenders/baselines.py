"""Heuristic top-k baselines: global popularity, random, per-group
popularity, and most-divisive-items. None of them ever recommends an item
from the user's own history, and all ranking ties break by ascending item
index so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..dataset import InteractionDataset, RecommendationTable, minority_ratio
from ..metrics import DemographicRatioTable
from ..seeding import SeedSpec, as_seed

MAX_DIVISION_MIN_COUNT = 5


@dataclass(frozen=True, eq=False)
class PopularityIndex:
    """Training interaction counts per item, overall and per group, with the
    derived rank orders the baselines walk."""

    counts: np.ndarray
    group_counts: np.ndarray  # (2, n_items)
    divisiveness: np.ndarray  # demographic ratio minus dataset minority ratio
    min_count: int = MAX_DIVISION_MIN_COUNT

    @classmethod
    def from_dataset(cls, train: InteractionDataset,
                     min_count: int = MAX_DIVISION_MIN_COUNT) -> "PopularityIndex":
        counts = train.item_counts()
        group_counts = np.stack(
            [train.group_item_counts(0), train.group_item_counts(1)]
        )
        table = DemographicRatioTable.from_dataset(train)
        return cls(counts=counts, group_counts=group_counts,
                   divisiveness=table.ratio - minority_ratio(train),
                   min_count=min_count)

    @property
    def n_items(self) -> int:
        return len(self.counts)

    @cached_property
    def order(self) -> np.ndarray:
        idx = np.arange(self.n_items)
        return np.lexsort((idx, -self.counts))

    @cached_property
    def group_orders(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.arange(self.n_items)
        return tuple(
            np.lexsort((idx, -self.group_counts[g])) for g in (0, 1)
        )

    @cached_property
    def division_orders(self) -> tuple[np.ndarray, np.ndarray]:
        """Eligible items (>= min_count occurrences) ranked most-negative
        first for the majority, most-positive first for the minority."""
        eligible = np.flatnonzero(self.counts >= self.min_count)
        div = self.divisiveness[eligible]
        majority = eligible[np.lexsort((eligible, div))]
        minority = eligible[np.lexsort((eligible, -div))]
        return majority, minority


def _as_index(train) -> PopularityIndex:
    if isinstance(train, PopularityIndex):
        return train
    return PopularityIndex.from_dataset(train)


def _take_eligible(order: np.ndarray, history, k: int,
                   n_items: int) -> np.ndarray:
    mask = np.ones(n_items, dtype=bool)
    mask[np.asarray(history, dtype=np.int64)] = False
    eligible = order[mask[order]]
    if len(eligible) < k:
        raise ValueError(f"only {len(eligible)} eligible items, need {k}")
    return eligible[:k]


def recommend_pop(train, user_history, k: int) -> np.ndarray:
    """The k globally most interacted items the user has not seen."""
    index = _as_index(train)
    return _take_eligible(index.order, user_history, k, index.n_items)


def recommend_rand(train, user_history, k: int,
                   seed: SeedSpec | int) -> np.ndarray:
    """k unseen items drawn uniformly without replacement, in draw order."""
    index = _as_index(train)
    mask = np.ones(index.n_items, dtype=bool)
    mask[np.asarray(user_history, dtype=np.int64)] = False
    eligible = np.flatnonzero(mask)
    if len(eligible) < k:
        raise ValueError(f"only {len(eligible)} eligible items, need {k}")
    # permutation slice: uniform over ordered k-tuples
    return as_seed(seed).rng().permutation(eligible)[:k]


def recommend_dem_pop(train, user_group: int, user_history,
                      k: int) -> np.ndarray:
    """The k items most interacted within the user's own group."""
    index = _as_index(train)
    return _take_eligible(index.group_orders[user_group], user_history, k,
                          index.n_items)


def recommend_max_division(train, user_group: int, user_history,
                           k: int) -> np.ndarray:
    """The k most demographically divisive unseen items, signed toward the
    user's group; items under the occurrence floor are never recommended."""
    index = _as_index(train)
    order = index.division_orders[user_group]
    mask = np.ones(index.n_items, dtype=bool)
    mask[np.asarray(user_history, dtype=np.int64)] = False
    eligible = order[mask[order]]
    if len(eligible) < k:
        raise ValueError(
            f"only {len(eligible)} divisive items pass the "
            f">={index.min_count}-occurrence filter, need {k}"
        )
    return eligible[:k]


_BASELINES = ("pop", "rand", "dem_pop", "max_division")


def recommend_table(kind: str, train: InteractionDataset,
                    target: InteractionDataset, k: int,
                    seed: SeedSpec | int | None = None) -> RecommendationTable:
    """Run one baseline for every user of ``target``, using each user's own
    history for exclusion. RAND derives an independent stream per user, so
    the result does not depend on iteration order.
    """
    if kind not in _BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {_BASELINES}")
    index = PopularityIndex.from_dataset(train)
    if kind == "rand" and seed is None:
        raise ValueError("rand baseline needs a seed")
    seed = as_seed(seed).child("rand-baseline") if kind == "rand" else None
    rows = []
    for u in target.users:
        history = target.user_items(int(u))
        if kind == "pop":
            rec = recommend_pop(index, history, k)
        elif kind == "rand":
            rec = recommend_rand(index, history, k, seed.child(int(u)))
        elif kind == "dem_pop":
            rec = recommend_dem_pop(index, int(target.demographic[u]), history, k)
        else:
            rec = recommend_max_division(index, int(target.demographic[u]),
                                         history, k)
        rows.append(rec)
    return RecommendationTable(k=k, users=target.users.copy(),
                               items=np.stack(rows))
