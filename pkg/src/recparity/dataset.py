"""Core data model: implicit-feedback interactions with one binary demographic
label per user, user-disjoint train/test splitting, and ranked top-k tables.

Group label 1 always denotes the minority group. Construction helpers
canonicalize labels so the smaller group carries label 1 (ties keep label 1);
subset views (splits) inherit the parent's labeling unchanged so that train
and test always agree on who the minority is.

All types are immutable after construction: arrays are stored read-only and
may be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .seeding import SeedSpec, as_seed


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class InteractionDataset:
    """Users, items, unique (user, item) interactions, per-user group labels.

    ``pairs`` is an (n, 2) int64 array sorted by (user, item); ``demographic``
    is indexed by user over the full user space [0, n_users), so subset views
    share it with their parent.
    """

    n_users: int
    n_items: int
    pairs: np.ndarray
    demographic: np.ndarray
    provenance: str = "synthetic"

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("pairs must have shape (n, 2)")
        if len(pairs) == 0:
            raise ValueError("no interactions")
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs = pairs[order]
        dup = (np.diff(pairs[:, 0]) == 0) & (np.diff(pairs[:, 1]) == 0)
        if dup.any():
            u, i = pairs[1:][dup][0]
            raise ValueError(f"duplicate interaction (user {u}, item {i})")
        if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= self.n_users:
            raise ValueError("user index out of bounds")
        if pairs[:, 1].min() < 0 or pairs[:, 1].max() >= self.n_items:
            raise ValueError("item index out of bounds")
        demo = np.asarray(self.demographic, dtype=np.int8)
        if demo.shape != (self.n_users,):
            raise ValueError("demographic must have one label per user")
        if not np.isin(demo, (0, 1)).all():
            raise ValueError("demographic labels must be 0 or 1")
        object.__setattr__(self, "pairs", _frozen(pairs))
        object.__setattr__(self, "demographic", _frozen(demo))

    @classmethod
    def create(cls, n_users, n_items, pairs, demographic, provenance="synthetic"):
        """Build a full dataset, canonicalizing labels so group 1 is smaller."""
        ds = cls(n_users, n_items, pairs, demographic, provenance)
        labels = ds.demographic[ds.users]
        if np.count_nonzero(labels == 1) > np.count_nonzero(labels == 0):
            flipped = (1 - ds.demographic).astype(np.int8)
            ds = cls(n_users, n_items, ds.pairs, flipped, provenance)
        return ds

    @cached_property
    def users(self) -> np.ndarray:
        """Sorted user indices present in this dataset (each has >= 1 pair)."""
        return _frozen(np.unique(self.pairs[:, 0]))

    @cached_property
    def _user_slices(self) -> dict[int, np.ndarray]:
        users, starts = np.unique(self.pairs[:, 0], return_index=True)
        bounds = np.append(starts, len(self.pairs))
        items = self.pairs[:, 1]
        return {
            int(u): _frozen(items[bounds[j]:bounds[j + 1]])
            for j, u in enumerate(users)
        }

    def user_items(self, user: int) -> np.ndarray:
        """Sorted items the user interacted with; empty if user absent."""
        return self._user_slices.get(int(user), np.empty(0, dtype=np.int64))

    def item_counts(self) -> np.ndarray:
        """Interaction count per item over the whole item space."""
        return np.bincount(self.pairs[:, 1], minlength=self.n_items)

    def group_item_counts(self, group: int) -> np.ndarray:
        """Interaction count per item restricted to one demographic group."""
        mask = self.demographic[self.pairs[:, 0]] == group
        return np.bincount(self.pairs[mask, 1], minlength=self.n_items)

    def subset_users(self, users) -> "InteractionDataset":
        """View of this dataset restricted to the given users (labels kept)."""
        keep = np.isin(self.pairs[:, 0], np.asarray(users, dtype=np.int64))
        return InteractionDataset(
            self.n_users, self.n_items, self.pairs[keep],
            self.demographic, self.provenance,
        )

    def __eq__(self, other):
        if not isinstance(other, InteractionDataset):
            return NotImplemented
        return (
            self.n_users == other.n_users
            and self.n_items == other.n_items
            and self.pairs.shape == other.pairs.shape
            and np.array_equal(self.pairs, other.pairs)
            and np.array_equal(self.demographic, other.demographic)
        )

    def __len__(self):
        return len(self.pairs)


def minority_ratio(dataset: InteractionDataset) -> float:
    """Fraction of this dataset's users carrying the minority label (1)."""
    labels = dataset.demographic[dataset.users]
    if len(labels) == 0:
        raise ValueError("dataset has no users")
    return float(np.count_nonzero(labels == 1) / len(labels))


@dataclass(frozen=True, eq=False)
class RecommendationTable:
    """Per-user ranked top-k item lists; row r of ``items`` is users[r]'s list,
    column order is rank order (column 0 = rank 1)."""

    k: int
    users: np.ndarray
    items: np.ndarray

    def __post_init__(self):
        users = np.asarray(self.users, dtype=np.int64)
        items = np.asarray(self.items, dtype=np.int64)
        if items.shape != (len(users), self.k):
            raise ValueError(f"items must have shape (n_users, {self.k})")
        if len(np.unique(users)) != len(users):
            raise ValueError("duplicate user in recommendation table")
        if self.k > 1 and (np.sort(items, axis=1)[:, 1:] == np.sort(items, axis=1)[:, :-1]).any():
            raise ValueError("a user's list contains duplicate items")
        order = np.argsort(users)
        object.__setattr__(self, "users", _frozen(users[order]))
        object.__setattr__(self, "items", _frozen(items[order]))

    @cached_property
    def _row_of(self) -> dict[int, int]:
        return {int(u): r for r, u in enumerate(self.users)}

    def for_user(self, user: int) -> np.ndarray:
        return self.items[self._row_of[int(user)]]

    def validate_against(self, dataset: InteractionDataset) -> None:
        """Assert no user was recommended an item from their own history."""
        for r, u in enumerate(self.users):
            hist = dataset.user_items(int(u))
            if np.isin(self.items[r], hist).any():
                raise ValueError(f"user {u} recommended an already-known item")

    def __eq__(self, other):
        if not isinstance(other, RecommendationTable):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.items, other.items)
        )


@dataclass(frozen=True)
class DatasetSplit:
    """User-disjoint train/test partition sharing the item index space."""

    train: InteractionDataset
    test: InteractionDataset
    test_ratio: float


def split_by_user(dataset: InteractionDataset, test_ratio: float,
                  seed: SeedSpec | int) -> DatasetSplit:
    """Split users into disjoint train/test sets, stratified by group.

    Within each demographic group, round(test_ratio * group size) users go to
    test (clamped so both splits keep at least one user per group). The same
    seed always yields the same split.
    """
    if not 0.0 < test_ratio < 1.0:
        raise ValueError("test_ratio must be in (0, 1)")
    seed = as_seed(seed).child("split-by-user")
    labels = dataset.demographic[dataset.users]
    test_users = []
    for group in (0, 1):
        members = dataset.users[labels == group]
        if len(members) < 2:
            raise ValueError(
                f"demographic group {group} has {len(members)} user(s); "
                "need at least 2 to split"
            )
        n_test = int(np.floor(test_ratio * len(members) + 0.5))
        n_test = min(max(n_test, 1), len(members) - 1)
        perm = seed.child(group).rng().permutation(len(members))
        test_users.append(members[perm[:n_test]])
    test_set = np.sort(np.concatenate(test_users))
    train_set = np.setdiff1d(dataset.users, test_set)
    return DatasetSplit(
        train=dataset.subset_users(train_set),
        test=dataset.subset_users(test_set),
        test_ratio=test_ratio,
    )
