"""Synthetic implicit-feedback dataset generation with controllable
demographic structure.

Users and items live on a shared F-dimensional feature simplex. Each user
category (mapped to a demographic group) and each item category owns a
contiguous block of features; Dirichlet concentration is ``in_category_alpha``
on the owned block and ``epsilon`` elsewhere, so ``epsilon`` directly controls
how much the groups' preferences overlap (near 0: disjoint, 1: identical).

Candidate items are drawn per (user, item) pair as

    Bernoulli( t ** (delta * (1 - normalized_density)) )

where ``t`` is the user's max-normalized utility for the item and
``normalized_density`` is the long-tail density at the item's popularity
score, rescaled so the densest item has value 1 (and hence is a candidate for
everyone). Final interaction counts are forced back onto a long tail by
sampling ``floor(LongTail(beta)) + tau`` items uniformly without replacement
from each user's candidate set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import InteractionDataset
from .seeding import SeedSpec, as_seed


@dataclass(frozen=True)
class LongTailParams:
    """Parameters of a long-tail distribution (log-normal is the only
    implemented family): mu/sigma are the mean/std of the log values."""

    mu: float
    sigma: float
    family: str = "log-normal"

    def __post_init__(self):
        if self.family != "log-normal":
            raise ValueError(f"unsupported long-tail family {self.family!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if (x <= 0).any():
            raise ValueError("log-normal density is defined for positive values")
        z = (np.log(x) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (x * self.sigma * math.sqrt(2.0 * math.pi))

    def median(self) -> float:
        return math.exp(self.mu)


def fit_log_normal(samples) -> LongTailParams:
    """Closed-form ML fit: mu/sigma are the mean and (population) std of the
    log samples. Needs >= 2 positive, not-all-equal samples."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 2:
        raise ValueError("need at least 2 samples to fit")
    if (samples <= 0).any():
        raise ValueError("samples must be positive")
    logs = np.log(samples)
    sigma = float(logs.std())
    if sigma == 0.0:
        raise ValueError("degenerate sample: zero variance")
    return LongTailParams(mu=float(logs.mean()), sigma=sigma)


def sample_long_tail(params: LongTailParams, n: int,
                     seed: SeedSpec | int) -> np.ndarray:
    """n i.i.d. positive draws from the long-tail distribution."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_seed(seed).rng()
    return np.exp(rng.normal(params.mu, params.sigma, size=n))


# Shipped long-tail defaults, MovieLens-1M-like in scale (user counts with a
# median near 75). The item-popularity sigma is deliberately heavier than a
# raw MovieLens count fit: the density-mode candidacy boost must stay
# confined to a sub-percent sliver of the catalog, or mode items become
# shared blockbusters for every user and erase the group structure at small
# epsilon. Both are plain config fields, never assumptions; use
# fit_log_normal on real counts to override them.
DEFAULT_ITEM_POP = LongTailParams(mu=4.8, sigma=3.5)
DEFAULT_USER_COUNT = LongTailParams(mu=4.3, sigma=0.6)


@dataclass(frozen=True)
class GeneratorConfig:
    """All generator knobs; defaults give 4000 users / 4000 items with a 30%
    minority group."""

    n_users: int = 4000
    n_items: int = 4000
    n_features: int = 8
    n_user_categories: int = 2
    n_item_categories: int = 2
    epsilon: float = 0.5
    delta: float = 6.0
    item_pop_params: LongTailParams = field(default_factory=lambda: DEFAULT_ITEM_POP)
    user_count_params: LongTailParams = field(default_factory=lambda: DEFAULT_USER_COUNT)
    tau: int = 5
    minority_ratio: float = 0.3
    in_category_alpha: float = 1.0

    def __post_init__(self):
        if self.n_users < 2 or self.n_items < 1:
            raise ValueError("need at least 2 users and 1 item")
        for cats in (self.n_user_categories, self.n_item_categories):
            if cats < 1 or self.n_features % cats != 0:
                raise ValueError(
                    f"n_features={self.n_features} must be divisible by the "
                    f"category count {cats}"
                )
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must be in (0, 1]")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if not 0.0 < self.minority_ratio <= 0.5:
            raise ValueError("minority_ratio must be in (0, 0.5]")
        if not self.in_category_alpha > 0:
            raise ValueError("in_category_alpha must be > 0")

    def to_dict(self) -> dict:
        d = {
            f: getattr(self, f)
            for f in self.__dataclass_fields__
            if f not in ("item_pop_params", "user_count_params")
        }
        d["item_pop_params"] = {
            "mu": self.item_pop_params.mu, "sigma": self.item_pop_params.sigma
        }
        d["user_count_params"] = {
            "mu": self.user_count_params.mu, "sigma": self.user_count_params.sigma
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = dict(d)
        for key in ("item_pop_params", "user_count_params"):
            if key in d and isinstance(d[key], dict):
                d[key] = LongTailParams(**d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown generator config field(s): {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class LatentProfiles:
    """Per-user and per-item points on the feature simplex plus category
    assignments (user categories double as demographic groups)."""

    user_vectors: np.ndarray
    item_vectors: np.ndarray
    user_category: np.ndarray
    item_category: np.ndarray

    @property
    def demographic(self) -> np.ndarray:
        return (self.user_category == 1).astype(np.int8)


@dataclass(frozen=True)
class ItemPopularity:
    """Popularity scores and their density rescaled so the max is 1."""

    pop: np.ndarray
    normalized_density: np.ndarray

    @classmethod
    def sample(cls, params: LongTailParams, n_items: int,
               seed: SeedSpec | int) -> "ItemPopularity":
        pop = sample_long_tail(params, n_items, seed)
        density = params.pdf(pop)
        return cls(pop=pop, normalized_density=density / density.max())


@dataclass(frozen=True)
class CandidateSets:
    """Per-user candidate item arrays (index-aligned with users)."""

    n_items: int
    sets: tuple

    def __len__(self):
        return len(self.sets)


def _category_block(category: np.ndarray, n_categories: int, n_features: int,
                    in_alpha: float, epsilon: float) -> np.ndarray:
    block = n_features // n_categories
    conc = np.full((len(category), n_features), epsilon, dtype=np.float64)
    for c in range(n_categories):
        rows = category == c
        conc[np.ix_(rows, range(c * block, (c + 1) * block))] = in_alpha
    return conc


def _dirichlet_rows(concentration: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    gam = rng.gamma(shape=concentration)
    return gam / gam.sum(axis=1, keepdims=True)


def sample_latent_profiles(config: GeneratorConfig,
                           seed: SeedSpec | int) -> LatentProfiles:
    """Assign categories and draw user/item simplex vectors.

    Category 1 is drawn with probability ``minority_ratio`` (remaining mass
    split evenly over the other categories) and then canonicalized so that
    category/group 1 is the weakly smaller of the two demographic groups.
    """
    seed = as_seed(seed)
    rng_groups = seed.child("user-groups").rng()
    if config.n_user_categories == 2:
        user_category = (
            rng_groups.random(config.n_users) < config.minority_ratio
        ).astype(np.int64)
    else:
        others = [c for c in range(config.n_user_categories) if c != 1]
        p = np.full(config.n_user_categories,
                    (1.0 - config.minority_ratio) / len(others))
        p[1] = config.minority_ratio
        user_category = rng_groups.choice(config.n_user_categories,
                                          size=config.n_users, p=p)
    if np.count_nonzero(user_category == 1) > np.count_nonzero(user_category == 0):
        swap = user_category.copy()
        swap[user_category == 0] = 1
        swap[user_category == 1] = 0
        user_category = swap

    item_category = seed.child("item-categories").rng().integers(
        0, config.n_item_categories, size=config.n_items
    )
    user_conc = _category_block(user_category, config.n_user_categories,
                                config.n_features, config.in_category_alpha,
                                config.epsilon)
    item_conc = _category_block(item_category, config.n_item_categories,
                                config.n_features, config.in_category_alpha,
                                config.epsilon)
    return LatentProfiles(
        user_vectors=_dirichlet_rows(user_conc, seed.child("user-vectors").rng()),
        item_vectors=_dirichlet_rows(item_conc, seed.child("item-vectors").rng()),
        user_category=user_category,
        item_category=item_category,
    )


def utility(user_vector, item_vector, per_user_normalizer: float) -> float:
    """Simplex dot product rescaled by the user's best raw dot product, so the
    user's best item scores exactly 1."""
    raw = float(np.dot(user_vector, item_vector))
    return raw / per_user_normalizer


def utility_matrix(profiles: LatentProfiles) -> np.ndarray:
    """(n_users, n_items) utilities, max-normalized per user row."""
    raw = profiles.user_vectors @ profiles.item_vectors.T
    return raw / raw.max(axis=1, keepdims=True)


def generate_candidates(profiles: LatentProfiles, popularity: ItemPopularity,
                        delta: float, seed: SeedSpec | int) -> CandidateSets:
    """Independent Bernoulli(t ** (delta * (1 - normalized_density))) per pair.

    Each user draws from their own derived stream, so per-user parallelism
    cannot change the result.
    """
    nd = np.asarray(popularity.normalized_density, dtype=np.float64)
    if (nd < 0).any() or (nd > 1).any():
        raise ValueError("normalized_density must lie in [0, 1]")
    seed = as_seed(seed).child("candidates")
    exponent = delta * (1.0 - nd)
    t = utility_matrix(profiles)
    sets = []
    for u in range(t.shape[0]):
        probs = t[u] ** exponent
        draws = seed.child(u).rng().random(t.shape[1])
        sets.append(np.flatnonzero(draws < probs).astype(np.int64))
    return CandidateSets(n_items=t.shape[1], sets=tuple(sets))


def sample_interactions(candidates: CandidateSets,
                        user_count_params: LongTailParams, tau: int,
                        seed: SeedSpec | int,
                        demographic: np.ndarray) -> InteractionDataset:
    """Pick floor(LongTail(beta)) + tau items per user, uniformly without
    replacement from the user's candidates (capped at the candidate count)."""
    seed = as_seed(seed).child("interactions")
    rows = []
    for u, cand in enumerate(candidates.sets):
        if len(cand) == 0:
            raise ValueError(
                f"user {u} has an empty candidate set; regenerate with a "
                "larger delta or epsilon"
            )
        rng = seed.child(u).rng()
        extra = int(np.exp(rng.normal(user_count_params.mu,
                                      user_count_params.sigma)))
        n_u = min(extra + tau, len(cand))
        chosen = rng.choice(cand, size=n_u, replace=False)
        rows.append(np.column_stack([np.full(n_u, u, dtype=np.int64), chosen]))
    pairs = np.concatenate(rows)
    return InteractionDataset.create(
        n_users=len(candidates.sets),
        n_items=candidates.n_items,
        pairs=pairs,
        demographic=demographic,
        provenance="synthetic",
    )


def generate_dataset(config: GeneratorConfig,
                     seed: SeedSpec | int) -> InteractionDataset:
    """End-to-end generation: profiles -> popularity -> candidates -> picks."""
    seed = as_seed(seed)
    profiles = sample_latent_profiles(config, seed)
    popularity = ItemPopularity.sample(config.item_pop_params, config.n_items,
                                       seed.child("item-popularity"))
    candidates = generate_candidates(profiles, popularity, config.delta, seed)
    return sample_interactions(candidates, config.user_count_params,
                               config.tau, seed, profiles.demographic)


def with_overrides(config: GeneratorConfig, **kwargs) -> GeneratorConfig:
    """Copy the config with some fields replaced (sweep plumbing)."""
    return replace(config, **kwargs)
