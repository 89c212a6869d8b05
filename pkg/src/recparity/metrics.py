"""Output- and representation-level demographic leakage measures.

All AUC values are reported *unfolded* (no max(a, 1-a)): values below 0.5 are
meaningful, e.g. for the popularity baseline, whose recommendations can skew
toward the group that has NOT consumed an item. The positive class is always
the minority group (label 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.optimize

from .dataset import InteractionDataset, RecommendationTable, minority_ratio
from .seeding import as_seed


def auc_from_scores(scores, labels, fold: bool = False) -> float:
    """Mann-Whitney AUC of scores against binary labels (1 = positive).

    Equals the fraction of (positive, negative) pairs where the positive
    example scores higher, ties counting 0.5. ``fold=True`` maps the value to
    max(a, 1 - a).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D arrays")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    # average ranks over ties; sums of half-integer ranks are exact in floats,
    # so this matches the brute-force pairwise count bit-for-bit
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    value = (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return float(max(value, 1.0 - value)) if fold else float(value)


@dataclass(frozen=True)
class DemographicRatioTable:
    """Per-item minority interaction share, computed on training interactions.

    Items with no training interaction carry the dataset minority ratio and
    are flagged in ``fallback``.
    """

    ratio: np.ndarray
    count: np.ndarray
    fallback: np.ndarray
    fallback_ratio: float

    @classmethod
    def from_dataset(cls, train: InteractionDataset) -> "DemographicRatioTable":
        total = train.item_counts()
        by_minority = train.group_item_counts(1)
        fallback_ratio = minority_ratio(train)
        fallback = total == 0
        ratio = np.divide(by_minority, total, where=~fallback,
                          out=np.full(train.n_items, fallback_ratio))
        return cls(ratio=ratio, count=total, fallback=fallback,
                   fallback_ratio=fallback_ratio)


def demographic_ratio(train: InteractionDataset, item: int) -> float:
    """Minority share of one item's training interactions (Eq.-style count
    ratio); dataset minority ratio if the item was never interacted with."""
    return float(DemographicRatioTable.from_dataset(train).ratio[item])


def _recs_labels(recs: RecommendationTable, labels) -> np.ndarray:
    labels = np.asarray(labels)
    got = labels[recs.users]
    if not np.isin(got, (0, 1)).all():
        raise ValueError("labels must be 0/1 per user")
    return got


def demographic_ratio_auc(train: InteractionDataset, recs: RecommendationTable,
                          labels, fold: bool = False) -> float:
    """AUC of per-user median recommended-item demographic ratios against the
    users' group labels (minority positive)."""
    table = DemographicRatioTable.from_dataset(train)
    scores = np.median(table.ratio[recs.items], axis=1)
    return auc_from_scores(scores, _recs_labels(recs, labels), fold=fold)


def item_ratio(recs: RecommendationTable, labels, min_rec_count: int = 5,
               reference_ratio: float | None = None) -> float:
    """Mean absolute gap between each item's minority-recommendation fraction
    and the population minority fraction, over items recommended to at least
    ``min_rec_count`` users."""
    user_labels = _recs_labels(recs, labels)
    n_items = int(recs.items.max()) + 1
    total = np.bincount(recs.items.ravel(), minlength=n_items)
    minority = np.bincount(recs.items[user_labels == 1].ravel(), minlength=n_items)
    qualify = total >= min_rec_count
    if not qualify.any():
        raise ValueError(
            f"no item was recommended to at least {min_rec_count} users"
        )
    if reference_ratio is None:
        reference_ratio = float(np.mean(user_labels == 1))
    frac = minority[qualify] / total[qualify]
    return float(np.mean(np.abs(frac - reference_ratio)))


@dataclass(frozen=True)
class GroupAggregateRanking:
    """A demographic group's items ranked by how often they occur in the
    group's top-k lists (count desc, item index asc)."""

    group: int
    items: np.ndarray
    counts: np.ndarray


def aggregate_group_ranking(recs: RecommendationTable, labels, group: int,
                            k: int) -> GroupAggregateRanking:
    user_labels = _recs_labels(recs, labels)
    member_rows = np.flatnonzero(user_labels == group)
    if len(member_rows) == 0:
        raise ValueError(f"group {group} has no users in the table")
    occurrences = np.bincount(recs.items[member_rows].ravel())
    present = np.flatnonzero(occurrences)
    order = np.lexsort((present, -occurrences[present]))
    top = present[order[:k]]
    return GroupAggregateRanking(group=group, items=top,
                                 counts=occurrences[top])


def kendall_tau_extended(list_a, list_b) -> float:
    """Kendall-style correlation for top-k lists over possibly different item
    sets: 1 for identical lists, -1 for disjoint ones.

    A pair of items from the union is concordant when both items appear in
    both lists in the same relative order; it is discordant when they appear
    in opposite order or when either item is missing from either list.
    """
    list_a, list_b = list(list_a), list(list_b)
    if not list_a or not list_b:
        raise ValueError("lists must be nonempty")
    for name, lst in (("a", list_a), ("b", list_b)):
        if len(set(lst)) != len(lst):
            raise ValueError(f"list {name} contains duplicate items")
    pos_a = {item: r for r, item in enumerate(list_a)}
    pos_b = {item: r for r, item in enumerate(list_b)}
    union = sorted(set(list_a) | set(list_b), key=repr)
    if len(union) < 2:
        return 1.0
    concordant = discordant = 0
    for i in range(len(union)):
        for j in range(i + 1, len(union)):
            x, y = union[i], union[j]
            if x in pos_a and y in pos_a and x in pos_b and y in pos_b:
                same = (pos_a[x] - pos_a[y] > 0) == (pos_b[x] - pos_b[y] > 0)
                if same:
                    concordant += 1
                else:
                    discordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / comb(len(union), 2)


def _logistic_fit(x: np.ndarray, y: np.ndarray, l2: float,
                  max_iter: int = 500) -> np.ndarray:
    """L2-regularized logistic regression via L-BFGS; bias unpenalized."""
    n, d = x.shape
    xb = np.hstack([x, np.ones((n, 1))])

    def objective(w):
        z = xb @ w
        # log(1 + exp(-|z|)) form keeps the loss finite for extreme z
        loss = np.mean(np.logaddexp(0.0, z) - y * z)
        p = 1.0 / (1.0 + np.exp(-z))
        grad = xb.T @ (p - y) / n
        loss += 0.5 * l2 * np.dot(w[:d], w[:d])
        grad[:d] += l2 * w[:d]
        return loss, grad

    res = scipy.optimize.minimize(
        objective, np.zeros(d + 1), jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter},
    )
    if not res.success and "ITERATIONS" in str(res.message).upper():
        raise RuntimeError(
            f"logistic probe failed to converge after {max_iter} iterations: "
            f"{res.message}"
        )
    return res.x


def _log_loss(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    z = np.hstack([x, np.ones((len(x), 1))]) @ w
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def representation_auc(reps_train, labels_train, reps_test, labels_test,
                       l2_grid=(1e-3, 1e-2, 1e-1, 1.0, 10.0),
                       n_probe_seeds: int = 5, seed=0,
                       fold: bool = False) -> float:
    """AUC of a logistic probe predicting the group from user representations.

    The probe is trained on training-user representations with the L2
    strength chosen by held-out log-loss on a 20% validation slice, then
    scored on test users; the reported value averages ``n_probe_seeds``
    validation-slice draws.
    """
    x_tr = np.asarray(reps_train, dtype=np.float64)
    y_tr = np.asarray(labels_train, dtype=np.float64)
    x_te = np.asarray(reps_test, dtype=np.float64)
    y_te = np.asarray(labels_test)
    for name, y in (("train", y_tr), ("test", y_te)):
        if len(np.unique(y)) < 2:
            raise ValueError(f"{name} labels contain a single class")
    mean, std = x_tr.mean(axis=0), x_tr.std(axis=0)
    std[std == 0] = 1.0
    x_tr = (x_tr - mean) / std
    x_te = (x_te - mean) / std

    seed = as_seed(seed).child("representation-probe")
    values = []
    for probe in range(n_probe_seeds):
        rng = seed.child(probe).rng()
        val_idx = []
        for cls in (0, 1):
            members = np.flatnonzero(y_tr == cls)
            n_val = max(1, int(round(0.2 * len(members))))
            val_idx.append(rng.permutation(members)[:n_val])
        val = np.concatenate(val_idx)
        fit = np.setdiff1d(np.arange(len(y_tr)), val)
        best_l2, best_loss = None, np.inf
        for l2 in l2_grid:
            w = _logistic_fit(x_tr[fit], y_tr[fit], l2)
            loss = _log_loss(x_tr[val], y_tr[val], w)
            if loss < best_loss:
                best_l2, best_loss = l2, loss
        w = _logistic_fit(x_tr, y_tr, best_l2)
        scores = np.hstack([x_te, np.ones((len(x_te), 1))]) @ w
        values.append(auc_from_scores(scores, y_te, fold=fold))
    return float(np.mean(values))


_METRIC_RANGES = {
    "auc": (0.0, 1.0),
    "demographic_ratio_auc": (0.0, 1.0),
    "neural_auc": (0.0, 1.0),
    "representation_auc": (0.0, 1.0),
    "item_ratio": (0.0, 1.0),
    "kendall_tau": (-1.0, 1.0),
}


@dataclass(frozen=True)
class MetricReport:
    """One measurement with enough metadata to aggregate and replot."""

    dataset_id: str
    model: str
    metric: str
    k: int
    seed: int
    replication: int
    value: float

    def __post_init__(self):
        lo, hi = _METRIC_RANGES.get(self.metric, (-np.inf, np.inf))
        if np.isfinite(self.value) and not lo <= self.value <= hi:
            raise ValueError(
                f"{self.metric} value {self.value} outside [{lo}, {hi}]"
            )


REPORT_HEADER = "dataset_id,model,metric,k,seed,replication,value"


def write_report(reports, path) -> None:
    """Write measurements as CSV rows under the report header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(REPORT_HEADER + "\n")
        for r in reports:
            fh.write(
                f"{r.dataset_id},{r.model},{r.metric},{r.k},{r.seed},"
                f"{r.replication},{r.value!r}\n"
            )
