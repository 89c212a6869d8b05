"""MovieLens-1M-style ingestion: '::'-separated ratings and users files,
implicit binarization of ratings, and binary demographic extraction for
gender or age.

Age is binarized at the age-code boundary whose minority fraction comes
closest to a target share (the observed minority share of the age attribute
in MovieLens-1M); the chosen boundary is reported, never hard-coded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import InteractionDataset, minority_ratio

AGE_MINORITY_TARGET = 0.236


@dataclass(frozen=True)
class IngestResult:
    dataset: InteractionDataset
    attribute: str
    minority_ratio: float
    rule: dict
    user_idmap: dict
    item_idmap: dict


def _split_rows(path, n_fields, sep="::"):
    rows = []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(sep)
            if len(fields) != n_fields:
                raise ValueError(
                    f"{path}:{lineno}: expected {n_fields} '{sep}'-separated "
                    f"fields, got {len(fields)}"
                )
            rows.append(fields)
    return rows


def ingest_movielens(ratings_path, users_path, attribute: str,
                     min_rating: float | None = None) -> IngestResult:
    """Build an InteractionDataset from MovieLens-1M ratings.dat/users.dat.

    Every rating (optionally only ratings >= ``min_rating``) becomes one
    implicit interaction. ``attribute`` selects which user column becomes the
    binary group label: 'gender' maps the rarer gender to the minority;
    'age' thresholds the ordinal age codes.
    """
    if attribute not in ("gender", "age"):
        raise ValueError("attribute must be 'gender' or 'age'")
    rating_rows = _split_rows(ratings_path, 4)
    kept = []
    for user, movie, rating, _ts in rating_rows:
        if min_rating is not None and float(rating) < min_rating:
            continue
        kept.append((user, movie))
    if not kept:
        raise ValueError(f"{ratings_path}: no interactions after filtering")
    kept = sorted(set(kept), key=lambda p: (int(p[0]), int(p[1])))

    user_ids = sorted({u for u, _ in kept}, key=int)
    item_ids = sorted({m for _, m in kept}, key=int)
    user_map = {u: j for j, u in enumerate(user_ids)}
    item_map = {m: j for j, m in enumerate(item_ids)}
    pairs = np.array([(user_map[u], item_map[m]) for u, m in kept],
                     dtype=np.int64)

    gender = {}
    age = {}
    for user, gen, age_code, _occ, _zip in _split_rows(users_path, 5):
        gender[user] = gen
        age[user] = int(age_code)
    missing = [u for u in user_ids if u not in gender]
    if missing:
        raise ValueError(
            f"{users_path}: no demographics for user(s) "
            f"{', '.join(missing[:5])}"
        )

    if attribute == "gender":
        values = sorted({gender[u] for u in user_ids})
        if len(values) != 2:
            raise ValueError(
                f"{users_path}: gender must take exactly 2 values, got {values}"
            )
        labels = np.array([int(gender[u] == values[1]) for u in user_ids],
                          dtype=np.int8)
        rule = {"attribute": "gender", "label_1_value": values[1]}
    else:
        codes = np.array([age[u] for u in user_ids])
        distinct = np.unique(codes)
        if len(distinct) < 2:
            raise ValueError(f"{users_path}: age takes a single value")
        best_thr, best_gap = None, np.inf
        for thr in distinct[1:]:
            frac_high = float(np.mean(codes >= thr))
            gap = abs(min(frac_high, 1.0 - frac_high) - AGE_MINORITY_TARGET)
            if gap < best_gap:
                best_thr, best_gap = int(thr), gap
        high = codes >= best_thr
        minority_is_high = high.mean() <= 0.5
        labels = (high if minority_is_high else ~high).astype(np.int8)
        rule = {
            "attribute": "age",
            "threshold": best_thr,
            "minority_side": ">=" if minority_is_high else "<",
        }

    dataset = InteractionDataset.create(
        len(user_ids), len(item_ids), pairs, labels, provenance="ingested"
    )
    # canonicalization may have flipped the labels; report what label 1 means
    if attribute == "gender":
        flipped = not np.array_equal(dataset.demographic, labels)
        rule["label_1_value"] = values[0] if flipped else values[1]
    result_rule = dict(rule)
    if min_rating is not None:
        result_rule["min_rating"] = min_rating
    return IngestResult(
        dataset=dataset,
        attribute=attribute,
        minority_ratio=minority_ratio(dataset),
        rule=result_rule,
        user_idmap=user_map,
        item_idmap=item_map,
    )

