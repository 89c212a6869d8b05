"""TSV serialization for datasets, recommendation tables, and id maps.

File formats (UTF-8, no headers):

* interactions.tsv     ``user_id<TAB>item_id`` per interaction
* demographics.tsv     ``user_id<TAB>group_label`` per user, label in {0,1}
* recommendations.tsv  ``user_id<TAB>rank<TAB>item_id`` with 1-based ranks
* idmap.tsv            ``external_id<TAB>dense_index``, one file per entity kind

External ids are re-indexed to dense integers on read (numeric sort when every
id parses as an integer, lexicographic otherwise), so reading a file written
by :func:`write_dataset` is the identity mapping.
"""

from __future__ import annotations

import os

import numpy as np

from .dataset import InteractionDataset, RecommendationTable


def _read_rows(path, n_fields):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != n_fields:
                raise ValueError(
                    f"{path}:{lineno}: expected {n_fields} tab-separated "
                    f"fields, got {len(fields)}"
                )
            rows.append(fields)
    return rows


def _dense_map(ids) -> dict[str, int]:
    uniq = sorted(set(ids))
    try:
        uniq.sort(key=int)
    except ValueError:
        pass  # non-numeric ids keep lexicographic order
    return {ext: dense for dense, ext in enumerate(uniq)}


def write_idmap(idmap: dict[str, int], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ext, dense in sorted(idmap.items(), key=lambda kv: kv[1]):
            fh.write(f"{ext}\t{dense}\n")


def read_idmap(path) -> dict[str, int]:
    return {ext: int(dense) for ext, dense in _read_rows(path, 2)}


def load_idmaps(idmap_dir):
    """Read the user/item id maps persisted next to a dataset."""
    user_path = os.path.join(idmap_dir, "user_idmap.tsv")
    item_path = os.path.join(idmap_dir, "item_idmap.tsv")
    for path in (user_path, item_path):
        if not os.path.exists(path):
            raise ValueError(f"{idmap_dir}: missing id map {path}")
    return read_idmap(user_path), read_idmap(item_path)


def write_idmaps(user_map, item_map, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_idmap(user_map, os.path.join(out_dir, "user_idmap.tsv"))
    write_idmap(item_map, os.path.join(out_dir, "item_idmap.tsv"))


def discover_idmaps(*near_paths):
    """Return id maps stored next to any of the given files, if present.

    Split and generate outputs carry their id maps alongside the TSVs; tools
    reading a train/test pair need those maps to agree on one index space
    (each file alone only mentions the ids it contains).
    """
    for path in near_paths:
        directory = os.path.dirname(os.path.abspath(path))
        if os.path.exists(os.path.join(directory, "user_idmap.tsv")) and \
                os.path.exists(os.path.join(directory, "item_idmap.tsv")):
            return load_idmaps(directory)
    return None, None


def read_dataset(interaction_path, demographic_path, user_map=None,
                 item_map=None) -> InteractionDataset:
    """Load a dataset from its interaction and demographic TSV files.

    Raises on malformed rows (with the offending line number), on demographic
    rows for users that never interact, and on users with no label. Without
    explicit id maps, external ids are densified from this file pair alone;
    pass the maps (see :func:`discover_idmaps`) when several files must share
    one index space, e.g. the train/test halves of a split.
    """
    inter_rows = _read_rows(interaction_path, 2)
    if not inter_rows:
        raise ValueError(f"{interaction_path}: no interactions")
    if (user_map is None) != (item_map is None):
        raise ValueError("pass both id maps or neither")
    if user_map is None:
        user_map = _dense_map(r[0] for r in inter_rows)
        item_map = _dense_map(r[1] for r in inter_rows)
    for u, i in inter_rows:
        if u not in user_map:
            raise ValueError(f"{interaction_path}: user {u!r} not in id map")
        if i not in item_map:
            raise ValueError(f"{interaction_path}: item {i!r} not in id map")

    demo_rows = _read_rows(demographic_path, 2)
    demographic = np.zeros(len(user_map), dtype=np.int8)
    labeled = np.zeros(len(user_map), dtype=bool)
    for ext_user, label in demo_rows:
        if ext_user not in user_map:
            raise ValueError(
                f"{demographic_path}: unknown user {ext_user!r} "
                "not present in interactions"
            )
        if label not in ("0", "1"):
            raise ValueError(
                f"{demographic_path}: group label for user {ext_user!r} "
                f"must be 0 or 1, got {label!r}"
            )
        demographic[user_map[ext_user]] = int(label)
        labeled[user_map[ext_user]] = True
    present = sorted({u for u, _ in inter_rows})
    unlabeled = [u for u in present if not labeled[user_map[u]]]
    if unlabeled:
        raise ValueError(
            f"{demographic_path}: no demographic label for user(s) "
            f"{', '.join(unlabeled[:5])}"
        )

    pairs = np.array(
        [(user_map[u], item_map[i]) for u, i in inter_rows], dtype=np.int64
    )
    return InteractionDataset.create(
        len(user_map), len(item_map), pairs, demographic, provenance="ingested"
    )


def write_dataset(dataset: InteractionDataset, interaction_path,
                  demographic_path) -> None:
    """Write the dataset's TSV pair; inverse of :func:`read_dataset`."""
    with open(interaction_path, "w", encoding="utf-8") as fh:
        for u, i in dataset.pairs:
            fh.write(f"{u}\t{i}\n")
    with open(demographic_path, "w", encoding="utf-8") as fh:
        for u in dataset.users:
            fh.write(f"{u}\t{dataset.demographic[u]}\n")


def dataset_maps(interaction_path):
    """The dense user/item maps a lone TSV would densify to."""
    inter_rows = _read_rows(interaction_path, 2)
    if not inter_rows:
        raise ValueError(f"{interaction_path}: no interactions")
    return (_dense_map(r[0] for r in inter_rows),
            _dense_map(r[1] for r in inter_rows))


def read_recommendations(path, user_map=None,
                         item_map=None) -> RecommendationTable:
    rows = _read_rows(path, 3)
    if not rows:
        raise ValueError(f"{path}: no recommendations")
    if (user_map is None) != (item_map is None):
        raise ValueError("pass both id maps or neither")

    def resolve(ext, mapping, kind):
        if mapping is None:
            return int(ext)
        if ext not in mapping:
            raise ValueError(f"{path}: {kind} {ext!r} not in id map")
        return mapping[ext]

    by_user: dict[int, dict[int, int]] = {}
    for user_s, rank_s, item_s in rows:
        user = resolve(user_s, user_map, "user")
        item = resolve(item_s, item_map, "item")
        rank = int(rank_s)
        by_user.setdefault(user, {})[rank] = item
    ks = {len(v) for v in by_user.values()}
    if len(ks) != 1:
        raise ValueError(f"{path}: users have differing list lengths {sorted(ks)}")
    k = ks.pop()
    users = np.array(sorted(by_user), dtype=np.int64)
    items = np.empty((len(users), k), dtype=np.int64)
    for r, u in enumerate(users):
        ranks = by_user[int(u)]
        if sorted(ranks) != list(range(1, k + 1)):
            raise ValueError(f"{path}: user {u} has non-contiguous ranks")
        items[r] = [ranks[j] for j in range(1, k + 1)]
    return RecommendationTable(k=k, users=users, items=items)


def write_recommendations(table: RecommendationTable, path, user_map=None,
                           item_map=None) -> None:
    """Write ranked lists; with id maps, dense indices are written back as
    their external ids so the file matches the dataset TSVs."""
    inv_user = {v: k for k, v in user_map.items()} if user_map else None
    inv_item = {v: k for k, v in item_map.items()} if item_map else None
    with open(path, "w", encoding="utf-8") as fh:
        for r, u in enumerate(table.users):
            ext_u = inv_user[int(u)] if inv_user else u
            for rank, item in enumerate(table.items[r], start=1):
                ext_i = inv_item[int(item)] if inv_item else item
                fh.write(f"{ext_u}\t{rank}\t{ext_i}\n")
