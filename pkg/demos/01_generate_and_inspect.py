"""Generate a synthetic interaction dataset and inspect its structure.

The generator places users and items on a shared feature simplex; epsilon
controls how much the two demographic groups' preferences overlap. This
script generates one polarized and one overlapping dataset and prints the
structural differences that every later experiment builds on.
"""

import numpy as np

import recparity as rp

for epsilon in (0.05, 1.0):
    config = rp.GeneratorConfig(n_users=1000, n_items=2000, epsilon=epsilon)
    dataset = rp.generate_dataset(config, seed=7)

    counts = np.sort(dataset.item_counts())[::-1]
    top_decile_share = counts[:200].sum() / counts.sum()

    tops = []
    for group in (0, 1):
        by_group = dataset.group_item_counts(group)
        order = np.lexsort((np.arange(len(by_group)), -by_group))
        tops.append(set(order[:100].tolist()))
    overlap = len(tops[0] & tops[1]) / len(tops[0] | tops[1])

    print(f"epsilon = {epsilon}")
    print(f"  users: {len(dataset.users)}, interactions: {len(dataset)}")
    print(f"  minority ratio: {rp.minority_ratio(dataset):.3f}")
    print(f"  interactions per user (median): "
          f"{np.median(np.bincount(dataset.pairs[:, 0])):.0f}")
    print(f"  top-10% items hold {top_decile_share:.0%} of interactions")
    print(f"  Jaccard overlap of the groups' top-100 items: {overlap:.3f}")
    print()

split = rp.split_by_user(dataset, test_ratio=0.2, seed=7)
print(f"user-disjoint split: {len(split.train.users)} train / "
      f"{len(split.test.users)} test users "
      f"(test minority ratio {rp.minority_ratio(split.test):.3f})")
