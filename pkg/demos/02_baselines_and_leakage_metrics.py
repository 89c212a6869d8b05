"""Run the four heuristic baselines and measure demographic leakage in their
top-k output.

Demographic Ratio AUC scores each user by the median minority-share of their
recommended items; item ratio measures per-item recommendation imbalance;
extended Kendall-Tau compares the two groups' aggregate top-k rankings.
Note the popularity baseline at mid epsilon: excluding already-consumed items
pushes group-favored items toward the *other* group, so its AUC drops below
0.5 even though the heuristic itself ignores demographics.
"""

import numpy as np

import recparity as rp
from recparity import metrics
from recparity.recommenders import recommend_table

K = 40

for epsilon in (0.05, 0.5, 1.0):
    config = rp.GeneratorConfig(n_users=1000, n_items=2000, epsilon=epsilon)
    dataset = rp.generate_dataset(config, seed=11)
    split = rp.split_by_user(dataset, 0.2, seed=11)
    labels = dataset.demographic

    print(f"epsilon = {epsilon}")
    for kind in ("pop", "rand", "dem_pop", "max_division"):
        recs = recommend_table(kind, split.train, split.test, K, seed=3)
        dr = metrics.demographic_ratio_auc(split.train, recs, labels)
        ir = metrics.item_ratio(recs, labels)
        aggs = [metrics.aggregate_group_ranking(recs, labels, g, K)
                for g in (0, 1)]
        kt = metrics.kendall_tau_extended(aggs[0].items, aggs[1].items)
        print(f"  {kind:13s} dr_auc={dr:5.3f}  item_ratio={ir:5.3f}  "
              f"kendall_tau={kt:+5.2f}")
    print()
