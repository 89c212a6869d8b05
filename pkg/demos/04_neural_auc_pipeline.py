"""The neural recommendation-leakage pipeline, stage by stage.

Stage 1 pretrains item embeddings with a skip-gram objective over items
co-liked by the same user. Stage 2 freezes them and trains a small
classifier on mean-pooled [embedding; demographic-ratio] features of each
user's recommendation list. The resulting test AUC is the "neural" estimate
of how much a recommender's output reveals the user's group.
"""

import recparity as rp
from recparity.metrics import DemographicRatioTable
from recparity.neuralauc import (
    neural_auc,
    neural_auc_mean,
    sample_skipgram_pairs,
    train_item_embeddings,
    train_list_classifier,
)
from recparity.recommenders import recommend_table

K = 40
config = rp.GeneratorConfig(n_users=1000, n_items=2000, epsilon=0.1)
dataset = rp.generate_dataset(config, seed=33)
split = rp.split_by_user(dataset, 0.2, seed=33)
labels = dataset.demographic

pairs = sample_skipgram_pairs(split.train, seed=33)
print(f"skip-gram corpus: {len(pairs)} (center, neighbour) pairs")

embeddings = train_item_embeddings(pairs, seed=33)
print(f"embedding training loss: {embeddings.loss_curve[0]:.3f} -> "
      f"{embeddings.loss_curve[-1]:.3f} over {len(embeddings.loss_curve)} epochs")
print(f"items never paired (kept at random init): {embeddings.unpaired.sum()}")

polarization = DemographicRatioTable.from_dataset(split.train)

for kind in ("rand", "dem_pop"):
    recs_train = recommend_table(kind, split.train, split.train, K, seed=1)
    recs_test = recommend_table(kind, split.train, split.test, K, seed=2)
    classifier = train_list_classifier(
        embeddings, polarization, recs_train, labels, seed=4)
    single = neural_auc(classifier, recs_test, labels)
    averaged = neural_auc_mean(
        embeddings, polarization, recs_train, labels, recs_test, labels,
        seed=4, n_seeds=5)
    print(f"{kind}: single-classifier AUC {single:.3f}, "
          f"5-seed mean {averaged:.3f} "
          f"(early-stopped at epoch {classifier.best_epoch})")
