"""Sweep the latent recommender's adversarial fairness weight on one dataset.

The denoising autoencoder learns user representations; a logistic adversary
predicts the group from them and its reversed gradient (scaled by the
fairness weight) pushes the encoder toward group-neutral codes. Watch all
three measures fall together as the weight grows: representation-level
leakage (probe AUC), output-level leakage (Demographic Ratio AUC), and
recommendation imbalance (item ratio).
"""

import numpy as np

import recparity as rp
from recparity import metrics
from recparity.recommenders import (
    LatentHyper,
    latent_recommend,
    latent_representations,
    train_latent,
)

K = 40
config = rp.GeneratorConfig(n_users=800, n_items=1500, epsilon=0.3)
dataset = rp.generate_dataset(config, seed=21)
split = rp.split_by_user(dataset, 0.2, seed=21)
labels = dataset.demographic
hyper = LatentHyper(epochs=40)

print(f"{'weight':>8} {'probe_auc':>10} {'dr_auc':>8} {'item_ratio':>11}")
for weight in (0.0, 0.5, 2.0, 8.0):
    model = train_latent(split.train, hyper, weight, seed=5)
    reps_train = latent_representations(model, split.train, split.train.users)
    reps_test = latent_representations(model, split.test, split.test.users)
    probe = metrics.representation_auc(
        reps_train, labels[split.train.users],
        reps_test, labels[split.test.users], seed=5)
    rows = np.stack([
        latent_recommend(model, split.test.user_items(int(u)), K)
        for u in split.test.users
    ])
    recs = rp.RecommendationTable(K, split.test.users.copy(), rows)
    dr = metrics.demographic_ratio_auc(split.train, recs, labels)
    ir = metrics.item_ratio(recs, labels)
    print(f"{weight:>8} {probe:>10.3f} {dr:>8.3f} {ir:>11.3f}")
