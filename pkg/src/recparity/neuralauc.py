"""Neural recommendation-leakage measurement.

Stage 1 pretrains item embeddings with a skip-gram objective over co-liked
item pairs (negative sampling from the unigram^0.75 neighbor distribution).
Stage 2 trains a small feedforward classifier to predict a user's group from
their recommendation list: each recommended item is represented by its frozen
embedding concatenated with the item's demographic ratio, the k item vectors
are mean-pooled (items sorted first, so list order can never matter, down to
the last bit), and a one-hidden-layer network maps the pooled vector to a
group logit. Early stopping watches log-loss on a held-out slice of the
training users.

The embedding table is never written by stage 2.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .binio import read_flat, write_flat
from .dataset import InteractionDataset, RecommendationTable
from .metrics import DemographicRatioTable, auc_from_scores
from .seeding import SeedSpec, as_seed

EMBEDDINGS_MAGIC = b"RPEM"
CLASSIFIER_MAGIC = b"RPLC"
BIN_VERSION = 1


@dataclass(frozen=True, eq=False)
class SkipGramPairs:
    """(center, neighbor) item pairs; both items were liked by one user."""

    n_items: int
    centers: np.ndarray
    neighbors: np.ndarray

    def __len__(self):
        return len(self.centers)


def sample_skipgram_pairs(train: InteractionDataset, max_neighbors: int = 5,
                          seed: SeedSpec | int = 0) -> SkipGramPairs:
    """For each (user, item), draw up to ``max_neighbors`` distinct other
    items of the same user, uniformly without replacement. Single-interaction
    users contribute nothing. Per-user streams keep this order-independent."""
    seed = as_seed(seed).child("skipgram-pairs")
    centers, neighbors = [], []
    for u in train.users:
        items = train.user_items(int(u))
        n = len(items)
        if n < 2:
            continue
        rng = seed.child(int(u)).rng()
        take = min(max_neighbors, n - 1)
        for pos in range(n):
            others = np.delete(items, pos)
            picks = rng.permutation(others)[:take]
            centers.append(np.full(take, items[pos], dtype=np.int64))
            neighbors.append(picks)
    if centers:
        centers = np.concatenate(centers)
        neighbors = np.concatenate(neighbors)
    else:
        centers = np.empty(0, dtype=np.int64)
        neighbors = np.empty(0, dtype=np.int64)
    return SkipGramPairs(n_items=train.n_items, centers=centers,
                         neighbors=neighbors)


@dataclass(frozen=True)
class EmbeddingHyper:
    epochs: int = 5
    learning_rate: float = 0.05
    batch_size: int = 1024


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Input-side item embeddings; ``unpaired`` flags items that never
    occurred in a pair and kept their random initialization."""

    vectors: np.ndarray
    unpaired: np.ndarray
    loss_curve: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def train_item_embeddings(pairs: SkipGramPairs, dim: int = 32,
                          negatives: int = 10,
                          hyper: EmbeddingHyper | None = None,
                          seed: SeedSpec | int = 0) -> EmbeddingTable:
    """Skip-gram with negative sampling over the given pairs."""
    if len(pairs) == 0:
        raise ValueError("no skip-gram pairs to train on")
    hyper = hyper or EmbeddingHyper()
    seed = as_seed(seed)
    n_items = pairs.n_items

    rng_init = seed.child("embedding-init").rng()
    w_in = rng_init.uniform(-0.5 / dim, 0.5 / dim, size=(n_items, dim))
    w_out = np.zeros((n_items, dim))

    freq = np.bincount(pairs.neighbors, minlength=n_items).astype(np.float64)
    noise = freq ** 0.75
    noise /= noise.sum()

    paired = np.zeros(n_items, dtype=bool)
    paired[pairs.centers] = True
    paired[pairs.neighbors] = True

    rng = seed.child("embedding-epochs").rng()
    n_batches = hyper.epochs * max(1, -(-len(pairs) // hyper.batch_size))
    batch_no = 0
    curve = []
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(pairs))
        losses = []
        for start in range(0, len(pairs), hyper.batch_size):
            # linear lr decay over the whole run, as in word2vec
            lr = hyper.learning_rate * max(1.0 - batch_no / n_batches, 1e-4)
            batch_no += 1
            rows = order[start:start + hyper.batch_size]
            c, o = pairs.centers[rows], pairs.neighbors[rows]
            negs = rng.choice(n_items, size=(len(rows), negatives), p=noise)
            w = w_in[c]
            v_pos = w_out[o]
            v_neg = w_out[negs]
            s_pos = np.einsum("bd,bd->b", w, v_pos)
            s_neg = np.einsum("bd,bnd->bn", w, v_neg)
            loss = float(
                np.mean(np.logaddexp(0.0, -s_pos))
                + np.mean(np.logaddexp(0.0, s_neg).sum(axis=1))
            )
            if not np.isfinite(loss):
                raise RuntimeError(f"embedding training diverged at epoch {epoch}")
            losses.append(loss)
            # per-pair steps accumulated within the (small) batch, as in
            # word2vec; the batch size bounds how stale the summed rows get
            d_pos = -1.0 / (1.0 + np.exp(np.clip(s_pos, -30, 30)))
            d_neg = 1.0 / (1.0 + np.exp(np.clip(-s_neg, -30, 30)))
            g_w = d_pos[:, None] * v_pos + np.einsum("bn,bnd->bd", d_neg, v_neg)
            np.add.at(w_in, c, -lr * g_w)
            np.add.at(w_out, o, -lr * d_pos[:, None] * w)
            np.add.at(w_out, negs.reshape(-1),
                      -lr * (d_neg[..., None] * w[:, None, :]).reshape(-1, dim))
        curve.append(float(np.mean(losses)))
    return EmbeddingTable(vectors=w_in, unpaired=~paired,
                          loss_curve=np.array(curve))


def list_features(embeddings: EmbeddingTable, ratio: np.ndarray,
                  recs: RecommendationTable) -> np.ndarray:
    """Mean-pooled [embedding; demographic ratio] vectors per user list.

    Items are sorted within each list before pooling so the summation order,
    and therefore the result, is independent of recommendation order.
    """
    items = np.sort(recs.items, axis=1)
    per_item = np.concatenate(
        [embeddings.vectors[items], ratio[items][..., None]], axis=2
    )
    return per_item.mean(axis=1)


@dataclass(frozen=True)
class ClassifierHyper:
    hidden_dim: int = 32
    learning_rate: float = 0.05
    max_epochs: int = 200
    batch_size: int = 64
    patience: int = 10
    val_fraction: float = 0.2


@dataclass(frozen=True, eq=False)
class ListClassifier:
    """Trained list classifier plus everything needed to score new tables."""

    embeddings: EmbeddingTable
    ratio: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    hyper: ClassifierHyper
    best_epoch: int

    def scores(self, recs: RecommendationTable) -> np.ndarray:
        feats = list_features(self.embeddings, self.ratio, recs)
        feats = (feats - self.feat_mean) / self.feat_std
        h = np.tanh(feats @ self.w1 + self.b1)
        return h @ self.w2 + self.b2


def classifier_loss_and_grads(params: dict, feats: np.ndarray,
                              labels: np.ndarray):
    """Logistic loss of the pooled-feature classifier with hand gradients."""
    w1, b1, w2, b2 = params["w1"], params["b1"], params["w2"], params["b2"]
    batch = len(feats)
    h = np.tanh(feats @ w1 + b1)
    q = h @ w2 + b2
    loss = float(np.mean(np.logaddexp(0.0, q) - labels * q))
    d_q = (1.0 / (1.0 + np.exp(-q)) - labels) / batch
    d_h = np.outer(d_q, w2)
    d_pre = d_h * (1.0 - h * h)
    grads = {
        "w2": h.T @ d_q,
        "b2": float(d_q.sum()),
        "w1": feats.T @ d_pre,
        "b1": d_pre.sum(axis=0),
    }
    return loss, grads


def train_list_classifier(embeddings: EmbeddingTable,
                          polarization: DemographicRatioTable,
                          train_recs: RecommendationTable, train_labels,
                          hyper: ClassifierHyper | None = None,
                          seed: SeedSpec | int = 0) -> ListClassifier:
    """Fit the classifier on training users' recommendation lists with early
    stopping on a held-out slice; the embedding table is read-only here."""
    hyper = hyper or ClassifierHyper()
    seed = as_seed(seed)
    labels = np.asarray(train_labels)[train_recs.users].astype(np.float64)
    if len(np.unique(labels)) < 2:
        raise ValueError("training labels contain a single class")
    ratio = np.asarray(polarization.ratio, dtype=np.float64)
    feats = list_features(embeddings, ratio, train_recs)
    mean, std = feats.mean(axis=0), feats.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    feats = (feats - mean) / std

    rng_split = seed.child("classifier-val").rng()
    val_idx = []
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        n_val = max(1, int(round(hyper.val_fraction * len(members))))
        val_idx.append(rng_split.permutation(members)[:n_val])
    val = np.concatenate(val_idx)
    fit = np.setdiff1d(np.arange(len(labels)), val)

    rng_init = seed.child("classifier-init").rng()
    f_dim = feats.shape[1]
    w1 = rng_init.normal(0.0, 1.0 / np.sqrt(f_dim), size=(f_dim, hyper.hidden_dim))
    b1 = np.zeros(hyper.hidden_dim)
    w2 = np.zeros(hyper.hidden_dim)
    b2 = 0.0

    rng = seed.child("classifier-epochs").rng()
    best = {"w1": w1.copy(), "b1": b1.copy(), "w2": w2.copy(), "b2": b2}
    best_loss, best_epoch, stale = np.inf, 0, 0
    for epoch in range(hyper.max_epochs):
        order = rng.permutation(len(fit))
        for start in range(0, len(fit), hyper.batch_size):
            rows = fit[order[start:start + hyper.batch_size]]
            params = {"w1": w1, "b1": b1, "w2": w2, "b2": b2}
            loss, grads = classifier_loss_and_grads(params, feats[rows],
                                                    labels[rows])
            if not np.isfinite(loss):
                raise RuntimeError(f"classifier diverged at epoch {epoch}")
            w1 -= hyper.learning_rate * grads["w1"]
            b1 -= hyper.learning_rate * grads["b1"]
            w2 -= hyper.learning_rate * grads["w2"]
            b2 -= hyper.learning_rate * grads["b2"]
        h_val = np.tanh(feats[val] @ w1 + b1)
        q_val = h_val @ w2 + b2
        val_loss = float(np.mean(np.logaddexp(0.0, q_val) - labels[val] * q_val))
        if val_loss < best_loss - 1e-6:
            best_loss, best_epoch, stale = val_loss, epoch, 0
            best = {"w1": w1.copy(), "b1": b1.copy(), "w2": w2.copy(), "b2": b2}
        else:
            stale += 1
            if stale >= hyper.patience:
                break
    return ListClassifier(
        embeddings=embeddings, ratio=ratio,
        w1=best["w1"], b1=best["b1"], w2=best["w2"], b2=float(best["b2"]),
        feat_mean=mean, feat_std=std, hyper=hyper, best_epoch=best_epoch,
    )


def neural_auc(classifier: ListClassifier, test_recs: RecommendationTable,
               test_labels, fold: bool = False) -> float:
    """Unfolded AUC of classifier scores over the test users' lists."""
    labels = np.asarray(test_labels)[test_recs.users]
    return auc_from_scores(classifier.scores(test_recs), labels, fold=fold)


def neural_auc_mean(embeddings: EmbeddingTable,
                    polarization: DemographicRatioTable,
                    train_recs: RecommendationTable, train_labels,
                    test_recs: RecommendationTable, test_labels,
                    hyper: ClassifierHyper | None = None,
                    seed: SeedSpec | int = 0, n_seeds: int = 5) -> float:
    """Mean neural AUC over independently seeded classifier trainings."""
    seed = as_seed(seed).child("neural-auc")
    values = []
    for j in range(n_seeds):
        clf = train_list_classifier(embeddings, polarization, train_recs,
                                    train_labels, hyper, seed.child(j))
        values.append(neural_auc(clf, test_recs, test_labels))
    return float(np.mean(values))


def save_embeddings(table: EmbeddingTable, path) -> None:
    write_flat(path, EMBEDDINGS_MAGIC, BIN_VERSION, {"kind": "item-embeddings"},
               [table.vectors, table.unpaired.astype(np.float64),
                table.loss_curve])


def load_embeddings(path) -> EmbeddingTable:
    _, arrays = read_flat(path, EMBEDDINGS_MAGIC, BIN_VERSION)
    vectors, unpaired, loss_curve = arrays
    return EmbeddingTable(vectors=vectors, unpaired=unpaired.astype(bool),
                          loss_curve=loss_curve)


def save_classifier(clf: ListClassifier, path) -> None:
    header = {"kind": "list-classifier", "b2": clf.b2,
              "best_epoch": clf.best_epoch, "hyper": asdict(clf.hyper)}
    write_flat(path, CLASSIFIER_MAGIC, BIN_VERSION, header,
               [clf.embeddings.vectors, clf.embeddings.unpaired.astype(np.float64),
                clf.embeddings.loss_curve, clf.ratio, clf.w1, clf.b1, clf.w2,
                clf.feat_mean, clf.feat_std])


def load_classifier(path) -> ListClassifier:
    header, arrays = read_flat(path, CLASSIFIER_MAGIC, BIN_VERSION)
    vectors, unpaired, curve, ratio, w1, b1, w2, mean, std = arrays
    table = EmbeddingTable(vectors=vectors, unpaired=unpaired.astype(bool),
                           loss_curve=curve)
    return ListClassifier(
        embeddings=table, ratio=ratio, w1=w1, b1=b1, w2=w2,
        b2=float(header["b2"]), feat_mean=mean, feat_std=std,
        hyper=ClassifierHyper(**header["hyper"]),
        best_epoch=int(header["best_epoch"]),
    )
