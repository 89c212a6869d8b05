"""Trainable latent recommender: a one-hidden-layer denoising autoencoder
over item-incidence vectors, with an optional gradient-reversal adversary
that penalizes demographic information in the latent vector.

The encoder maps a user's (corrupted, count-normalized) item vector to a
latent code h; the decoder scores every item with a softmax and the
reconstruction loss is multinomial cross-entropy over the items that were
masked out of the input. A single logistic adversary predicts the user's
group from h; its gradient is reversed and scaled by ``lambda_fair`` on the
way into the encoder, while the adversary's own parameters descend their
loss as usual. ``lambda_fair = 0`` leaves the encoder bit-identical to a run
with the adversary disabled.

All gradients are written out by hand so they can be checked against finite
differences.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..binio import read_flat, write_flat
from ..dataset import InteractionDataset
from ..seeding import SeedSpec, as_seed

MODEL_MAGIC = b"RPLM"
MODEL_VERSION = 1


@dataclass(frozen=True)
class LatentHyper:
    latent_dim: int = 64
    learning_rate: float = 4.0
    epochs: int = 50
    batch_size: int = 128
    mask_rate: float = 0.5
    adversary_lr: float = 1.0
    adversary_steps: int = 5
    adversary_l2: float = 0.01
    # converts the user-facing fairness weight into this optimizer's stable
    # pressure range; reversal coefficient = fairness_weight * fairness_scale
    fairness_scale: float = 0.024
    train_adversary: bool = True
    init_scale: float = 0.1


@dataclass(frozen=True, eq=False)
class LatentModel:
    w_in: np.ndarray   # (n_items, d)
    b_in: np.ndarray   # (d,)
    w_out: np.ndarray  # (d, n_items)
    b_out: np.ndarray  # (n_items,)
    adv_w: np.ndarray  # (d,)
    adv_b: float
    n_items: int
    lambda_fair: float
    hyper: LatentHyper
    seed_master: int
    loss_curve: np.ndarray

    @property
    def latent_dim(self) -> int:
        return self.w_in.shape[1]


def _incidence(dataset: InteractionDataset, users) -> np.ndarray:
    x = np.zeros((len(users), dataset.n_items), dtype=np.float64)
    for row, u in enumerate(users):
        x[row, dataset.user_items(int(u))] = 1.0
    return x


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.maximum(x.sum(axis=1, keepdims=True), 1.0))
    return x / norm


def _encode(x_tilde, w_in, b_in) -> np.ndarray:
    return np.tanh(x_tilde @ w_in + b_in)


def _log_softmax(s: np.ndarray) -> np.ndarray:
    shifted = s - s.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def losses_and_grads(params: dict, x_tilde: np.ndarray, targets: np.ndarray,
                     labels: np.ndarray):
    """Batch losses and analytic gradients for fixed (pre-corrupted) inputs.

    ``targets`` holds a nonnegative row per user (normalized internally to a
    distribution over held-out items). Returns the reconstruction loss, the
    adversary loss, and per-parameter gradient dicts for each loss.
    """
    w_in, b_in = params["w_in"], params["b_in"]
    w_out, b_out = params["w_out"], params["b_out"]
    adv_w, adv_b = params["adv_w"], params["adv_b"]
    batch = x_tilde.shape[0]

    h = _encode(x_tilde, w_in, b_in)
    s = h @ w_out + b_out
    log_p = _log_softmax(s)
    y = targets / targets.sum(axis=1, keepdims=True)
    loss_rec = float(-(y * log_p).sum(axis=1).mean())

    q = h @ adv_w + adv_b
    sig = 1.0 / (1.0 + np.exp(-q))
    loss_adv = float(np.mean(np.logaddexp(0.0, q) - labels * q))

    d_s = (np.exp(log_p) - y) / batch
    d_h_rec = d_s @ w_out.T
    d_pre_rec = d_h_rec * (1.0 - h * h)
    grads_rec = {
        "w_out": h.T @ d_s,
        "b_out": d_s.sum(axis=0),
        "w_in": x_tilde.T @ d_pre_rec,
        "b_in": d_pre_rec.sum(axis=0),
    }

    d_q = (sig - labels) / batch
    d_h_adv = np.outer(d_q, adv_w)
    d_pre_adv = d_h_adv * (1.0 - h * h)
    grads_adv = {
        "adv_w": h.T @ d_q,
        "adv_b": float(d_q.sum()),
        "w_in": x_tilde.T @ d_pre_adv,
        "b_in": d_pre_adv.sum(axis=0),
    }
    return loss_rec, loss_adv, grads_rec, grads_adv


def train_latent(train: InteractionDataset, hyper: LatentHyper,
                 lambda_fair: float, seed: SeedSpec | int) -> LatentModel:
    """Mini-batch SGD on the denoising reconstruction loss, with the reversed
    and ``lambda_fair``-scaled adversary gradient mixed into the encoder."""
    if lambda_fair < 0:
        raise ValueError("lambda_fair must be >= 0")
    seed = as_seed(seed)
    users = train.users
    x_full = _incidence(train, users)
    labels = train.demographic[users].astype(np.float64)
    n_items = train.n_items
    d = hyper.latent_dim

    rng_init = seed.child("latent-init").rng()
    w_in = rng_init.normal(0.0, hyper.init_scale, size=(n_items, d))
    w_out = rng_init.normal(0.0, hyper.init_scale, size=(d, n_items))
    b_in = np.zeros(d)
    b_out = np.zeros(n_items)
    adv_w = np.zeros(d)
    adv_b = 0.0

    rng = seed.child("latent-epochs").rng()
    lr, adv_lr = hyper.learning_rate, hyper.adversary_lr
    curve = []
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(users))
        epoch_losses = []
        for start in range(0, len(users), hyper.batch_size):
            rows = order[start:start + hyper.batch_size]
            x = x_full[rows]
            drop = rng.random(x.shape) < hyper.mask_rate
            kept = x * ~drop
            targets = x * drop
            # users whose whole history got masked reconstruct everything
            empty = targets.sum(axis=1) == 0
            targets[empty] = x[empty]
            x_tilde = _normalize_rows(kept)

            if hyper.train_adversary:
                # let the adversary catch up on the current latent codes
                # before its (reversed) gradient steers the encoder; weight
                # decay keeps its norm, and so the reversal pressure, bounded
                h = _encode(x_tilde, w_in, b_in)
                y = labels[rows]
                for _ in range(hyper.adversary_steps):
                    sig = 1.0 / (1.0 + np.exp(-(h @ adv_w + adv_b)))
                    d_q = (sig - y) / len(rows)
                    adv_w = adv_w - adv_lr * (h.T @ d_q
                                              + hyper.adversary_l2 * adv_w)
                    adv_b = adv_b - adv_lr * d_q.sum()

            params = {"w_in": w_in, "b_in": b_in, "w_out": w_out,
                      "b_out": b_out, "adv_w": adv_w, "adv_b": adv_b}
            loss_rec, _, g_rec, g_adv = losses_and_grads(
                params, x_tilde, targets, labels[rows]
            )
            if not np.isfinite(loss_rec):
                raise RuntimeError(f"training diverged at epoch {epoch}")
            epoch_losses.append(loss_rec)

            if lambda_fair != 0.0:
                rev = lambda_fair * hyper.fairness_scale
                w_in -= lr * (g_rec["w_in"] - rev * g_adv["w_in"])
                b_in -= lr * (g_rec["b_in"] - rev * g_adv["b_in"])
            else:
                w_in -= lr * g_rec["w_in"]
                b_in -= lr * g_rec["b_in"]
            w_out -= lr * g_rec["w_out"]
            b_out -= lr * g_rec["b_out"]
        curve.append(float(np.mean(epoch_losses)))

    return LatentModel(
        w_in=w_in, b_in=b_in, w_out=w_out, b_out=b_out,
        adv_w=adv_w, adv_b=float(adv_b), n_items=n_items,
        lambda_fair=float(lambda_fair), hyper=hyper,
        seed_master=int(seed.master_seed), loss_curve=np.array(curve),
    )


def latent_representations(model: LatentModel, dataset: InteractionDataset,
                           users) -> np.ndarray:
    """Noise-free latent vectors for the given users' full histories."""
    users = np.asarray(users, dtype=np.int64)
    x = _normalize_rows(_incidence(dataset, users))
    return _encode(x, model.w_in, model.b_in)


def latent_recommend(model: LatentModel, user_history, k: int) -> np.ndarray:
    """Top-k decoder scores over items outside the user's history."""
    history = np.asarray(user_history, dtype=np.int64)
    if model.n_items - len(np.unique(history)) < k:
        raise ValueError(
            f"only {model.n_items - len(np.unique(history))} eligible items, need {k}"
        )
    x = np.zeros((1, model.n_items))
    x[0, history] = 1.0
    h = _encode(_normalize_rows(x), model.w_in, model.b_in)
    scores = (h @ model.w_out + model.b_out)[0]
    scores[history] = -np.inf
    order = np.lexsort((np.arange(model.n_items), -scores))
    return order[:k]


def save_model(model: LatentModel, path) -> None:
    header = {
        "kind": "latent-model",
        "n_items": model.n_items,
        "lambda_fair": model.lambda_fair,
        "seed": model.seed_master,
        "adv_b": model.adv_b,
        "hyper": asdict(model.hyper),
    }
    write_flat(path, MODEL_MAGIC, MODEL_VERSION, header,
               [model.w_in, model.b_in, model.w_out, model.b_out,
                model.adv_w, model.loss_curve])


def load_model(path) -> LatentModel:
    header, arrays = read_flat(path, MODEL_MAGIC, MODEL_VERSION)
    w_in, b_in, w_out, b_out, adv_w, loss_curve = arrays
    return LatentModel(
        w_in=w_in, b_in=b_in, w_out=w_out, b_out=b_out, adv_w=adv_w,
        adv_b=float(header["adv_b"]), n_items=int(header["n_items"]),
        lambda_fair=float(header["lambda_fair"]),
        hyper=LatentHyper(**header["hyper"]),
        seed_master=int(header["seed"]), loss_curve=loss_curve,
    )
