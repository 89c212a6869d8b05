import dataclasses

import numpy as np
import pytest

import recparity as rp
from recparity.recommenders.latent import (
    LatentHyper,
    latent_recommend,
    latent_representations,
    load_model,
    losses_and_grads,
    save_model,
    train_latent,
)
from recparity.seeding import SeedSpec

FAST = LatentHyper(latent_dim=8, epochs=6, batch_size=32)


@pytest.fixture(scope="module")
def small_split():
    ds = rp.generate_dataset(
        rp.GeneratorConfig(n_users=120, n_items=150, epsilon=0.1), seed=1)
    return ds, rp.split_by_user(ds, 0.2, 1)


@pytest.fixture(scope="module")
def trained(small_split):
    _, split = small_split
    return train_latent(split.train, FAST, 0.0, seed=3)


def toy_problem(seed=0):
    rng = np.random.default_rng(seed)
    n_items, d, n_users = 8, 4, 5
    params = {
        "w_in": rng.normal(0, 0.5, (n_items, d)),
        "b_in": rng.normal(0, 0.5, d),
        "w_out": rng.normal(0, 0.5, (d, n_items)),
        "b_out": rng.normal(0, 0.5, n_items),
        "adv_w": rng.normal(0, 0.5, d),
        "adv_b": 0.3,
    }
    x_tilde = (rng.random((n_users, n_items)) < 0.4).astype(float)
    targets = (rng.random((n_users, n_items)) < 0.4).astype(float)
    targets[targets.sum(axis=1) == 0, 0] = 1.0
    labels = rng.integers(0, 2, n_users).astype(float)
    return params, x_tilde, targets, labels


def numeric_gradient(fn, array, eps=1e-6):
    flat = array.ravel()
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = fn()
        flat[i] = orig - eps
        down = fn()
        flat[i] = orig
        grad[i] = (up - down) / (2 * eps)
    return grad.reshape(array.shape)


class TestGradients:
    def test_both_losses_match_finite_differences(self):
        params, x_tilde, targets, labels = toy_problem()
        _, _, g_rec, g_adv = losses_and_grads(params, x_tilde, targets, labels)

        def loss(which):
            lr, la, _, _ = losses_and_grads(params, x_tilde, targets, labels)
            return lr if which == "rec" else la

        for which, grads in (("rec", g_rec), ("adv", g_adv)):
            for name, analytic in grads.items():
                target = params[name]
                if not isinstance(target, np.ndarray):
                    # scalar bias: promote to array view for perturbation
                    eps = 1e-6
                    base = params[name]
                    params[name] = base + eps
                    up = loss(which)
                    params[name] = base - eps
                    down = loss(which)
                    params[name] = base
                    numeric = (up - down) / (2 * eps)
                    rel = abs(numeric - analytic) / max(
                        abs(numeric) + abs(analytic), 1e-8)
                else:
                    numeric = numeric_gradient(lambda: loss(which), target)
                    denom = np.maximum(np.abs(numeric) + np.abs(analytic), 1e-8)
                    rel = (np.abs(numeric - analytic) / denom).max()
                assert rel < 1e-4, f"{which}:{name} rel err {rel}"


class TestTraining:
    def test_zero_fairness_gate(self, small_split):
        _, split = small_split
        with_adv = train_latent(split.train, FAST, 0.0, seed=7)
        hyper_off = dataclasses.replace(FAST, train_adversary=False)
        without = train_latent(split.train, hyper_off, 0.0, seed=7)
        assert np.array_equal(with_adv.w_in, without.w_in)
        assert np.array_equal(with_adv.b_in, without.b_in)
        assert np.array_equal(with_adv.w_out, without.w_out)
        assert np.array_equal(with_adv.b_out, without.b_out)

    def test_loss_decreases(self, trained):
        assert trained.loss_curve[-1] < trained.loss_curve[0]

    def test_deterministic(self, small_split):
        _, split = small_split
        a = train_latent(split.train, FAST, 0.5, seed=11)
        b = train_latent(split.train, FAST, 0.5, seed=11)
        assert np.array_equal(a.w_in, b.w_in)
        assert np.array_equal(a.adv_w, b.adv_w)

    def test_divergence_reported(self, small_split):
        # tanh encoder + softmax keep losses finite short of float overflow,
        # so the guard only fires once weights overflow outright
        _, split = small_split
        hot = dataclasses.replace(FAST, learning_rate=1e307, epochs=1)
        with pytest.raises(RuntimeError, match="diverged at epoch"):
            train_latent(split.train, hot, 0.0, seed=0)

    def test_negative_lambda_rejected(self, small_split):
        _, split = small_split
        with pytest.raises(ValueError, match="lambda_fair"):
            train_latent(split.train, FAST, -1.0, seed=0)


class TestRepresentations:
    def test_repeat_calls_identical(self, small_split, trained):
        _, split = small_split
        users = split.test.users[:5]
        a = latent_representations(trained, split.test, users)
        b = latent_representations(trained, split.test, users)
        assert np.array_equal(a, b)

    def test_identical_histories_identical_rows(self, trained):
        ds = rp.dataset.InteractionDataset(
            4, trained.n_items, [(0, 3), (0, 5), (1, 3), (1, 5), (2, 9),
                                 (3, 2)], [0, 1, 0, 1])
        reps = latent_representations(trained, ds, [0, 1])
        assert np.array_equal(reps[0], reps[1])

    def test_empty_history_gives_bias_output(self, trained):
        ds = rp.dataset.InteractionDataset(
            2, trained.n_items, [(0, 3)], [0, 1])
        rep = latent_representations(trained, ds, [1])  # user 1 has no items
        assert np.allclose(rep[0], np.tanh(trained.b_in))


class TestRecommend:
    def test_full_complement_at_boundary(self, trained):
        history = np.arange(10)
        k = trained.n_items - 10
        rec = latent_recommend(trained, history, k)
        assert len(rec) == k
        assert not set(rec) & set(history.tolist())

    def test_history_never_recommended(self, small_split, trained):
        _, split = small_split
        for u in split.test.users[:10]:
            hist = split.test.user_items(int(u))
            rec = latent_recommend(trained, hist, 20)
            assert not set(rec.tolist()) & set(hist.tolist())

    def test_score_scale_invariance(self, trained):
        scaled = dataclasses.replace(
            trained, w_out=trained.w_out * 3.7, b_out=trained.b_out * 3.7)
        hist = [1, 2, 3]
        assert np.array_equal(latent_recommend(trained, hist, 25),
                              latent_recommend(scaled, hist, 25))

    def test_too_few_eligible(self, trained):
        with pytest.raises(ValueError, match="eligible"):
            latent_recommend(trained, np.arange(trained.n_items - 3), 5)


class TestModelIO:
    def test_round_trip(self, trained, tmp_path):
        path = str(tmp_path / "model.bin")
        save_model(trained, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.w_in, trained.w_in)
        assert np.array_equal(loaded.w_out, trained.w_out)
        assert loaded.hyper == trained.hyper
        assert loaded.lambda_fair == trained.lambda_fair
        hist = [0, 1]
        assert np.array_equal(latent_recommend(loaded, hist, 10),
                              latent_recommend(trained, hist, 10))

    def test_version_and_magic_rejected(self, trained, tmp_path):
        path = str(tmp_path / "model.bin")
        save_model(trained, path)
        blob = bytearray(open(path, "rb").read())
        blob[4] = 99  # bump the version field
        open(path, "wb").write(bytes(blob))
        with pytest.raises(ValueError, match="version"):
            load_model(path)
        open(path, "wb").write(b"XXXX" + bytes(blob[4:]))
        with pytest.raises(ValueError, match="not a"):
            load_model(path)
