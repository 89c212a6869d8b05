import json
import os

import numpy as np
import pytest

from recparity.harness.cli import main
from recparity.io import read_dataset, read_recommendations


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """generate -> split once; several commands build on the result."""
    root = tmp_path_factory.mktemp("cli")
    gen_cfg = root / "gen.json"
    gen_cfg.write_text(json.dumps(
        {"n_users": 150, "n_items": 250, "epsilon": 0.1}))
    data = root / "data"
    assert main(["generate", "--config", str(gen_cfg), "--out", str(data),
                 "--seed", "11"]) == 0
    split = root / "split"
    assert main(["split",
                 "--interactions", str(data / "interactions.tsv"),
                 "--demographics", str(data / "demographics.tsv"),
                 "--test-ratio", "0.2", "--seed", "11",
                 "--out", str(split)]) == 0
    return root, data, split


def split_args(split):
    return [
        "--train-interactions", str(split / "train_interactions.tsv"),
        "--train-demographics", str(split / "train_demographics.tsv"),
    ]


def target_args(split):
    return [
        "--target-interactions", str(split / "test_interactions.tsv"),
        "--target-demographics", str(split / "test_demographics.tsv"),
    ]


def test_generate_outputs(workspace):
    root, data, split = workspace
    ds = read_dataset(data / "interactions.tsv", data / "demographics.tsv")
    assert len(ds.users) == 150
    prov = json.loads((data / "provenance.json").read_text())
    assert prov["seed"] == 11
    assert prov["config"]["n_items"] == 250


def test_split_user_disjoint(workspace):
    root, data, split = workspace
    train = read_dataset(split / "train_interactions.tsv",
                         split / "train_demographics.tsv")
    test = read_dataset(split / "test_interactions.tsv",
                        split / "test_demographics.tsv")
    # ids are re-densified per file, so compare raw id sets from the TSVs
    train_ids = {line.split("\t")[0] for line
                 in (split / "train_interactions.tsv").read_text().splitlines()}
    test_ids = {line.split("\t")[0] for line
                in (split / "test_interactions.tsv").read_text().splitlines()}
    assert not train_ids & test_ids
    assert len(train_ids) + len(test_ids) == 150


def test_recommend_and_evaluate(workspace):
    root, data, split = workspace
    recs_path = root / "recs.tsv"
    assert main(["recommend", "--model", "pop", *split_args(split),
                 *target_args(split), "--k", "10", "--seed", "3",
                 "--out", str(recs_path)]) == 0
    table = read_recommendations(recs_path)
    assert table.k == 10
    report = root / "report.csv"
    assert main(["evaluate", *split_args(split),
                 "--test-interactions", str(split / "test_interactions.tsv"),
                 "--test-demographics", str(split / "test_demographics.tsv"),
                 "--recommendations", str(recs_path),
                 "--metrics", "demographic_ratio_auc,kendall_tau",
                 "--model-name", "pop", "--seed", "3",
                 "--out", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "dataset_id,model,metric,k,seed,replication,value"
    assert len(lines) == 3


def test_train_latent_and_latent_recommend(workspace):
    root, data, split = workspace
    model_path = root / "model.bin"
    assert main(["train-latent",
                 "--interactions", str(split / "train_interactions.tsv"),
                 "--demographics", str(split / "train_demographics.tsv"),
                 "--latent-dim", "8", "--fairness-weight", "0.5",
                 "--epochs", "4", "--seed", "7",
                 "--out", str(model_path)]) == 0
    assert model_path.exists()
    recs_path = root / "latent_recs.tsv"
    assert main(["recommend", "--model", "latent",
                 "--model-file", str(model_path), *split_args(split),
                 *target_args(split), "--k", "10", "--seed", "3",
                 "--out", str(recs_path)]) == 0
    table = read_recommendations(recs_path)
    test = read_dataset(split / "test_interactions.tsv",
                        split / "test_demographics.tsv")
    assert len(table.users) == len(test.users)


def test_evaluate_representation_auc_spans_split_files(workspace):
    # regression: train/test TSVs from one split must resolve to a shared
    # index space (via the persisted id maps), or the latent model trained
    # through the CLI cannot encode test users
    root, data, split = workspace
    model_path = root / "model_eval.bin"
    assert main(["train-latent",
                 "--interactions", str(split / "train_interactions.tsv"),
                 "--demographics", str(split / "train_demographics.tsv"),
                 "--latent-dim", "8", "--epochs", "4", "--seed", "5",
                 "--out", str(model_path)]) == 0
    recs_path = root / "recs_eval.tsv"
    assert main(["recommend", "--model", "pop", *split_args(split),
                 *target_args(split), "--k", "10", "--seed", "3",
                 "--out", str(recs_path)]) == 0
    report = root / "report_eval.csv"
    assert main(["evaluate", *split_args(split),
                 "--test-interactions", str(split / "test_interactions.tsv"),
                 "--test-demographics", str(split / "test_demographics.tsv"),
                 "--recommendations", str(recs_path),
                 "--model-file", str(model_path),
                 "--metrics", "demographic_ratio_auc,representation_auc",
                 "--seed", "3", "--out", str(report)]) == 0
    assert len(report.read_text().splitlines()) == 3


def test_recommend_rejects_model_from_other_id_space(workspace, tmp_path):
    # a model trained on a lone TSV (its own densified space) must not be
    # silently applied to a differently-sized universe
    root, data, split = workspace
    other = tmp_path / "other"
    gen_cfg = tmp_path / "gen.json"
    gen_cfg.write_text(json.dumps({"n_users": 80, "n_items": 90,
                                   "epsilon": 0.5}))
    assert main(["generate", "--config", str(gen_cfg), "--out", str(other),
                 "--seed", "1"]) == 0
    model_path = tmp_path / "foreign.bin"
    assert main(["train-latent",
                 "--interactions", str(other / "interactions.tsv"),
                 "--demographics", str(other / "demographics.tsv"),
                 "--latent-dim", "8", "--epochs", "2", "--seed", "1",
                 "--out", str(model_path)]) == 0
    assert main(["recommend", "--model", "latent",
                 "--model-file", str(model_path), *split_args(split),
                 *target_args(split), "--k", "5", "--seed", "1",
                 "--out", str(tmp_path / "recs.tsv")]) == 1


def test_sweep_command(workspace, tmp_path):
    root, data, split = workspace
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({
        "generator": {"n_users": 120, "n_items": 200},
        "models": [{"name": "pop", "kind": "pop"}],
        "metrics": ["demographic_ratio_auc"],
        "k": 10,
        "replications": 1,
        "sweep": {"param": "epsilon", "grid": [0.3, 0.8]},
    }))
    out = tmp_path / "sweepout"
    assert main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--seed", "4"]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3
    assert (out / "aggregate.csv").exists()


def test_sweep_partial_failure_exit_code(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({
        "generator": {"n_users": 120, "n_items": 200},
        "models": [{"name": "pop", "kind": "pop"}],
        "metrics": ["representation_auc"],  # unsupported for pop -> flagged
        "k": 10,
        "replications": 1,
        "sweep": {"param": "epsilon", "grid": [0.5]},
    }))
    out = tmp_path / "sweepout"
    assert main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--seed", "4"]) == 2


def test_config_error_exit_code(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"metrics": ["nonsense"]}))
    assert main(["sweep", "--config", str(cfg),
                 "--out", str(tmp_path / "x")]) == 1


def test_io_error_exit_code(tmp_path):
    assert main(["split", "--interactions", "/nonexistent/i.tsv",
                 "--demographics", "/nonexistent/d.tsv",
                 "--out", str(tmp_path / "s")]) == 3


def test_ingest_command(tmp_path):
    ratings = tmp_path / "ratings.dat"
    users = tmp_path / "users.dat"
    ratings.write_text("1::10::5::1\n1::11::4::1\n2::10::3::1\n3::11::2::1\n")
    users.write_text("1::F::25::0::0\n2::M::25::0::0\n3::M::45::0::0\n")
    out = tmp_path / "ml"
    assert main(["ingest", "--ratings", str(ratings), "--users", str(users),
                 "--attribute", "gender", "--out", str(out),
                 "--seed", "0"]) == 0
    report = json.loads((out / "ingest_report.json").read_text())
    assert report["n_users"] == 3
    assert (out / "user_idmap.tsv").exists()
    ds = read_dataset(out / "interactions.tsv", out / "demographics.tsv")
    assert len(ds) == 4
