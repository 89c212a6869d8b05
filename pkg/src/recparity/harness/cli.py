"""Command-line entry point.

Subcommands: generate, ingest, split, recommend, train-latent, evaluate,
sweep. Exit codes: 0 success, 1 configuration error, 2 sweep finished with
flagged error rows, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .. import metrics as metrics_mod
from ..datagen import GeneratorConfig, generate_dataset
from ..dataset import split_by_user
from ..io import (
    discover_idmaps,
    load_idmaps,
    read_dataset,
    read_recommendations,
    write_dataset,
    write_idmaps,
    write_recommendations,
)
from ..neuralauc import (
    neural_auc_mean,
    sample_skipgram_pairs,
    train_item_embeddings,
)
from ..recommenders import (
    LatentHyper,
    latent_representations,
    load_model,
    recommend_table,
    save_model,
    train_latent,
)
from ..seeding import SeedSpec
from .experiment import (
    ExperimentConfig,
    SweepSpec,
    latent_recommend_table,
    run_experiment,
)
from .ingest import ingest_movielens


def _common_flags(parser):
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", required=True, help="output file or directory")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--idmap-dir",
                        help="directory holding user_idmap.tsv/item_idmap.tsv "
                             "(default: discovered next to the input files)")


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _identity_maps(n_users, n_items):
    return ({str(u): u for u in range(n_users)},
            {str(i): i for i in range(n_items)})


def _maps_for(args, *paths):
    """Shared id maps: an explicit --idmap-dir wins, else any maps stored
    next to the given files; (None, None) means per-file densification."""
    if getattr(args, "idmap_dir", None):
        return load_idmaps(args.idmap_dir)
    return discover_idmaps(*paths)


def _cmd_generate(args) -> int:
    config = GeneratorConfig.from_dict(_load_json(args.config)) \
        if args.config else GeneratorConfig()
    dataset = generate_dataset(config, SeedSpec(args.seed))
    os.makedirs(args.out, exist_ok=True)
    write_dataset(dataset,
                  os.path.join(args.out, "interactions.tsv"),
                  os.path.join(args.out, "demographics.tsv"))
    write_idmaps(*_identity_maps(dataset.n_users, dataset.n_items), args.out)
    with open(os.path.join(args.out, "provenance.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"config": config.to_dict(), "seed": args.seed}, fh,
                  indent=2, sort_keys=True)
    print(f"generated {dataset.n_users} users x {dataset.n_items} items, "
          f"{len(dataset)} interactions -> {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    result = ingest_movielens(args.ratings, args.users, args.attribute,
                              min_rating=args.min_rating)
    os.makedirs(args.out, exist_ok=True)
    write_dataset(result.dataset,
                  os.path.join(args.out, "interactions.tsv"),
                  os.path.join(args.out, "demographics.tsv"))
    write_idmaps(result.user_idmap, result.item_idmap, args.out)
    report = {
        "attribute": result.attribute,
        "minority_ratio": result.minority_ratio,
        "rule": result.rule,
        "n_users": len(result.user_idmap),
        "n_items": len(result.item_idmap),
        "n_interactions": len(result.dataset),
    }
    with open(os.path.join(args.out, "ingest_report.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(f"ingested {report['n_users']} users, minority ratio "
          f"{result.minority_ratio:.3f} ({result.rule}) -> {args.out}")
    return 0


def _cmd_split(args) -> int:
    user_map, item_map = _maps_for(args, args.interactions)
    dataset = read_dataset(args.interactions, args.demographics,
                           user_map, item_map)
    split = split_by_user(dataset, args.test_ratio, SeedSpec(args.seed))
    os.makedirs(args.out, exist_ok=True)
    for name, part in (("train", split.train), ("test", split.test)):
        write_dataset(part,
                      os.path.join(args.out, f"{name}_interactions.tsv"),
                      os.path.join(args.out, f"{name}_demographics.tsv"))
    # the halves are written with the parent's dense indices; identity maps
    # keep both files in that one index space when read back
    write_idmaps(*_identity_maps(dataset.n_users, dataset.n_items), args.out)
    print(f"split {len(dataset.users)} users -> "
          f"{len(split.train.users)} train / {len(split.test.users)} test")
    return 0


def _cmd_recommend(args) -> int:
    user_map, item_map = _maps_for(args, args.train_interactions,
                                   args.target_interactions)
    train = read_dataset(args.train_interactions, args.train_demographics,
                         user_map, item_map)
    target = read_dataset(args.target_interactions, args.target_demographics,
                          user_map, item_map)
    if args.model == "latent":
        if not args.model_file:
            raise ValueError("latent recommendations need --model-file")
        model = load_model(args.model_file)
        if model.n_items != train.n_items:
            raise ValueError(
                f"model was trained over {model.n_items} items but the "
                f"dataset has {train.n_items}; train and recommend must "
                "share one id space (see the idmap files)")
        table = latent_recommend_table(model, target, args.k)
    else:
        table = recommend_table(args.model, train, target, args.k,
                                SeedSpec(args.seed))
    write_recommendations(table, args.out, user_map, item_map)
    print(f"wrote top-{args.k} lists for {len(table.users)} users -> {args.out}")
    return 0


def _cmd_train_latent(args) -> int:
    user_map, item_map = _maps_for(args, args.interactions)
    train = read_dataset(args.interactions, args.demographics,
                         user_map, item_map)
    hyper = LatentHyper(latent_dim=args.latent_dim, epochs=args.epochs,
                        learning_rate=args.learning_rate,
                        batch_size=args.batch_size, mask_rate=args.mask_rate)
    model = train_latent(train, hyper, args.fairness_weight, SeedSpec(args.seed))
    save_model(model, args.out)
    print(f"trained latent model (dim={args.latent_dim}, "
          f"fairness={args.fairness_weight}); final loss "
          f"{model.loss_curve[-1]:.4f} -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    user_map, item_map = _maps_for(args, args.train_interactions,
                                   args.test_interactions)
    train = read_dataset(args.train_interactions, args.train_demographics,
                         user_map, item_map)
    test = read_dataset(args.test_interactions, args.test_demographics,
                        user_map, item_map)
    recs = read_recommendations(args.recommendations, user_map, item_map)
    labels = test.demographic
    seed = SeedSpec(args.seed)
    wanted = args.metrics.split(",")
    reports = []
    for metric in wanted:
        if metric == "demographic_ratio_auc":
            value = metrics_mod.demographic_ratio_auc(train, recs, labels)
        elif metric == "item_ratio":
            value = metrics_mod.item_ratio(recs, labels)
        elif metric == "kendall_tau":
            agg = [metrics_mod.aggregate_group_ranking(recs, labels, g, recs.k)
                   for g in (0, 1)]
            value = metrics_mod.kendall_tau_extended(agg[0].items, agg[1].items)
        elif metric == "neural_auc":
            if not args.train_recommendations:
                raise ValueError("neural_auc needs --train-recommendations")
            train_recs = read_recommendations(args.train_recommendations,
                                              user_map, item_map)
            pairs = sample_skipgram_pairs(train, seed=seed.child("embeddings"))
            emb = train_item_embeddings(pairs, seed=seed.child("embeddings"))
            table = metrics_mod.DemographicRatioTable.from_dataset(train)
            value = neural_auc_mean(emb, table, train_recs, train.demographic,
                                    recs, labels, seed=seed)
        elif metric == "representation_auc":
            if not args.model_file:
                raise ValueError("representation_auc needs --model-file")
            model = load_model(args.model_file)
            reps_tr = latent_representations(model, train, train.users)
            reps_te = latent_representations(model, test, test.users)
            value = metrics_mod.representation_auc(
                reps_tr, train.demographic[train.users],
                reps_te, test.demographic[test.users], seed=seed)
        else:
            raise ValueError(f"unknown metric {metric!r}")
        reports.append(metrics_mod.MetricReport(
            dataset_id=args.dataset_id, model=args.model_name, metric=metric,
            k=recs.k, seed=args.seed, replication=args.replication,
            value=float(value)))
        print(f"{metric}: {value:.4f}")
    metrics_mod.write_report(reports, args.out)
    return 0


def _cmd_sweep(args) -> int:
    if args.config:
        config = ExperimentConfig.from_dict(_load_json(args.config))
    else:
        if not args.param or not args.grid:
            raise ValueError("sweep needs --config or both --param and --grid")
        config = ExperimentConfig(
            sweep=SweepSpec(args.param,
                            tuple(float(v) for v in args.grid.split(",")),
                            target=args.target),
            metrics=tuple(args.metrics.split(",")),
            replications=args.replications,
        )
    import dataclasses

    config = dataclasses.replace(config, master_seed=args.seed,
                                 workers=args.workers)
    result = run_experiment(config)
    os.makedirs(args.out, exist_ok=True)
    result.write_csv(os.path.join(args.out, "sweep.csv"))
    result.write_aggregate_csv(os.path.join(args.out, "aggregate.csv"))
    n_err = sum(1 for r in result.rows if r.error)
    print(f"{len(result.rows)} rows ({n_err} flagged) -> {args.out}")
    return 2 if result.has_errors else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recparity",
        description="synthetic recommendation data, baseline recommenders, "
                    "and demographic-leakage metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    _common_flags(p)

    p = sub.add_parser("ingest", help="ingest MovieLens-1M style files")
    _common_flags(p)
    p.add_argument("--ratings", required=True)
    p.add_argument("--users", required=True)
    p.add_argument("--attribute", choices=("gender", "age"), required=True)
    p.add_argument("--min-rating", type=float, default=None)

    p = sub.add_parser("split", help="user-disjoint stratified split")
    _common_flags(p)
    p.add_argument("--interactions", required=True)
    p.add_argument("--demographics", required=True)
    p.add_argument("--test-ratio", type=float, default=0.2)

    p = sub.add_parser("recommend", help="run one recommender over a dataset")
    _common_flags(p)
    p.add_argument("--model", required=True,
                   choices=("pop", "rand", "dem_pop", "max_division", "latent"))
    p.add_argument("--train-interactions", required=True)
    p.add_argument("--train-demographics", required=True)
    p.add_argument("--target-interactions", required=True)
    p.add_argument("--target-demographics", required=True)
    p.add_argument("--model-file")
    p.add_argument("--k", type=int, default=40)

    p = sub.add_parser("train-latent", help="train the latent recommender")
    _common_flags(p)
    p.add_argument("--interactions", required=True)
    p.add_argument("--demographics", required=True)
    p.add_argument("--latent-dim", type=int, default=64)
    p.add_argument("--fairness-weight", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--learning-rate", type=float, default=0.3)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--mask-rate", type=float, default=0.5)

    p = sub.add_parser("evaluate", help="score recommendations with metrics")
    _common_flags(p)
    p.add_argument("--train-interactions", required=True)
    p.add_argument("--train-demographics", required=True)
    p.add_argument("--test-interactions", required=True)
    p.add_argument("--test-demographics", required=True)
    p.add_argument("--recommendations", required=True)
    p.add_argument("--train-recommendations")
    p.add_argument("--model-file")
    p.add_argument("--metrics", default="demographic_ratio_auc,item_ratio,kendall_tau")
    p.add_argument("--dataset-id", default="dataset")
    p.add_argument("--model-name", default="model")
    p.add_argument("--replication", type=int, default=0)

    p = sub.add_parser("sweep", help="run a parameter sweep with replications")
    _common_flags(p)
    p.add_argument("--param")
    p.add_argument("--grid", help="comma-separated values")
    p.add_argument("--target", choices=("generator", "model"),
                   default="generator")
    p.add_argument("--metrics",
                   default="demographic_ratio_auc,item_ratio,kendall_tau")
    p.add_argument("--replications", type=int, default=5)
    return parser


_COMMANDS = {
    "generate": _cmd_generate,
    "ingest": _cmd_ingest,
    "split": _cmd_split,
    "recommend": _cmd_recommend,
    "train-latent": _cmd_train_latent,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
