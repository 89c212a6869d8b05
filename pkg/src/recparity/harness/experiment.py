"""Experiment orchestration: generate or load a dataset, split it, run every
configured model, score every configured metric, and repeat over a parameter
grid with replications.

Seeds for a cell depend only on (master seed, sweep value, replication), so
reruns and parallel runs produce byte-identical result CSVs and removing one
model never changes another model's rows. Failures inside one cell are
recorded as flagged rows instead of aborting the sweep.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .. import metrics as metrics_mod
from ..datagen import GeneratorConfig, generate_dataset, with_overrides
from ..dataset import (
    DatasetSplit,
    InteractionDataset,
    RecommendationTable,
    split_by_user,
)
from ..io import read_dataset
from ..neuralauc import (
    ClassifierHyper,
    EmbeddingHyper,
    neural_auc_mean,
    sample_skipgram_pairs,
    train_item_embeddings,
)
from ..recommenders import (
    LatentHyper,
    latent_recommend,
    latent_representations,
    recommend_table,
    train_latent,
)
from ..seeding import SeedSpec

BASELINE_KINDS = ("pop", "rand", "dem_pop", "max_division")
KNOWN_METRICS = ("demographic_ratio_auc", "neural_auc", "item_ratio",
                 "kendall_tau", "representation_auc")

SWEEP_HEADER = ("sweep_param,sweep_value,dataset_id,model,metric,k,seed,"
                "replication,value,error")


@dataclass(frozen=True)
class ModelSpec:
    """One model to run: a baseline kind or a latent model configuration."""

    name: str
    kind: str
    fairness_weight: float = 0.0
    latent_hyper: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS + ("latent",):
            raise ValueError(f"unknown model kind {self.kind!r}")

    def hyper(self) -> LatentHyper:
        return LatentHyper(**self.latent_hyper)


def default_models() -> tuple[ModelSpec, ...]:
    return (
        ModelSpec("pop", "pop"),
        ModelSpec("rand", "rand"),
        ModelSpec("dem_pop", "dem_pop"),
        ModelSpec("max_division", "max_division"),
        ModelSpec("latent", "latent", fairness_weight=0.0),
        ModelSpec("latent_fair", "latent", fairness_weight=2.0),
    )


@dataclass(frozen=True)
class SweepSpec:
    """What to vary: a generator field, or the latent fairness weight."""

    param: str
    grid: tuple
    target: str = "generator"

    def __post_init__(self):
        if self.target not in ("generator", "model"):
            raise ValueError("sweep target must be 'generator' or 'model'")
        if len(self.grid) == 0:
            raise ValueError("sweep grid is empty")
        if self.target == "generator":
            if self.param not in GeneratorConfig.__dataclass_fields__:
                raise ValueError(
                    f"{self.param!r} is not a generator config field"
                )
        elif self.param != "fairness_weight" and \
                self.param not in LatentHyper.__dataclass_fields__:
            raise ValueError(f"{self.param!r} is not a latent model field")


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    ingest_interactions: str | None = None
    ingest_demographics: str | None = None
    models: tuple = field(default_factory=default_models)
    metrics: tuple = ("demographic_ratio_auc", "item_ratio", "kendall_tau")
    k: int = 40
    replications: int = 5
    sweep: SweepSpec = field(default_factory=lambda: SweepSpec("epsilon", (0.5,)))
    master_seed: int = 0
    test_ratio: float = 0.2
    workers: int = 1
    n_classifier_seeds: int = 5
    n_probe_seeds: int = 5
    embedding_dim: int = 32
    embedding_negatives: int = 10
    embedding_hyper: dict = field(default_factory=dict)
    classifier_hyper: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for m in self.metrics:
            if m not in KNOWN_METRICS:
                raise ValueError(f"unknown metric {m!r}")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ValueError("duplicate model names")
        if self.ingested and self.sweep.target == "generator":
            raise ValueError(
                "cannot sweep a generator parameter over an ingested dataset"
            )

    @property
    def ingested(self) -> bool:
        return self.ingest_interactions is not None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "generator" in d:
            d["generator"] = GeneratorConfig.from_dict(d["generator"])
        if "models" in d:
            d["models"] = tuple(
                m if isinstance(m, ModelSpec) else ModelSpec(**m)
                for m in d["models"]
            )
        if "sweep" in d and isinstance(d["sweep"], dict):
            sw = dict(d["sweep"])
            sw["grid"] = tuple(sw["grid"])
            d["sweep"] = SweepSpec(**sw)
        if "metrics" in d:
            d["metrics"] = tuple(d["metrics"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment config field(s): {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SweepRow:
    sweep_param: str
    sweep_value: object
    dataset_id: str
    model: str
    metric: str
    k: int
    seed: int
    replication: int
    value: float
    error: str = ""

    def to_csv(self) -> str:
        return (f"{self.sweep_param},{self.sweep_value!r},{self.dataset_id},"
                f"{self.model},{self.metric},{self.k},{self.seed},"
                f"{self.replication},{self.value!r},{self.error}")


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    @property
    def has_errors(self) -> bool:
        return any(r.error for r in self.rows)

    def values(self, model: str, metric: str, sweep_value=None) -> np.ndarray:
        got = [
            r.value for r in self.rows
            if r.model == model and r.metric == metric and not r.error
            and (sweep_value is None or r.sweep_value == sweep_value)
        ]
        return np.array(got)

    def aggregate(self):
        """(sweep_value, model, metric) -> (mean, std, n) over replications."""
        cells: dict[tuple, list] = {}
        for r in self.rows:
            if r.error:
                continue
            cells.setdefault((r.sweep_value, r.model, r.metric), []).append(r.value)
        out = []
        for key in sorted(cells, key=repr):
            vals = np.array(cells[key])
            out.append((*key, float(vals.mean()), float(vals.std()), len(vals)))
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(SWEEP_HEADER + "\n")
            for r in self.rows:
                fh.write(r.to_csv() + "\n")

    def write_aggregate_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("sweep_value,model,metric,mean,std,n\n")
            for value, model, metric, mean, std, n in self.aggregate():
                fh.write(f"{value!r},{model},{metric},{mean!r},{std!r},{n}\n")


def _coerce(param: str, value):
    """Sweep values arrive as floats from grids/CLI; int fields need ints."""
    int_fields = {"n_users", "n_items", "n_features", "tau",
                  "n_user_categories", "n_item_categories", "latent_dim",
                  "epochs", "batch_size"}
    return int(value) if param in int_fields else float(value)


@lru_cache(maxsize=8)
def _dataset_for(gen_config: GeneratorConfig, seed_path: tuple,
                 master_seed: int) -> InteractionDataset:
    return generate_dataset(gen_config, SeedSpec(master_seed, seed_path))


def _cell_dataset(config: ExperimentConfig, value, rep: int
                  ) -> tuple[str, InteractionDataset]:
    master = SeedSpec(config.master_seed)
    sweep = config.sweep
    if config.ingested:
        dataset = read_dataset(config.ingest_interactions,
                               config.ingest_demographics)
        return f"ingested:rep{rep}", dataset
    if sweep.target == "generator":
        gen = with_overrides(config.generator,
                             **{sweep.param: _coerce(sweep.param, value)})
        seed = master.child("dataset", sweep.param, repr(value), rep)
        dataset_id = f"gen:{sweep.param}={value!r}:rep{rep}"
    else:
        # model-parameter sweep: one dataset shared by every grid value and
        # replication; only model training seeds vary
        gen = config.generator
        seed = master.child("dataset")
        dataset_id = "gen:fixed"
    return dataset_id, _dataset_for(gen, seed.path, seed.master_seed)


def _train_and_recommend(spec: ModelSpec, value, split: DatasetSplit, k: int,
                         model_seed: SeedSpec, config: ExperimentConfig,
                         need_train_recs: bool):
    """Returns (latent model or None, recs for train users or None, recs for
    test users)."""
    if spec.kind == "latent":
        fairness = spec.fairness_weight
        if config.sweep.target == "model" and config.sweep.param == "fairness_weight":
            fairness = float(value)
        hyper = spec.hyper()
        if config.sweep.target == "model" and config.sweep.param != "fairness_weight":
            hyper = dataclasses.replace(
                hyper, **{config.sweep.param: _coerce(config.sweep.param, value)}
            )
        model = train_latent(split.train, hyper, fairness, model_seed)
        recs_test = latent_recommend_table(model, split.test, k)
        recs_train = (latent_recommend_table(model, split.train, k)
                      if need_train_recs else None)
        return model, recs_train, recs_test
    recs_test = recommend_table(spec.kind, split.train, split.test, k,
                                model_seed.child("test"))
    recs_train = (recommend_table(spec.kind, split.train, split.train, k,
                                  model_seed.child("train"))
                  if need_train_recs else None)
    return None, recs_train, recs_test


def latent_recommend_table(model, target: InteractionDataset,
                           k: int) -> RecommendationTable:
    rows = [latent_recommend(model, target.user_items(int(u)), k)
            for u in target.users]
    return RecommendationTable(k=k, users=target.users.copy(),
                               items=np.stack(rows))


def _run_cell(config: ExperimentConfig, value, rep: int) -> list[SweepRow]:
    master = SeedSpec(config.master_seed)
    sweep = config.sweep
    k = config.k

    def row(model, metric, val, error=""):
        return SweepRow(sweep.param, value, dataset_id, model, metric, k,
                        config.master_seed, rep, val, error)

    dataset_id = "unavailable"
    try:
        dataset_id, dataset = _cell_dataset(config, value, rep)
        split_seed = (master.child("split", sweep.param, repr(value), rep)
                      if sweep.target == "generator" else master.child("split"))
        split = split_by_user(dataset, config.test_ratio, split_seed)
    except Exception as exc:  # dataset-level failure poisons the whole cell
        msg = f"dataset: {exc}"
        return [row(m.name, metric, math.nan, msg)
                for m in config.models for metric in config.metrics]

    labels = dataset.demographic
    need_neural = "neural_auc" in config.metrics
    embeddings = None
    if need_neural:
        emb_seed = master.child("embeddings", sweep.param, repr(value), rep)
        pairs = sample_skipgram_pairs(split.train, seed=emb_seed)
        embeddings = train_item_embeddings(
            pairs, dim=config.embedding_dim,
            negatives=config.embedding_negatives,
            hyper=EmbeddingHyper(**config.embedding_hyper), seed=emb_seed,
        )
    table = metrics_mod.DemographicRatioTable.from_dataset(split.train)

    rows = []
    for spec in config.models:
        model_seed = master.child("model", spec.name, sweep.param,
                                  repr(value), rep)
        try:
            model, recs_train, recs_test = _train_and_recommend(
                spec, value, split, k, model_seed, config, need_neural
            )
        except Exception as exc:
            rows.extend(row(spec.name, metric, math.nan, f"model: {exc}")
                        for metric in config.metrics)
            continue
        for metric in config.metrics:
            try:
                if metric == "demographic_ratio_auc":
                    val = metrics_mod.demographic_ratio_auc(
                        split.train, recs_test, labels)
                elif metric == "item_ratio":
                    val = metrics_mod.item_ratio(recs_test, labels)
                elif metric == "kendall_tau":
                    agg = [metrics_mod.aggregate_group_ranking(
                        recs_test, labels, g, k) for g in (0, 1)]
                    val = metrics_mod.kendall_tau_extended(
                        agg[0].items, agg[1].items)
                elif metric == "neural_auc":
                    val = neural_auc_mean(
                        embeddings, table, recs_train, labels, recs_test,
                        labels, hyper=ClassifierHyper(**config.classifier_hyper),
                        seed=master.child("classifier", spec.name, sweep.param,
                                          repr(value), rep),
                        n_seeds=config.n_classifier_seeds,
                    )
                elif metric == "representation_auc":
                    if model is None:
                        raise ValueError(
                            "representation_auc requires a latent model")
                    reps_tr = latent_representations(
                        model, split.train, split.train.users)
                    reps_te = latent_representations(
                        model, split.test, split.test.users)
                    val = metrics_mod.representation_auc(
                        reps_tr, labels[split.train.users],
                        reps_te, labels[split.test.users],
                        n_probe_seeds=config.n_probe_seeds,
                        seed=master.child("probe", spec.name, sweep.param,
                                          repr(value), rep),
                    )
                rows.append(row(spec.name, metric, float(val)))
            except Exception as exc:
                rows.append(row(spec.name, metric, math.nan, f"metric: {exc}"))
    return rows


def run_experiment(config: ExperimentConfig) -> SweepResult:
    """Run the full grid x replications; cells are independent jobs."""
    cells = [(value, rep) for value in config.sweep.grid
             for rep in range(config.replications)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_cell, config, value, rep)
                       for value, rep in cells]
            chunks = [f.result() for f in futures]
    else:
        chunks = [_run_cell(config, value, rep) for value, rep in cells]
    rows = [r for chunk in chunks for r in chunk]
    return SweepResult(rows=tuple(rows))


def _with_sweep(config: ExperimentConfig, spec: SweepSpec) -> ExperimentConfig:
    return dataclasses.replace(config, sweep=spec)


def sweep_epsilon(config: ExperimentConfig, grid=None) -> SweepResult:
    """Vary preference overlap; the paper-scale default grid steps by 0.02."""
    if grid is None:
        grid = tuple(round(0.02 * i, 2) for i in range(1, 51))
    return run_experiment(_with_sweep(config, SweepSpec("epsilon", tuple(grid))))


def sweep_users(config: ExperimentConfig, grid=(500, 1000, 2000, 3000, 4000)
                ) -> SweepResult:
    return run_experiment(_with_sweep(config, SweepSpec("n_users", tuple(grid))))


def sweep_minority(config: ExperimentConfig,
                   grid=(0.1, 0.2, 0.3, 0.4, 0.5)) -> SweepResult:
    return run_experiment(
        _with_sweep(config, SweepSpec("minority_ratio", tuple(grid))))


def sweep_fairness(config: ExperimentConfig,
                   grid=(0.0, 0.5, 2.0, 8.0)) -> SweepResult:
    """Vary the latent adversary weight on one fixed dataset."""
    return run_experiment(
        _with_sweep(config, SweepSpec("fairness_weight", tuple(grid),
                                      target="model")))
