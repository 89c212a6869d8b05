from .experiment import (
    ExperimentConfig,
    ModelSpec,
    SweepResult,
    SweepRow,
    SweepSpec,
    run_experiment,
    sweep_epsilon,
    sweep_fairness,
    sweep_minority,
    sweep_users,
)
from .ingest import IngestResult, ingest_movielens

__all__ = [
    "ExperimentConfig",
    "ModelSpec",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "run_experiment",
    "sweep_epsilon",
    "sweep_users",
    "sweep_minority",
    "sweep_fairness",
    "IngestResult",
    "ingest_movielens",
]
