"""recparity: synthetic recommendation datasets with controllable demographic
structure, baseline and latent-factor recommenders, and metrics that measure
how much user demographics leak into representations and top-k output."""

from .datagen import (
    GeneratorConfig,
    LongTailParams,
    fit_log_normal,
    generate_dataset,
    sample_long_tail,
)
from .dataset import (
    DatasetSplit,
    InteractionDataset,
    RecommendationTable,
    minority_ratio,
    split_by_user,
)
from .io import read_dataset, read_recommendations, write_dataset, write_recommendations
from .metrics import (
    DemographicRatioTable,
    MetricReport,
    aggregate_group_ranking,
    auc_from_scores,
    demographic_ratio,
    demographic_ratio_auc,
    item_ratio,
    kendall_tau_extended,
    representation_auc,
)
from .seeding import SeedSpec

__version__ = "0.1.0"

__all__ = [
    "SeedSpec",
    "InteractionDataset",
    "RecommendationTable",
    "DatasetSplit",
    "split_by_user",
    "minority_ratio",
    "read_dataset",
    "write_dataset",
    "read_recommendations",
    "write_recommendations",
    "GeneratorConfig",
    "LongTailParams",
    "fit_log_normal",
    "sample_long_tail",
    "generate_dataset",
    "auc_from_scores",
    "demographic_ratio",
    "DemographicRatioTable",
    "demographic_ratio_auc",
    "item_ratio",
    "aggregate_group_ranking",
    "kendall_tau_extended",
    "representation_auc",
    "MetricReport",
    "__version__",
]
