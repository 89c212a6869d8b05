from .baselines import (
    PopularityIndex,
    recommend_dem_pop,
    recommend_max_division,
    recommend_pop,
    recommend_rand,
    recommend_table,
)
from .latent import (
    LatentHyper,
    LatentModel,
    latent_recommend,
    latent_representations,
    load_model,
    save_model,
    train_latent,
)

__all__ = [
    "PopularityIndex",
    "recommend_pop",
    "recommend_rand",
    "recommend_dem_pop",
    "recommend_max_division",
    "recommend_table",
    "LatentHyper",
    "LatentModel",
    "train_latent",
    "latent_representations",
    "latent_recommend",
    "save_model",
    "load_model",
]
