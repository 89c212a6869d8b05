"""Run a small epsilon sweep through the experiment harness and leave a CSV
that the plotting frontend can render.

The harness derives every cell's seed from (master seed, sweep value,
replication), so rerunning this script reproduces the CSV byte for byte.
Render the output with the TypeScript frontend, e.g.:

    node frontend/dist/src/cli.js render \
        --csv demos/out/sweep.csv --kind lines \
        --x epsilon --y demographic_ratio_auc --out demos/out/lines.svg
"""

import os

from recparity.datagen import GeneratorConfig
from recparity.harness import ExperimentConfig, ModelSpec, SweepSpec, run_experiment

config = ExperimentConfig(
    generator=GeneratorConfig(n_users=600, n_items=1200),
    models=(
        ModelSpec("pop", "pop"),
        ModelSpec("rand", "rand"),
        ModelSpec("dem_pop", "dem_pop"),
        ModelSpec("latent", "latent",
                  latent_hyper={"latent_dim": 32, "epochs": 20}),
    ),
    metrics=("demographic_ratio_auc", "item_ratio", "kendall_tau"),
    k=40,
    replications=3,
    sweep=SweepSpec("epsilon", (0.1, 0.4, 0.7, 1.0)),
    master_seed=99,
)

result = run_experiment(config)
os.makedirs("demos/out", exist_ok=True)
result.write_csv("demos/out/sweep.csv")
result.write_aggregate_csv("demos/out/aggregate.csv")

print(f"{len(result.rows)} rows -> demos/out/sweep.csv")
print("\nmean demographic_ratio_auc by (epsilon, model):")
for value, model, metric, mean, std, n in result.aggregate():
    if metric == "demographic_ratio_auc":
        print(f"  epsilon={value:<4} {model:10s} {mean:.3f} +/- {std:.3f}")
