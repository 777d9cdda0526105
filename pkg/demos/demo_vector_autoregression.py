"""Multi-indicator prediction: forecast the whole indicator vector z_t and
score only its GDP component.

The channel-independent patch transformer is trained with the weighted
loss (indicator squared errors plus W_GDP times the GDP squared error);
W_GDP itself sits on the hyperparameter grid.
"""

import os

import numpy as np

from gdpbench.pipeline import ExperimentConfig, run_experiment
from gdpbench.training import weighted_multivariate_loss

DATA = os.path.join(os.path.dirname(__file__), "..", "data")
OUT = os.path.join(os.path.dirname(__file__), "out_vector_ar")

# the loss on one sample, by hand: indicators then GDP last
pred = np.array([0.2, -0.1, 0.5])
target = np.array([0.0, 0.0, 0.0])
for w in (1.0, 10.0):
    print(f"weighted loss at W_GDP={w}: "
          f"{weighted_multivariate_loss(pred, target, w):.4f}")

cfg = ExperimentConfig.from_file(os.path.join(DATA, "config_windowed_patch.json"))
cfg.output_dir = OUT
result = run_experiment(cfg, base_dir=DATA)
run = result["run"]
print(f"grid (lr x W_GDP): {run.grid}")
print(f"winner: {run.grid[run.winner]}")
for model_name, metrics in sorted(result["row"].metrics.items()):
    print(f"{model_name}: MAE {metrics.mae:.4f}  MSE {metrics.mse:.4f}  "
          f"RMSE {metrics.rmse:.4f}")
print("validation/test scores use the GDP component only, on the raw scale")
