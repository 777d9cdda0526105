"""Same-period GDP-growth regression: linear baseline vs MLP, run through
the k-fold dual-checkpoint protocol end to end."""

import os

from gdpbench.pipeline import ExperimentConfig, run_experiment

DATA = os.path.join(os.path.dirname(__file__), "..", "data")
OUT = os.path.join(os.path.dirname(__file__), "out_regression")

for name in ("config_regression_linear.json", "config_regression_mlp.json"):
    cfg = ExperimentConfig.from_file(os.path.join(DATA, name))
    cfg.output_dir = OUT
    result = run_experiment(cfg, base_dir=DATA)
    run = result["run"]
    print(f"== {cfg.family} ==")
    print(f"  grid points: {run.grid}")
    print(f"  mean fold losses: {[f'{m:.4f}' for m in run.mean_losses]}")
    print(f"  winner: {run.grid[run.winner]} (fold losses "
          f"{[f'{v:.4f}' for v in run.fold_losses[run.winner]]})")
    for model_name, metrics in sorted(result["row"].metrics.items()):
        print(f"  {model_name}: MAE {metrics.mae:.4f}  MSE {metrics.mse:.4f}  "
              f"RMSE {metrics.rmse:.4f}")
    print(f"  report: {result['report_markdown']}")
