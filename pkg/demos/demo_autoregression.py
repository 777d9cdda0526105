"""Quarterly GDP-growth autoregression from its own history: linear AR on
flattened windows vs an LSTM, h = 8 quarters."""

import json
import os

from gdpbench.pipeline import ExperimentConfig, run_experiment

DATA = os.path.join(os.path.dirname(__file__), "..", "data")
OUT = os.path.join(os.path.dirname(__file__), "out_autoregression")

with open(os.path.join(DATA, "config_windowed_lstm.json")) as fh:
    base = json.load(fh)

linear_cfg = dict(base, family="linear", model={}, grid={"ridge_eps": [0.0, 0.01]},
                  train={}, output_dir=OUT)
lstm_cfg = dict(base, output_dir=OUT)

for raw in (linear_cfg, lstm_cfg):
    cfg = ExperimentConfig.from_dict(raw)
    result = run_experiment(cfg, base_dir=DATA)
    print(f"== {cfg.family}, h={cfg.window['h']} ==")
    for model_name, metrics in sorted(result["row"].metrics.items()):
        print(f"  {model_name}: MAE {metrics.mae:.4f}  MSE {metrics.mse:.4f}  "
              f"RMSE {metrics.rmse:.4f}")
