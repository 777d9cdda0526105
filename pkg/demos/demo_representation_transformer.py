"""Representation Transformer on stub embeddings.

Each indicator becomes a token: a 6144-dim text embedding (here a
deterministic stub standing in for an LLM) projected down, with the
indicator's value replicated onto the end. The same trained parameters
accept panels with different indicator counts.
"""

import os

import numpy as np

from gdpbench.embeddings import load_embeddings
from gdpbench.models import RTConfig, RTToken, RepresentationTransformer, rt_forward
from gdpbench.pipeline import ExperimentConfig, run_experiment

DATA = os.path.join(os.path.dirname(__file__), "..", "data")
OUT = os.path.join(os.path.dirname(__file__), "out_rt")

fixture = load_embeddings(os.path.join(DATA, "embeddings_fixture.nne"))
print(f"fixture: {len(fixture.records)} embeddings, dim {fixture.dim}, "
      f"source {fixture.meta['source']}")

ids = [r.indicator_id for r in fixture.records
       if not r.indicator_id.startswith("light_")]
cfg = RTConfig(embed_dim=fixture.dim, proj_dim=16, value_dim=8, depth=1, heads=2)
model = RepresentationTransformer(cfg)
params = model.init_params(0)

rng = np.random.default_rng(0)
tokens13 = [RTToken(embedding=fixture.vector_for(i), value=float(rng.normal()))
            for i in ids]
print(f"forward with 13 tokens: {rt_forward(cfg, params, tokens13):+.4f}")
print(f"forward with  5 tokens: {rt_forward(cfg, params, tokens13[:5]):+.4f} "
      "(same parameters, variable indicator count)")

exp = ExperimentConfig.from_file(os.path.join(DATA, "config_regression_rt.json"))
exp.output_dir = OUT
result = run_experiment(exp, base_dir=DATA)
for model_name, metrics in sorted(result["row"].metrics.items()):
    print(f"{model_name}: MAE {metrics.mae:.4f}  MSE {metrics.mse:.4f}  "
          f"RMSE {metrics.rmse:.4f}")
