"""Audit every differentiable model family against central finite
differences at desk sizes."""

import numpy as np

from gdpbench.nn import gradient_check
from gdpbench.training import build_model

CASES = {
    "mlp": ({"input_dim": 4, "hidden": (6,), "activation": "tanh"},
            lambda rng: rng.normal(size=(3, 4)), 3),
    "lstm": ({"input_dim": 2, "hidden_size": 4},
             lambda rng: rng.normal(size=(2, 4, 2)), 2),
    "patch": ({"window": 4, "channels": 2, "patch_len": 2, "stride": 2,
               "d_model": 4, "heads": 2, "depth": 1},
              lambda rng: rng.normal(size=(2, 4, 2)), 2),
    "rt": ({"embed_dim": 8, "proj_dim": 4, "value_dim": 2, "depth": 1,
            "heads": 2, "max_tokens": 8},
           lambda rng: (rng.normal(size=(2, 4, 8)), rng.normal(size=(2, 4))), 2),
}

for family, (config, sampler, batch) in CASES.items():
    model = build_model(family, config)
    params = model.init_params(0)
    x = sampler(np.random.default_rng(1))
    g, pred = model.build(params, batch, x)
    loss = g.mean(g.mul(pred, pred))
    report = gradient_check(g, loss, model.bindings(x), eps=1e-5)
    n_params = sum(v.size for v in params.values())
    print(f"{family:6s}: {n_params:5d} parameters, "
          f"max relative error {report.max_rel_err:.2e}")
