"""Walk through the data layer: load a panel, split by time, normalize,
and build regression + window samples."""

import os

from gdpbench.panel import (
    GDP_ONLY,
    MULTI_INDICATOR,
    PanelSchema,
    SplitPolicy,
    WindowSpec,
    fit_normalizer,
    load_panel,
    make_regression_samples,
    make_window_samples,
    split_by_time,
)

DATA = os.path.join(os.path.dirname(__file__), "..", "data")

# Quarterly panel: 8 countries x 28 quarters x 20 indicators + GDP growth
import json

schema_raw = json.load(open(os.path.join(DATA, "schema_quarterly.json")))
schema = PanelSchema(tuple(schema_raw["indicators"]), schema_raw["target"],
                     schema_raw["frequency"])
panel = load_panel(os.path.join(DATA, "synthetic_quarterly.csv"), schema)
print(f"panel: {len(panel.countries)} countries x {len(panel.periods)} periods "
      f"x {panel.values.shape[2]} columns")
print(f"missing cells: {int((~panel.present).sum())}")

# The 2013-2019 study window tests on the final year only
policy = SplitPolicy.from_period_label("13-19")
train, test = split_by_time(panel, policy)
print(f"split: train {train.periods[0]}..{train.periods[-1]}, "
      f"test {test.periods[0]}..{test.periods[-1]}")

# Min-max normalization over train+test, as the protocol prescribes
norm = fit_normalizer(train, test)
normalized = norm.transform_panel(panel)
print(f"gdp column range after scaling: "
      f"[{normalized.values[..., -1][normalized.present[..., -1]].min():.3f}, "
      f"{normalized.values[..., -1][normalized.present[..., -1]].max():.3f}]")

# Same-period regression samples: predict y_t from (x_1..x_n) at t
samples = make_regression_samples(normalized)
print(f"regression samples: {len(samples)}, x-dim {samples[0].x.shape[0]}")

# GDP-only autoregression windows: predict y_t from (y_(t-8)..y_(t-1))
uni = make_window_samples(normalized, WindowSpec(h=8, channels=GDP_ONLY))
print(f"gdp-only windows (h=8): {len(uni)}, window shape {uni[0].inputs.shape}")

# Vector autoregression windows: predict the whole z_t
multi = make_window_samples(normalized, WindowSpec(h=8, channels=MULTI_INDICATOR))
print(f"multi-indicator windows (h=8): {len(multi)}, "
      f"window shape {multi[0].inputs.shape}, "
      f"target z-dim {multi[0].target.as_array().shape[0]}")
