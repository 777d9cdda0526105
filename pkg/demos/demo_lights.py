"""Nighttime-light features: zonal statistics over monthly rasters, then
merged into a panel as extra indicator columns."""

import os

from gdpbench.lights import (
    LIGHT_EVERY_MONTH_MEAN,
    LIGHT_MEAN,
    LIGHT_SUM_MEAN_STD,
    LightTable,
    load_mask,
    load_raster,
    period_features,
    zonal_stats,
)
from gdpbench.panel import PanelSchema, load_panel, make_regression_samples, merge_light_features

DATA = os.path.join(os.path.dirname(__file__), "..", "data")
RASTERS = os.path.join(DATA, "rasters_example")

# One year of 8x8 example rasters plus a country mask
mask = load_mask(os.path.join(RASTERS, "EXA.mask"), country="EXA")
print(f"mask covers {int(mask.cells.sum())}/{mask.cells.size} cells")
table = LightTable()
for month in range(1, 13):
    grid = load_raster(os.path.join(RASTERS, f"2019_{month:02d}.rast"))
    total, mean, std = zonal_stats(grid, mask)
    table.add("EXA", 2019, month, total, mean, std)
    if month <= 3:
        print(f"2019-{month:02d}: sum {total:9.2f}  mean {mean:6.2f}  std {std:5.2f}")

series = table.series_for("EXA")
print("period features for 2019:")
for mode in (LIGHT_SUM_MEAN_STD, LIGHT_MEAN, LIGHT_EVERY_MONTH_MEAN):
    feats = period_features(series, "2019", mode)
    print(f"  {mode}: {len(feats)} values, first {feats[0]:.3f}")

# Merging grows the regression dimensionality: 13 -> 16 / 14 / 25
import json

schema_raw = json.load(open(os.path.join(DATA, "schema_yearly.json")))
schema = PanelSchema(tuple(schema_raw["indicators"]), schema_raw["target"],
                     schema_raw["frequency"])
panel = load_panel(os.path.join(DATA, "synthetic_yearly.csv"), schema)
lights = LightTable.from_csv(os.path.join(DATA, "lights_monthly.csv"))
for mode in (LIGHT_SUM_MEAN_STD, LIGHT_MEAN, LIGHT_EVERY_MONTH_MEAN):
    merged = merge_light_features(panel, lights, mode)
    dims = make_regression_samples(merged)[0].x.shape[0]
    print(f"yearly panel + {mode}: x-dim {dims}")
