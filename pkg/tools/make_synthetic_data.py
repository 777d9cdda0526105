"""Regenerate the checked-in synthetic datasets under data/.

Deterministic (fixed seeds); rerunning must reproduce the same bytes.
"""

import csv
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gdpbench.lights import BrightnessGrid, CountryMask, LightTable, save_mask, save_raster, zonal_stats  # noqa: E402

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")

YEARLY_COUNTRIES = [
    "USA", "CHN", "DEU", "JPN", "IND", "GBR", "FRA", "BRA", "ITA", "CAN",
    "RUS", "MEX", "AUS", "KOR", "ESP", "IDN", "NLD", "TUR", "SAU", "CHE", "POL",
]
QUARTERLY_COUNTRIES = YEARLY_COUNTRIES[:8]

YEARLY_INDICATORS = [
    "Rural population growth (annual %)",
    "General government final consumption expenditure (annual % growth)",
    "Consumer price index (2010 = 100)",
    "Exports of goods and services (annual % growth)",
    "Urban population growth (annual %)",
    "Population growth (annual %)",
    "Inflation, GDP deflator (annual %)",
    "Imports of goods and services (annual % growth)",
    "Final consumption expenditure (annual % growth)",
    "Unemployment, total (% of total labor force) (national estimate)",
    "Inflation, consumer prices (annual %)",
    "Gross fixed capital formation (annual % growth)",
    "Households and NPISHs Final consumption expenditure (annual % growth)",
]
YEARLY_TARGET = "GDP growth (annual %)"

QUARTERLY_INDICATORS = [
    "Export Value", "Industrial Added Value", "Stock Market Capitalization",
    "Balance of Payments - Financial Account Balance",
    "Balance of Payments - Current Account Balance",
    "Balance of Payments - Current Account Credit",
    "Balance of Payments - Current Account Debit",
    "Balance of Payments - Capital Account Balance",
    "Balance of Payments - Capital Account Credit",
    "Balance of Payments - Capital Account Debit",
    "Overall Balance of Payments",
    "International Investment Position - Assets",
    "International Investment Position - Liabilities",
    "Net International Investment Position",
    "Import Value", "Nominal Effective Exchange Rate", "Retail Sales",
    "CPI (Consumer Price Index)", "Unemployment Rate",
    "Central Bank Policy Rate",
]
QUARTERLY_TARGET = "GDP growth (quarterly %)"


def fmt(value):
    return f"{value:.6f}"


def write_panel(path, countries, periods, indicators, target, rng, missing_cells):
    n = len(indicators)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country", "period", *indicators, target])
        for ci, country in enumerate(countries):
            base = rng.normal(2.0, 0.6)
            level = rng.normal(0.0, 1.0, size=n)
            gdp_prev = base + rng.normal(0, 0.3)
            for pi, period in enumerate(periods):
                shock = rng.normal(0, 0.4)
                values = level + 0.6 * rng.normal(0, 0.5, size=n) + shock
                level = 0.7 * level + 0.3 * values
                gdp = (0.45 * gdp_prev + 0.3 * values[:3].mean()
                       - 0.15 * values[3] + 0.25 * base + rng.normal(0, 0.25))
                gdp_prev = gdp
                cells = [fmt(v) for v in values] + [fmt(gdp)]
                for j in range(n + 1):
                    if (country, period, j) in missing_cells:
                        cells[j] = ""
                writer.writerow([country, period, *cells])
    print(f"wrote {path}")


def pick_missing(rng, countries, periods, n_cols, count):
    cells = set()
    while len(cells) < count:
        cells.add((countries[rng.integers(len(countries))],
                   periods[rng.integers(len(periods))],
                   int(rng.integers(n_cols))))
    return cells


def write_lights(path, countries, years, rng):
    table = LightTable()
    for country in countries:
        scale = float(rng.uniform(50, 500))
        for year in years:
            growth = 1.0 + 0.02 * (year - years[0])
            for month in range(1, 13):
                season = 1.0 + 0.1 * np.sin(2 * np.pi * month / 12)
                mean = scale * growth * season * float(rng.uniform(0.95, 1.05))
                table.add(country, year, month,
                          mean * 1000, mean, mean * float(rng.uniform(0.1, 0.3)))
    table.to_csv(path)
    print(f"wrote {path}")


def write_example_rasters(out_dir, rng):
    os.makedirs(out_dir, exist_ok=True)
    h = w = 8
    cells = rng.random((h, w)) < 0.55
    cells[3:5, 3:5] = True
    mask = CountryMask(width=w, height=h, cells=cells, country="EXA")
    save_mask(os.path.join(out_dir, "EXA.mask"), mask)
    table = LightTable()
    for month in range(1, 13):
        values = (rng.random((h, w)) * 40 * (1 + 0.2 * np.sin(month))).astype(np.float32)
        grid = BrightnessGrid(width=w, height=h, values=values, year=2019, month=month)
        save_raster(os.path.join(out_dir, f"2019_{month:02d}.rast"), grid)
        total, mean, std = zonal_stats(grid, mask)
        table.add("EXA", 2019, month, total, mean, std)
    table.to_csv(os.path.join(out_dir, "expected_lights.csv"))
    print(f"wrote {out_dir}")


def main():
    os.makedirs(DATA_DIR, exist_ok=True)
    rng = np.random.default_rng(20240613)
    years = [f"{y}" for y in range(2013, 2020)]
    missing = pick_missing(rng, YEARLY_COUNTRIES, years, 14, 10)
    write_panel(os.path.join(DATA_DIR, "synthetic_yearly.csv"),
                YEARLY_COUNTRIES, years, YEARLY_INDICATORS, YEARLY_TARGET,
                np.random.default_rng(11), missing)

    quarters = [f"{y}Q{q}" for y in range(2013, 2020) for q in range(1, 5)]
    missing_q = pick_missing(rng, QUARTERLY_COUNTRIES, quarters, 21, 6)
    write_panel(os.path.join(DATA_DIR, "synthetic_quarterly.csv"),
                QUARTERLY_COUNTRIES, quarters, QUARTERLY_INDICATORS,
                QUARTERLY_TARGET, np.random.default_rng(12), missing_q)

    write_lights(os.path.join(DATA_DIR, "lights_monthly.csv"),
                 YEARLY_COUNTRIES, list(range(2013, 2020)),
                 np.random.default_rng(13))

    write_example_rasters(os.path.join(DATA_DIR, "rasters_example"),
                          np.random.default_rng(14))


if __name__ == "__main__":
    main()
