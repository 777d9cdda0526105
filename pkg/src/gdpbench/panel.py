"""Country x period x indicator panels: loading, splits, normalization,
sample construction, and light-feature merging.

Panel CSV format: header ``country,period,<indicator_1>,...,<indicator_n>,
<target>``; UTF-8; an empty cell means missing; decimal point only.
Period keys are ``"2015"`` (yearly) or ``"2015Q3"`` (quarterly).

Column convention throughout the package: indicator columns first, the
GDP-growth target last, i.e. a row is the vector (x_1, ..., x_n, y).
"""

import csv
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import lights as lightsmod
from .errors import ParseError, SchemaError, ValidationError
from .periods import next_period, period_year, validate_period

GDP_ONLY = "gdp_only"
MULTI_INDICATOR = "multi_indicator"

LAST_YEAR = "last_year"
LAST_TWO_YEARS = "last_two_years"

SCOPE_TRAIN_AND_TEST = "train_and_test"
SCOPE_TRAIN_ONLY = "train_only"


@dataclass(frozen=True)
class PanelSchema:
    """Names and roles of the panel columns.

    ``light_names`` marks the (possibly empty) suffix of ``indicator_names``
    that came from merged light features; windowing uses it to select the
    GDP-only channel set.
    """

    indicator_names: tuple
    target_name: str
    frequency: str
    light_names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "indicator_names", tuple(self.indicator_names))
        object.__setattr__(self, "light_names", tuple(self.light_names))
        names = self.indicator_names
        if self.target_name in names:
            raise SchemaError(f"target {self.target_name!r} also an indicator")
        if len(set(names)) != len(names):
            raise SchemaError("indicator names are not unique")
        if self.frequency not in ("yearly", "quarterly"):
            raise SchemaError(f"unknown frequency {self.frequency!r}")
        for light in self.light_names:
            if light not in names:
                raise SchemaError(f"light column {light!r} missing from indicators")

    @property
    def n_indicators(self) -> int:
        return len(self.indicator_names)

    @property
    def columns(self) -> tuple:
        return self.indicator_names + (self.target_name,)

    def fingerprint(self) -> str:
        blob = json.dumps(
            {"indicators": list(self.indicator_names), "target": self.target_name,
             "frequency": self.frequency, "lights": list(self.light_names)},
            sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Panel:
    """Immutable country x period x column data cube with a presence mask."""

    schema: PanelSchema
    countries: tuple
    periods: tuple
    values: np.ndarray  # (C, P, n+1) float64, NaN where absent
    present: np.ndarray  # (C, P, n+1) bool

    def __post_init__(self):
        c, p, k = self.values.shape
        if (len(self.countries), len(self.periods)) != (c, p):
            raise ValidationError("panel axes do not match value shape")
        if k != self.schema.n_indicators + 1:
            raise ValidationError("column count does not match schema")
        if list(self.periods) != sorted(set(self.periods)):
            raise ValidationError("periods must be strictly increasing")
        if not np.all(np.isfinite(self.values[self.present])):
            raise ValidationError("non-finite value marked present")

    @property
    def target_col(self) -> int:
        return self.schema.n_indicators

    def period_index(self, period) -> int:
        return self.periods.index(period)


@dataclass(frozen=True)
class ZVector:
    """One period's indicator vector plus the GDP-growth scalar."""

    indicators: np.ndarray
    gdp: float

    def as_array(self) -> np.ndarray:
        return np.append(self.indicators, self.gdp)


@dataclass(frozen=True)
class RegressionSample:
    country: str
    period: str
    x: np.ndarray  # (d,)
    y: float


@dataclass(frozen=True)
class WindowSample:
    country: str
    target_period: str
    inputs: np.ndarray  # (h, d)
    target: object  # float for univariate windows, ZVector otherwise


@dataclass(frozen=True)
class WindowSpec:
    """Window length, channel selection, and the light mode the panel carries."""

    h: int
    channels: str = GDP_ONLY
    light_mode: str = lightsmod.LIGHT_NONE

    def __post_init__(self):
        if self.h < 1:
            raise ValidationError(f"window length h={self.h} must be >= 1")
        if self.channels not in (GDP_ONLY, MULTI_INDICATOR):
            raise ValidationError(f"unknown channels {self.channels!r}")
        if self.light_mode not in lightsmod.LIGHT_MODES:
            raise ValidationError(f"unknown light mode {self.light_mode!r}")

    def dims(self, schema: PanelSchema) -> int:
        light = len(schema.light_names)
        if self.channels == GDP_ONLY:
            return 1 + light
        return schema.n_indicators + 1


@dataclass(frozen=True)
class SplitPolicy:
    """Which trailing span becomes the test set.

    The 2013-2019 study window keeps only its final year for testing;
    every other window keeps its final two years.
    """

    mode: str
    derived_from_period_range: bool = False

    def __post_init__(self):
        if self.mode not in (LAST_YEAR, LAST_TWO_YEARS):
            raise ValidationError(f"unknown split mode {self.mode!r}")

    @classmethod
    def from_period_label(cls, label: str) -> "SplitPolicy":
        mode = LAST_YEAR if label == "13-19" else LAST_TWO_YEARS
        return cls(mode=mode, derived_from_period_range=True)


# ----- loading ----------------------------------------------------------------


def load_panel(path, schema: PanelSchema) -> Panel:
    """Read a panel CSV; empty cells become mask-false entries.

    Rows are normalized to (country, period) sort regardless of file order.
    """
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["country", "period", *schema.columns]
        if header != expected:
            raise SchemaError(
                f"{path}: header mismatch\n  got:  {header}\n  want: {expected}")
        width = len(expected)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"{path}: expected {width} cells, got {len(row)}",
                                 line=lineno)
            country, period = row[0].strip(), row[1].strip()
            if not country:
                raise ParseError(f"{path}: empty country code", line=lineno)
            try:
                validate_period(period, schema.frequency)
            except ValidationError as exc:
                raise ParseError(f"{path}: {exc}", line=lineno) from exc
            key = (country, period)
            if key in rows:
                raise ValidationError(
                    f"{path} line {lineno}: duplicate row for {key}")
            cells = []
            for name, cell in zip(schema.columns, row[2:]):
                cell = cell.strip()
                if cell == "":
                    cells.append(None)
                    continue
                try:
                    value = float(cell)
                except ValueError as exc:
                    raise ParseError(
                        f"{path}: bad numeric cell {cell!r} in {name!r}",
                        line=lineno) from exc
                if not np.isfinite(value):
                    raise ValidationError(
                        f"{path} line {lineno}: non-finite value in {name!r}")
                cells.append(value)
            rows[key] = cells

    countries = tuple(sorted({c for c, _ in rows}))
    periods = tuple(sorted({p for _, p in rows}))
    k = schema.n_indicators + 1
    values = np.full((len(countries), len(periods), k), np.nan)
    present = np.zeros((len(countries), len(periods), k), dtype=bool)
    cindex = {c: i for i, c in enumerate(countries)}
    pindex = {p: i for i, p in enumerate(periods)}
    for (country, period), cells in rows.items():
        ci, pi = cindex[country], pindex[period]
        for j, cell in enumerate(cells):
            if cell is not None:
                values[ci, pi, j] = cell
                present[ci, pi, j] = True
    return Panel(schema=schema, countries=countries, periods=periods,
                 values=values, present=present)


# ----- time split ---------------------------------------------------------------


def _subset_periods(panel: Panel, keep) -> Panel:
    idx = [i for i, p in enumerate(panel.periods) if p in keep]
    return Panel(schema=panel.schema, countries=panel.countries,
                 periods=tuple(panel.periods[i] for i in idx),
                 values=panel.values[:, idx, :], present=panel.present[:, idx, :])


def split_by_time(panel: Panel, policy: SplitPolicy):
    """Split into (train, test); the test set is the final one or two
    calendar years of the panel."""
    years = sorted({period_year(p) for p in panel.periods})
    span = 1 if policy.mode == LAST_YEAR else 2
    test_years = set(years[-span:])
    test_periods = {p for p in panel.periods if period_year(p) in test_years}
    train_periods = [p for p in panel.periods if p not in test_periods]
    if len(train_periods) < 3:
        raise ValidationError(
            f"insufficient history: {len(train_periods)} train periods, need >= 3")
    return _subset_periods(panel, set(train_periods)), _subset_periods(panel, test_periods)


# ----- min-max normalization ------------------------------------------------


@dataclass(frozen=True)
class Normalizer:
    """Per-column min-max scaler. Degenerate (constant) columns map to 0.0."""

    col_min: np.ndarray
    col_max: np.ndarray
    fit_scope: str

    def __post_init__(self):
        if np.any(self.col_max < self.col_min):
            raise ValidationError("normalizer max < min")

    def transform_values(self, values: np.ndarray) -> np.ndarray:
        span = self.col_max - self.col_min
        safe = np.where(span == 0.0, 1.0, span)
        out = (values - self.col_min) / safe
        degenerate = span == 0.0
        if np.any(degenerate):
            out = np.where(degenerate, 0.0, out)
        return out

    def inverse_values(self, values: np.ndarray) -> np.ndarray:
        return values * (self.col_max - self.col_min) + self.col_min

    def transform_panel(self, panel: Panel) -> Panel:
        values = self.transform_values(panel.values)
        values = np.where(panel.present, values, np.nan)
        return Panel(schema=panel.schema, countries=panel.countries,
                     periods=panel.periods, values=values, present=panel.present)

    def inverse_column(self, col: int, arr):
        span = float(self.col_max[col] - self.col_min[col])
        return np.asarray(arr) * span + float(self.col_min[col])


def fit_normalizer(train: Panel, test: Panel | None,
                   scope: str = SCOPE_TRAIN_AND_TEST) -> Normalizer:
    """Column-wise min/max over the present values of the chosen scope.

    The default train_and_test scope reproduces the study protocol; the
    train_only scope avoids leaking test statistics.
    """
    if scope not in (SCOPE_TRAIN_AND_TEST, SCOPE_TRAIN_ONLY):
        raise ValidationError(f"unknown normalizer scope {scope!r}")
    panels = [train]
    if scope == SCOPE_TRAIN_AND_TEST:
        if test is None:
            raise ValidationError("train_and_test scope requires a test panel")
        panels.append(test)
    k = train.schema.n_indicators + 1
    col_min = np.empty(k)
    col_max = np.empty(k)
    for j, name in enumerate(train.schema.columns):
        pooled = np.concatenate(
            [p.values[:, :, j][p.present[:, :, j]] for p in panels])
        if pooled.size == 0:
            raise ValidationError(f"column {name!r} has no present values in scope")
        col_min[j] = pooled.min()
        col_max[j] = pooled.max()
    return Normalizer(col_min=col_min, col_max=col_max, fit_scope=scope)


# ----- sample construction -------------------------------------------------


def make_regression_samples(panel: Panel) -> list:
    """One (x, y) sample per fully-present (country, period) row,
    ordered by country then period."""
    samples = []
    n = panel.schema.n_indicators
    for ci, country in enumerate(panel.countries):
        for pi, period in enumerate(panel.periods):
            if panel.present[ci, pi].all():
                samples.append(RegressionSample(
                    country=country, period=period,
                    x=panel.values[ci, pi, :n].copy(),
                    y=float(panel.values[ci, pi, n])))
    return samples


def _window_columns(panel: Panel, spec: WindowSpec) -> list:
    """Column indices entering windows, GDP last."""
    schema = panel.schema
    expect_light = lightsmod.light_column_names(spec.light_mode, schema.frequency)
    if tuple(schema.light_names) != tuple(expect_light):
        raise ValidationError(
            f"window light mode {spec.light_mode!r} expects light columns "
            f"{expect_light}, panel has {schema.light_names}")
    if spec.channels == MULTI_INDICATOR:
        return list(range(schema.n_indicators + 1))
    light_idx = [schema.indicator_names.index(name) for name in schema.light_names]
    return light_idx + [panel.target_col]


def make_window_samples(panel: Panel, spec: WindowSpec) -> list:
    """Sliding (h-window, next value) samples over fully-present runs.

    Missing entries and period gaps break runs; nothing is imputed. A run
    of length T yields max(0, T - h) samples. Univariate windows carry a
    scalar target; any wider window carries the full next z vector for
    vector autoregression.
    """
    cols = _window_columns(panel, spec)
    h = spec.h
    samples = []
    for ci, country in enumerate(panel.countries):
        ok = panel.present[ci][:, cols].all(axis=1)
        runs = []
        start = None
        for pi in range(len(panel.periods)):
            contiguous = (
                pi > 0 and ok[pi - 1]
                and next_period(panel.periods[pi - 1], panel.schema.frequency)
                == panel.periods[pi])
            if ok[pi]:
                if start is None or not contiguous:
                    if start is not None:
                        runs.append((start, pi - 1))
                    start = pi
            else:
                if start is not None:
                    runs.append((start, pi - 1))
                    start = None
        if start is not None:
            runs.append((start, len(panel.periods) - 1))
        for r0, r1 in runs:
            for t in range(r0 + h, r1 + 1):
                window = panel.values[ci, t - h:t][:, cols]
                row = panel.values[ci, t, cols]
                if len(cols) == 1:
                    target = float(row[0])
                else:
                    target = ZVector(indicators=row[:-1].copy(), gdp=float(row[-1]))
                samples.append(WindowSample(
                    country=country, target_period=panel.periods[t],
                    inputs=window.copy(), target=target))
    return samples


# ----- light feature merge ----------------------------------------------------


def merge_light_features(panel: Panel, table, mode: str) -> Panel:
    """Append per-period light feature columns ahead of the target column.

    Every (country, period) that has any observed value must be covered by
    the monthly light table; coverage gaps raise naming the cell. Rows that
    are entirely absent stay absent in the new columns too.
    """
    if mode == lightsmod.LIGHT_NONE:
        return panel
    if panel.schema.light_names:
        raise ValidationError("panel already carries light columns")
    names = lightsmod.light_column_names(mode, panel.schema.frequency)
    new_schema = PanelSchema(
        indicator_names=panel.schema.indicator_names + names,
        target_name=panel.schema.target_name,
        frequency=panel.schema.frequency,
        light_names=names)
    c, p, k = panel.values.shape
    L = len(names)
    values = np.full((c, p, k + L), np.nan)
    present = np.zeros((c, p, k + L), dtype=bool)
    values[:, :, :k - 1] = panel.values[:, :, :-1]
    present[:, :, :k - 1] = panel.present[:, :, :-1]
    values[:, :, -1] = panel.values[:, :, -1]
    present[:, :, -1] = panel.present[:, :, -1]
    series_cache = {}
    for ci, country in enumerate(panel.countries):
        for pi, period in enumerate(panel.periods):
            if not panel.present[ci, pi].any():
                continue
            if country not in series_cache:
                series_cache[country] = table.series_for(country)
            feats = lightsmod.period_features(series_cache[country], period, mode)
            values[ci, pi, k - 1:k - 1 + L] = feats
            present[ci, pi, k - 1:k - 1 + L] = True
    return Panel(schema=new_schema, countries=panel.countries,
                 periods=panel.periods, values=values, present=present)
