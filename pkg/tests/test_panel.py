import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdpbench.errors import ParseError, SchemaError, ValidationError
from gdpbench.lights import LIGHT_EVERY_MONTH_MEAN, LIGHT_MEAN, LIGHT_NONE, LIGHT_SUM_MEAN_STD, LightTable
from gdpbench.panel import (
    GDP_ONLY,
    LAST_TWO_YEARS,
    LAST_YEAR,
    MULTI_INDICATOR,
    Panel,
    PanelSchema,
    SplitPolicy,
    WindowSpec,
    ZVector,
    fit_normalizer,
    load_panel,
    make_regression_samples,
    make_window_samples,
    merge_light_features,
    split_by_time,
)
from gdpbench.periods import next_period


def make_panel(countries, periods, n_ind, frequency="yearly", fill=None, mask=None):
    schema = PanelSchema(
        indicator_names=tuple(f"ind{j}" for j in range(n_ind)),
        target_name="gdp", frequency=frequency)
    c, p, k = len(countries), len(periods), n_ind + 1
    if fill is None:
        rng = np.random.default_rng(0)
        values = rng.normal(size=(c, p, k))
    else:
        values = np.full((c, p, k), float(fill))
    present = np.ones((c, p, k), dtype=bool) if mask is None else mask.copy()
    values = np.where(present, values, np.nan)
    return Panel(schema=schema, countries=tuple(countries), periods=tuple(periods),
                 values=values, present=present)


def years(a, b):
    return tuple(f"{y:04d}" for y in range(a, b + 1))


def quarters(y0, y1):
    return tuple(f"{y:04d}Q{q}" for y in range(y0, y1 + 1) for q in range(1, 5))


# ----- loading -----------------------------------------------------------------


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_shape_bookkeeping(tmp_path):
    csv_path = write_csv(tmp_path / "p.csv", (
        "country,period,ind0,ind1,gdp\n"
        "USA,2015,1.0,2.0,3.0\n"
        "USA,2016,1.1,2.1,3.1\n"
        "USA,2017,1.2,2.2,3.2\n"
        "CHN,2015,4.0,5.0,6.0\n"
        "CHN,2016,4.1,5.1,6.1\n"
        "CHN,2017,4.2,5.2,6.2\n"))
    schema = PanelSchema(("ind0", "ind1"), "gdp", "yearly")
    panel = load_panel(csv_path, schema)
    assert panel.values.shape == (2, 3, 3)
    assert panel.countries == ("CHN", "USA")
    assert panel.present.all()
    assert panel.values[panel.countries.index("USA"), 0, 2] == 3.0


def test_load_blank_cell_becomes_missing(tmp_path):
    csv_path = write_csv(tmp_path / "p.csv", (
        "country,period,ind0,gdp\n"
        "USA,2015,1.0,\n"
        "USA,2016,1.1,2.0\n"))
    panel = load_panel(csv_path, PanelSchema(("ind0",), "gdp", "yearly"))
    assert not panel.present[0, 0, 1]
    assert panel.present[0, 0, 0]
    assert np.isnan(panel.values[0, 0, 1])


def test_load_duplicate_rows_rejected(tmp_path):
    csv_path = write_csv(tmp_path / "p.csv", (
        "country,period,ind0,gdp\n"
        "USA,2015,1.0,2.0\n"
        "USA,2015,1.0,2.0\n"))
    with pytest.raises(ValidationError, match="duplicate"):
        load_panel(csv_path, PanelSchema(("ind0",), "gdp", "yearly"))


def test_load_unknown_column_rejected(tmp_path):
    csv_path = write_csv(tmp_path / "p.csv", (
        "country,period,mystery,gdp\nUSA,2015,1.0,2.0\n"))
    with pytest.raises(SchemaError):
        load_panel(csv_path, PanelSchema(("ind0",), "gdp", "yearly"))


def test_load_malformed_cell_reports_line(tmp_path):
    csv_path = write_csv(tmp_path / "p.csv", (
        "country,period,ind0,gdp\n"
        "USA,2015,1.0,2.0\n"
        "USA,2016,oops,2.0\n"))
    with pytest.raises(ParseError, match="line 3"):
        load_panel(csv_path, PanelSchema(("ind0",), "gdp", "yearly"))


def test_load_ordering_deterministic(tmp_path):
    text = ("country,period,ind0,gdp\n"
            "USA,2016,1.1,2.1\n"
            "CHN,2015,4.0,5.0\n"
            "USA,2015,1.0,2.0\n")
    p1 = load_panel(write_csv(tmp_path / "a.csv", text),
                    PanelSchema(("ind0",), "gdp", "yearly"))
    p2 = load_panel(write_csv(tmp_path / "b.csv", text),
                    PanelSchema(("ind0",), "gdp", "yearly"))
    s1 = make_regression_samples(p1)
    s2 = make_regression_samples(p2)
    assert [(s.country, s.period) for s in s1] == [(s.country, s.period) for s in s2]
    assert s1[0].country == "CHN"


# ----- splitting -----------------------------------------------------------------


def test_split_last_year_yearly():
    panel = make_panel(["USA"], years(2013, 2019), 2)
    train, test = split_by_time(panel, SplitPolicy(LAST_YEAR))
    assert test.periods == ("2019",)
    assert train.periods == years(2013, 2018)


def test_split_last_two_years_quarterly():
    panel = make_panel(["USA"], quarters(1995, 2019), 2, frequency="quarterly")
    train, test = split_by_time(panel, SplitPolicy(LAST_TWO_YEARS))
    assert test.periods == quarters(2018, 2019)
    assert len(test.periods) == 8
    assert train.periods[-1] == "2017Q4"


def test_split_insufficient_history():
    panel = make_panel(["USA"], years(2018, 2019), 1)
    with pytest.raises(ValidationError, match="insufficient history"):
        split_by_time(panel, SplitPolicy(LAST_YEAR))


def test_split_policy_from_label():
    assert SplitPolicy.from_period_label("13-19").mode == LAST_YEAR
    for label in ("80-07", "80-19", "95-19"):
        assert SplitPolicy.from_period_label(label).mode == LAST_TWO_YEARS


@given(n_years=st.integers(min_value=4, max_value=30),
       span=st.sampled_from([LAST_YEAR, LAST_TWO_YEARS]))
def test_split_partition_property(n_years, span):
    if span == LAST_TWO_YEARS and n_years < 5:
        n_years = 5
    panel = make_panel(["AAA", "BBB"], years(2000, 2000 + n_years - 1), 1)
    train, test = split_by_time(panel, SplitPolicy(span))
    assert set(train.periods) | set(test.periods) == set(panel.periods)
    assert not set(train.periods) & set(test.periods)
    assert max(train.periods) < min(test.periods)


# ----- normalization ------------------------------------------------------------


def test_normalizer_minmax_example():
    periods = years(2010, 2012)
    panel = make_panel(["USA"], periods, 0)
    values = panel.values.copy()
    values[0, :, 0] = [0.0, 5.0, 10.0]
    panel = Panel(panel.schema, panel.countries, panel.periods, values, panel.present)
    norm = fit_normalizer(panel, None, scope="train_only")
    assert norm.col_min[0] == 0 and norm.col_max[0] == 10
    out = norm.transform_panel(panel)
    np.testing.assert_allclose(out.values[0, :, 0], [0.0, 0.5, 1.0])


def test_normalizer_degenerate_column_maps_to_zero():
    panel = make_panel(["USA"], years(2010, 2012), 0, fill=4.0)
    norm = fit_normalizer(panel, None, scope="train_only")
    out = norm.transform_panel(panel)
    np.testing.assert_array_equal(out.values[0, :, 0], np.zeros(3))


def test_normalizer_train_only_scope_can_exceed_one():
    train = make_panel(["USA"], years(2010, 2012), 0, fill=1.0)
    tv = train.values.copy()
    tv[0, :, 0] = [0.0, 1.0, 2.0]
    train = Panel(train.schema, train.countries, train.periods, tv, train.present)
    test = make_panel(["USA"], years(2013, 2013), 0, fill=5.0)
    norm = fit_normalizer(train, test, scope="train_only")
    out = norm.transform_panel(test)
    assert out.values[0, 0, 0] > 1.0


def test_normalizer_all_missing_column_named():
    mask = np.ones((1, 3, 2), dtype=bool)
    mask[:, :, 0] = False
    panel = make_panel(["USA"], years(2010, 2012), 1, mask=mask)
    with pytest.raises(ValidationError, match="ind0"):
        fit_normalizer(panel, None, scope="train_only")


@settings(max_examples=50)
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=2, max_size=8)
       .filter(lambda xs: max(xs) - min(xs) > 1e-6))
def test_normalizer_round_trip(xs):
    panel = make_panel(["USA"], years(2000, 2000 + len(xs) - 1), 0)
    values = panel.values.copy()
    values[0, :, 0] = xs
    panel = Panel(panel.schema, panel.countries, panel.periods, values, panel.present)
    norm = fit_normalizer(panel, None, scope="train_only")
    round_tripped = norm.inverse_values(norm.transform_values(panel.values))
    np.testing.assert_allclose(round_tripped[0, :, 0], xs, atol=1e-12 * max(1, max(map(abs, xs))))


# ----- regression samples -------------------------------------------------------


def test_regression_sample_count_full_panel():
    panel = make_panel([f"C{i:02d}" for i in range(21)], years(2013, 2019), 13)
    samples = make_regression_samples(panel)
    assert len(samples) == 21 * 7
    assert samples[0].x.shape == (13,)


def test_regression_sample_dropped_on_masked_indicator():
    mask = np.ones((1, 3, 3), dtype=bool)
    mask[0, 1, 0] = False
    panel = make_panel(["USA"], years(2010, 2012), 2, mask=mask)
    samples = make_regression_samples(panel)
    assert [(s.period) for s in samples] == ["2010", "2012"]


# ----- windows -------------------------------------------------------------------


def full_mask(c, p, k):
    return np.ones((c, p, k), dtype=bool)


def test_window_count_basic():
    panel = make_panel(["USA"], years(2000, 2009), 0)
    samples = make_window_samples(panel, WindowSpec(h=8))
    assert len(samples) == 2
    assert samples[0].inputs.shape == (8, 1)
    assert isinstance(samples[0].target, float)


def test_window_gap_breaks_runs():
    mask = full_mask(1, 12, 1)
    mask[0, 6, 0] = False
    panel = make_panel(["USA"], years(2000, 2011), 0, mask=mask)
    assert make_window_samples(panel, WindowSpec(h=8)) == []


def test_window_boundary_h_equals_run():
    panel = make_panel(["USA"], years(2000, 2011), 0)
    assert make_window_samples(panel, WindowSpec(h=12)) == []


def test_window_period_gap_breaks_contiguity():
    periods = years(2000, 2004) + years(2006, 2010)  # missing 2005
    panel = make_panel(["USA"], periods, 0)
    samples = make_window_samples(panel, WindowSpec(h=4))
    # each 5-long fragment yields one sample
    assert [s.target_period for s in samples] == ["2004", "2010"]


def test_window_multi_indicator_targets():
    panel = make_panel(["USA"], years(2000, 2009), 3)
    samples = make_window_samples(panel, WindowSpec(h=4, channels=MULTI_INDICATOR))
    assert samples[0].inputs.shape == (4, 4)
    assert isinstance(samples[0].target, ZVector)
    assert samples[0].target.indicators.shape == (3,)


def brute_force_windows(panel, spec):
    """Oracle: check every (country, t) for full presence of t-h..t."""
    if spec.channels == MULTI_INDICATOR:
        cols = list(range(panel.schema.n_indicators + 1))
    else:
        cols = [panel.schema.indicator_names.index(n) for n in panel.schema.light_names]
        cols.append(panel.target_col)
    out = set()
    for ci, country in enumerate(panel.countries):
        for t in range(spec.h, len(panel.periods)):
            ok = True
            for u in range(t - spec.h, t + 1):
                if not all(panel.present[ci, u, j] for j in cols):
                    ok = False
                    break
                if u > t - spec.h:
                    if next_period(panel.periods[u - 1], panel.schema.frequency) != panel.periods[u]:
                        ok = False
                        break
            if ok:
                out.add((country, panel.periods[t]))
    return out


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_window_oracle_equivalence(data):
    n_c = data.draw(st.integers(1, 5))
    n_p = data.draw(st.integers(2, 30))
    n_ind = data.draw(st.integers(0, 3))
    h = data.draw(st.integers(1, 10))
    channels = data.draw(st.sampled_from([GDP_ONLY, MULTI_INDICATOR]))
    mask_bits = data.draw(st.lists(
        st.booleans(), min_size=n_c * n_p * (n_ind + 1),
        max_size=n_c * n_p * (n_ind + 1)))
    mask = np.array(mask_bits, dtype=bool).reshape(n_c, n_p, n_ind + 1)
    panel = make_panel([f"C{i}" for i in range(n_c)], years(2000, 2000 + n_p - 1),
                       n_ind, mask=mask)
    spec = WindowSpec(h=h, channels=channels)
    got = {(s.country, s.target_period) for s in make_window_samples(panel, spec)}
    assert got == brute_force_windows(panel, spec)


# ----- light merging -------------------------------------------------------------


def constant_light_table(countries, y0, y1, mean=2.0):
    table = LightTable()
    for c in countries:
        for y in range(y0, y1 + 1):
            for m in range(1, 13):
                table.add(c, y, m, 10.0 * mean, mean, 0.5)
    return table


def test_merge_dims_table():
    countries = [f"C{i:02d}" for i in range(3)]
    yearly = make_panel(countries, years(2013, 2019), 13)
    table = constant_light_table(countries, 2013, 2019)
    cases = [(LIGHT_NONE, 13), (LIGHT_SUM_MEAN_STD, 16),
             (LIGHT_MEAN, 14), (LIGHT_EVERY_MONTH_MEAN, 25)]
    for mode, dims in cases:
        merged = merge_light_features(yearly, table, mode)
        samples = make_regression_samples(merged)
        assert samples[0].x.shape == (dims,), mode

    quarterly = make_panel(countries, quarters(2013, 2019), 20, frequency="quarterly")
    cases = [(LIGHT_NONE, 20), (LIGHT_SUM_MEAN_STD, 23),
             (LIGHT_MEAN, 21), (LIGHT_EVERY_MONTH_MEAN, 23)]
    for mode, dims in cases:
        merged = merge_light_features(quarterly, table, mode)
        samples = make_regression_samples(merged)
        assert samples[0].x.shape == (dims,), mode


def test_merge_missing_coverage_names_cell():
    panel = make_panel(["USA"], years(2013, 2014), 1)
    table = constant_light_table(["USA"], 2013, 2013)
    with pytest.raises(ValidationError, match="USA 2014"):
        merge_light_features(panel, table, LIGHT_MEAN)


def test_merge_values_are_period_averages():
    panel = make_panel(["USA"], years(2013, 2013), 1)
    table = LightTable()
    for m in range(1, 13):
        table.add("USA", 2013, m, 100.0 + m, float(m), 0.1)
    merged = merge_light_features(panel, table, LIGHT_SUM_MEAN_STD)
    row = merged.values[0, 0]
    np.testing.assert_allclose(row[1], np.mean([100.0 + m for m in range(1, 13)]))
    np.testing.assert_allclose(row[2], np.mean(range(1, 13)))
    np.testing.assert_allclose(row[3], 0.1)


def test_window_dims_with_lights_gdp_only():
    countries = ["USA"]
    panel = make_panel(countries, years(2010, 2019), 2)
    table = constant_light_table(countries, 2010, 2019)
    merged = merge_light_features(panel, table, LIGHT_SUM_MEAN_STD)
    spec = WindowSpec(h=4, channels=GDP_ONLY, light_mode=LIGHT_SUM_MEAN_STD)
    samples = make_window_samples(merged, spec)
    assert samples[0].inputs.shape == (4, 4)
    # gdp-plus-lights windows are vector autoregressions: z targets
    assert isinstance(samples[0].target, ZVector)
    # gdp sits in the last input column
    pi = merged.periods.index(samples[0].target_period)
    np.testing.assert_array_equal(
        samples[0].inputs[:, -1],
        merged.values[0, pi - 4:pi, merged.target_col])
