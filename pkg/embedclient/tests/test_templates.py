import pytest

from embedclient.templates import (
    TEMPLATES,
    DescriptionTemplate,
    TemplateError,
    render_description,
    static_text,
)


def test_exports_template_substitutes_value_verbatim():
    template = TEMPLATES["Exports of goods and services (annual % growth)"]
    text = render_description(template, {"value": 3.2})
    assert "the index is 3.2 percent change" in text
    assert "{value}" not in text


def test_light_monthly_template_substitutes_both():
    template = TEMPLATES["Nighttime light (every month mean)"]
    text = render_description(template, {"month_num": 4, "mean": 12.5})
    assert "In the 4th month of this year" in text
    assert "is 12.5." in text


def test_light_sum_mean_std_template():
    template = TEMPLATES["Nighttime light (sum\\mean\\std)"]
    text = render_description(template, {"sum": 100, "mean": 2.5, "std": 0.7})
    assert "is 100, the average is 2.5, the standard deviation is 0.7" in text


def test_template_without_placeholders_unchanged():
    template = DescriptionTemplate("plain", "A fixed description.")
    assert render_description(template, {}) == "A fixed description."


def test_unbound_placeholder_rejected():
    template = TEMPLATES["Population growth (annual %)"]
    with pytest.raises(TemplateError, match="value"):
        render_description(template, {})


def test_every_economic_template_has_value_placeholder():
    light_names = {"Nighttime light (sum\\mean\\std)",
                   "Nighttime light (every month mean)"}
    econ = [t for name, t in TEMPLATES.items() if name not in light_names]
    assert len(econ) == 13
    for template in econ:
        assert template.placeholders == ("value",), template.indicator_name


def test_static_text_strips_placeholders():
    template = TEMPLATES["Population growth (annual %)"]
    text = static_text(template)
    assert "{value}" not in text
    assert "measures the annual" in text
