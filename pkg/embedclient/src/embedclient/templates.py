"""Indicator description templates and placeholder substitution.

Every economic indicator has a one-paragraph description ending in a
``{value}`` placeholder that is replaced by the observed number before the
text is embedded. The two nighttime-light templates use ``{sum}``,
``{mean}``, ``{std}`` and ``{month_num}``/``{mean}`` instead.
"""

import re
from dataclasses import dataclass

_PLACEHOLDER = re.compile(r"\{(\w+)\}")


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class DescriptionTemplate:
    indicator_name: str
    text: str

    @property
    def placeholders(self) -> tuple:
        return tuple(dict.fromkeys(_PLACEHOLDER.findall(self.text)))


def render_description(template: DescriptionTemplate, values: dict) -> str:
    """Substitute every placeholder; the text is otherwise untouched."""
    unbound = [name for name in template.placeholders if name not in values]
    if unbound:
        raise TemplateError(
            f"{template.indicator_name}: unbound placeholders {unbound}")
    return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), template.text)


def static_text(template: DescriptionTemplate) -> str:
    """Template with the placeholders removed, for per-indicator embeddings
    that leave the numeric value to the model's value channel."""
    text = _PLACEHOLDER.sub("", template.text)
    return re.sub(r"  +", " ", text).strip()


def _t(name, text):
    return name, DescriptionTemplate(indicator_name=name, text=text)


TEMPLATES = dict([
    _t("Rural population growth (annual %)",
       "The index 'Rural population growth (annual %)' measures the annual "
       "percentage increase or decrease in the rural population of a country. "
       "In this year, the index is {value}."),
    _t("General government final consumption expenditure (annual % growth)",
       "The index 'General government final consumption expenditure "
       "(annual % growth)' measures the annual percentage increase or decrease "
       "in government spending on goods and services that are used for "
       "providing public services. In this year, the index is {value}."),
    _t("Consumer price index (2010 = 100)",
       "The index 'Consumer price index (2010 = 100)' measures the average "
       "change over time in the prices paid by consumers for a basket of goods "
       "and services, with the base year set to 2010. This indicator is "
       "essential for tracking inflation, assessing the cost of living, and "
       "guiding monetary policy decisions. In this year, the index is {value}."),
    _t("Exports of goods and services (annual % growth)",
       'The index "Volume of exports of goods and services" with the unit '
       '"Percent change" measures the percentage change in the quantity of '
       "goods and services that a country sells to other nations over a "
       "specific period, usually a year, compared to the previous period. "
       "In this year, the index is {value} percent change."),
    _t("Urban population growth (annual %)",
       "The index 'Urban population growth (annual %)' measures the annual "
       "percentage increase or decrease in the population residing in urban "
       "areas. In this year, the index is {value}."),
    _t("Population growth (annual %)",
       "The index 'Population growth (annual %)' measures the annual "
       "percentage increase or decrease in the total population of a country. "
       "In this year, the index is {value}."),
    _t("Inflation, GDP deflator (annual %)",
       "The index 'Inflation, GDP deflator (annual %)' measures the annual "
       "percentage change in the price level of all new, domestically "
       "produced, final goods and services in an economy. In this year, the "
       "index is {value}."),
    _t("Imports of goods and services (annual % growth)",
       "The index 'Imports of goods and services (annual % growth)' measures "
       "the annual percentage increase or decrease in the value of a "
       "country's imports of goods and services. In this year, the index is "
       "{value}."),
    _t("Final consumption expenditure (annual % growth)",
       "The index 'Final consumption expenditure (annual % growth)' measures "
       "the annual percentage change in the total value of all goods and "
       "services consumed by households and government. In this year, the "
       "index is {value}."),
    _t("Unemployment, total (% of total labor force) (national estimate)",
       "The index 'Unemployment, total (% of total labor force) (national "
       "estimate)' measures the percentage of the total labor force that is "
       "unemployed and actively seeking employment, based on national "
       "estimates. In this year, the index is {value}."),
    _t("Inflation, consumer prices (annual %)",
       "The index 'Inflation, consumer prices (annual %)' measures the annual "
       "percentage change in the average level of prices for consumer goods "
       "and services. In this year, the index is {value}."),
    _t("Gross fixed capital formation (annual % growth)",
       "The index 'Gross fixed capital formation (annual % growth)' measures "
       "the annual percentage increase or decrease in investment in fixed "
       "assets such as buildings, machinery, and infrastructure. In this "
       "year, the index is {value}."),
    _t("Households and NPISHs Final consumption expenditure (annual % growth)",
       "The index 'Households and NPISHs Final consumption expenditure "
       "(annual % growth)' measures the annual percentage change in the "
       "spending by households and Non-Profit Institutions Serving Households "
       "(NPISHs) on goods and services. In this year, the index is {value}."),
    _t("Nighttime light (sum\\mean\\std)",
       "Nighttime light remote sensing data refers to the use of remote "
       "sensing technology to capture the distribution of lights on Earth at "
       "night. It can effectively reflect the spatial distribution of human "
       "activities and is therefore commonly used in remote sensing inversion "
       "of various socio-economic data. In this data, each pixel represents "
       "the light intensity of a geographical area of 500 meters by 500 "
       "meters. In this year, the total sum of light intensity of all pixels "
       "occupied by the country or region is {sum}, the average is {mean}, "
       "the standard deviation is {std}."),
    _t("Nighttime light (every month mean)",
       "Nighttime light remote sensing data refers to the use of remote "
       "sensing technology to capture the distribution of lights on Earth at "
       "night. In this data, each pixel represents the light intensity of a "
       "geographical area of 500 meters by 500 meters. In the {month_num}th "
       "month of this year, the average of light intensity of all pixels "
       "occupied by the country or region is {mean}."),
])
