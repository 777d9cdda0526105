"""Period-key helpers.

Period keys are zero-padded strings whose lexicographic order equals
chronological order: ``"2015"`` for yearly data and ``"2015Q3"`` for
quarterly data. No date library is used; only year/quarter succession is
supported.
"""

import re

from .errors import ValidationError

YEARLY = "yearly"
QUARTERLY = "quarterly"

_YEAR_RE = re.compile(r"^\d{4}$")
_QUARTER_RE = re.compile(r"^\d{4}Q[1-4]$")


def validate_period(period: str, frequency: str) -> None:
    if frequency == YEARLY:
        if not _YEAR_RE.match(period):
            raise ValidationError(f"bad yearly period key {period!r} (want YYYY)")
    elif frequency == QUARTERLY:
        if not _QUARTER_RE.match(period):
            raise ValidationError(f"bad quarterly period key {period!r} (want YYYYQn)")
    else:
        raise ValidationError(f"unknown frequency {frequency!r}")


def period_year(period: str) -> int:
    return int(period[:4])


def period_quarter(period: str) -> int:
    return int(period[5])


def next_period(period: str, frequency: str) -> str:
    """Immediate successor: next year, or next quarter with year rollover."""
    if frequency == YEARLY:
        return f"{period_year(period) + 1:04d}"
    q = period_quarter(period)
    y = period_year(period)
    if q == 4:
        return f"{y + 1:04d}Q1"
    return f"{y:04d}Q{q + 1}"


def months_of(period: str, frequency: str) -> list[tuple[int, int]]:
    """Calendar (year, month) pairs covered by a period, in order.

    12 months for a year, 3 for a quarter.
    """
    y = period_year(period)
    if frequency == YEARLY:
        return [(y, m) for m in range(1, 13)]
    q = period_quarter(period)
    first = 3 * (q - 1) + 1
    return [(y, m) for m in range(first, first + 3)]


def months_per_period(frequency: str) -> int:
    return 12 if frequency == YEARLY else 3
