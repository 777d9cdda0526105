"""Nighttime-brightness rasters, country masks, and light features.

Rasters use a flat portable format instead of GeoTIFF (decoding satellite
archives is out of scope; a converter can target this format):

    magic   7 bytes  b"NLRAST1"
    width   uint32 little-endian
    height  uint32 little-endian
    values  width*height float32 little-endian, row-major

Masks share the header and store one byte per cell (0 or 1).

Monthly per-country statistics travel in a CSV with header
``country,year,month,sum,mean,std`` which the panel module consumes.
"""

import csv
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .periods import QUARTERLY, YEARLY, months_of

RASTER_MAGIC = b"NLRAST1"

LIGHT_NONE = "none"
LIGHT_SUM_MEAN_STD = "sum_mean_std"
LIGHT_MEAN = "mean"
LIGHT_EVERY_MONTH_MEAN = "every_month_mean"
LIGHT_MODES = (LIGHT_NONE, LIGHT_SUM_MEAN_STD, LIGHT_MEAN, LIGHT_EVERY_MONTH_MEAN)

LIGHT_CSV_HEADER = ["country", "year", "month", "sum", "mean", "std"]


def light_dims(mode: str, frequency: str) -> int:
    """Feature columns added by a light mode: 0, 3, 1, or months-per-period."""
    if mode == LIGHT_NONE:
        return 0
    if mode == LIGHT_SUM_MEAN_STD:
        return 3
    if mode == LIGHT_MEAN:
        return 1
    if mode == LIGHT_EVERY_MONTH_MEAN:
        return 12 if frequency == YEARLY else 3
    raise ValidationError(f"unknown light mode {mode!r}")


def light_column_names(mode: str, frequency: str) -> tuple:
    if mode == LIGHT_NONE:
        return ()
    if mode == LIGHT_SUM_MEAN_STD:
        return ("light_sum", "light_mean", "light_std")
    if mode == LIGHT_MEAN:
        return ("light_mean",)
    if mode == LIGHT_EVERY_MONTH_MEAN:
        if frequency == YEARLY:
            return tuple(f"light_m{m:02d}" for m in range(1, 13))
        return tuple(f"light_m{m}" for m in range(1, 4))
    raise ValidationError(f"unknown light mode {mode!r}")


# ----- raster + mask files ----------------------------------------------------


@dataclass
class BrightnessGrid:
    width: int
    height: int
    values: np.ndarray  # (height, width) float32, >= 0
    year: int | None = None
    month: int | None = None


@dataclass
class CountryMask:
    width: int
    height: int
    cells: np.ndarray  # (height, width) bool
    country: str = ""


def _read_header(fh, path):
    magic = fh.read(len(RASTER_MAGIC))
    if magic != RASTER_MAGIC:
        raise ParseError(f"{path}: bad magic, not a NLRAST1 file")
    raw = fh.read(8)
    if len(raw) != 8:
        raise ParseError(f"{path}: truncated header")
    return struct.unpack("<II", raw)


def load_raster(path) -> BrightnessGrid:
    with open(path, "rb") as fh:
        width, height = _read_header(fh, path)
        payload = fh.read()
    expected = width * height * 4
    if len(payload) != expected:
        raise ParseError(f"{path}: payload is {len(payload)} bytes, want {expected}")
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{path}: non-finite brightness value")
    if np.any(values < 0):
        raise ValidationError(f"{path}: negative brightness value")
    return BrightnessGrid(width=width, height=height, values=values)


def save_raster(path, grid: BrightnessGrid) -> None:
    values = np.asarray(grid.values, dtype="<f4").reshape(grid.height, grid.width)
    with open(path, "wb") as fh:
        fh.write(RASTER_MAGIC)
        fh.write(struct.pack("<II", grid.width, grid.height))
        fh.write(values.tobytes())


def load_mask(path, country="") -> CountryMask:
    with open(path, "rb") as fh:
        width, height = _read_header(fh, path)
        payload = fh.read()
    if len(payload) != width * height:
        raise ParseError(f"{path}: payload is {len(payload)} bytes, want {width * height}")
    raw = np.frombuffer(payload, dtype=np.uint8)
    if np.any(raw > 1):
        raise ValidationError(f"{path}: mask bytes must be 0 or 1")
    cells = raw.astype(bool).reshape(height, width)
    return CountryMask(width=width, height=height, cells=cells, country=country)


def save_mask(path, mask: CountryMask) -> None:
    cells = np.asarray(mask.cells, dtype=bool).reshape(mask.height, mask.width)
    with open(path, "wb") as fh:
        fh.write(RASTER_MAGIC)
        fh.write(struct.pack("<II", mask.width, mask.height))
        fh.write(cells.astype(np.uint8).tobytes())


# ----- zonal statistics -------------------------------------------------------


def zonal_stats(grid: BrightnessGrid, mask: CountryMask) -> tuple:
    """(sum, mean, population std) of brightness over the masked cells.

    The sum is exactly rounded (math.fsum), so it does not depend on cell
    order. Population std keeps single-cell regions well-defined.
    """
    if (grid.height, grid.width) != (mask.height, mask.width):
        raise ValidationError(
            f"grid {grid.height}x{grid.width} vs mask {mask.height}x{mask.width}")
    cells = np.asarray(grid.values, dtype=np.float64)[mask.cells]
    if cells.size == 0:
        raise ValidationError(f"mask for {mask.country or 'region'} selects no cells")
    total = math.fsum(cells.tolist())
    mean = total / cells.size
    var = math.fsum(((c - mean) ** 2 for c in cells.tolist())) / cells.size
    return total, mean, math.sqrt(var)


# ----- monthly series and period features -------------------------------------


@dataclass
class LightSeries:
    """Monthly (sum, mean, std) brightness statistics for one country."""

    country: str
    records: dict = field(default_factory=dict)  # (year, month) -> (sum, mean, std)

    def has_month(self, year, month):
        return (year, month) in self.records


class LightTable:
    """All countries' monthly light statistics, keyed (country, year, month)."""

    def __init__(self):
        self.records = {}

    def add(self, country, year, month, total, mean, std):
        self.records[(country, int(year), int(month))] = (
            float(total), float(mean), float(std))

    def series_for(self, country) -> LightSeries:
        series = LightSeries(country=country)
        for (c, y, m), stats in self.records.items():
            if c == country:
                series.records[(y, m)] = stats
        return series

    @classmethod
    def from_csv(cls, path):
        table = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != LIGHT_CSV_HEADER:
                raise ParseError(f"{path}: header {header} != {LIGHT_CSV_HEADER}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 6:
                    raise ParseError(f"{path}: expected 6 cells", line=lineno)
                try:
                    table.add(row[0], int(row[1]), int(row[2]),
                              float(row[3]), float(row[4]), float(row[5]))
                except ValueError as exc:
                    raise ParseError(f"{path}: {exc}", line=lineno) from exc
        return table

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(LIGHT_CSV_HEADER)
            for (c, y, m) in sorted(self.records):
                total, mean, std = self.records[(c, y, m)]
                writer.writerow([c, y, m, repr(total), repr(mean), repr(std)])


def period_features(series: LightSeries, period: str, mode: str) -> list:
    """Light feature values for one period.

    Monthly statistics are averaged over the period, except
    ``every_month_mean`` which keeps each month's mean separately in
    calendar order.
    """
    frequency = QUARTERLY if "Q" in period else YEARLY
    months = months_of(period, frequency)
    stats = []
    for (y, m) in months:
        if not series.has_month(y, m):
            raise ValidationError(
                f"no light data for {series.country} {y}-{m:02d} (period {period})")
        stats.append(series.records[(y, m)])
    n = len(stats)
    if mode == LIGHT_SUM_MEAN_STD:
        return [sum(s[0] for s in stats) / n,
                sum(s[1] for s in stats) / n,
                sum(s[2] for s in stats) / n]
    if mode == LIGHT_MEAN:
        return [sum(s[1] for s in stats) / n]
    if mode == LIGHT_EVERY_MONTH_MEAN:
        return [s[1] for s in stats]
    raise ValidationError(f"unknown light mode {mode!r}")
