"""Daily temperature series: CSV ingestion, year splits, standardization,
sliding windows, and synthetic oscillator data."""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_HEADER = ("date", "t2m_celsius")
MAX_ABS_TEMP = 80.0


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass
class DailySeries:
    """Temperatures on consecutive calendar days starting at ``start``."""

    city: str
    start: dt.date
    temps: np.ndarray

    def __post_init__(self):
        self.temps = np.asarray(self.temps, dtype=np.float64)
        if self.temps.ndim != 1:
            raise DataError("temps must be one-dimensional")
        if not np.all(np.isfinite(self.temps)):
            k = int(np.argmax(~np.isfinite(self.temps)))
            raise DataError(f"non-finite temperature on {self.start + dt.timedelta(days=k)}")

    def __len__(self):
        return len(self.temps)

    @property
    def end(self) -> dt.date:
        return self.start + dt.timedelta(days=len(self) - 1)

    @property
    def dates(self) -> list:
        return [self.start + dt.timedelta(days=k) for k in range(len(self))]

    def days_since(self, origin: dt.date) -> np.ndarray:
        """Whole days elapsed from ``origin`` to each date."""
        first = (self.start - origin).days
        return np.arange(first, first + len(self), dtype=np.float64)

    def between(self, first: dt.date, last: dt.date) -> "DailySeries":
        if first < self.start or last > self.end or last < first:
            raise DataError(
                f"{self.city}: requested {first}..{last} outside coverage {self.start}..{self.end}"
            )
        i = (first - self.start).days
        j = (last - self.start).days + 1
        return DailySeries(self.city, first, self.temps[i:j].copy())


# --- CSV ------------------------------------------------------------------------

def load_csv(path, city: str | None = None) -> DailySeries:
    """Read a ``date,t2m_celsius`` file into a validated series."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    dates, temps = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(f"{path}: header must be {','.join(CSV_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad ISO date {row[0]!r}") from None
            try:
                value = float(row[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric temperature {row[1]!r}") from None
            if not math.isfinite(value):
                raise DataError(f"{path}:{lineno}: non-finite temperature {row[1]!r}")
            if abs(value) > MAX_ABS_TEMP:
                raise DataError(f"{path}:{lineno}: implausible temperature {value} degC")
            if dates:
                step = (day - dates[-1]).days
                if step == 0:
                    raise DataError(f"{path}:{lineno}: duplicate date {day}")
                if step < 0:
                    raise DataError(f"{path}:{lineno}: date {day} out of order")
                if step > 1:
                    missing = dates[-1] + dt.timedelta(days=1)
                    raise DataError(f"{path}:{lineno}: missing day {missing} (gap before {day})")
            dates.append(day)
            temps.append(value)
    if not dates:
        raise DataError(f"{path}: no data rows")
    return DailySeries(city or path.stem, dates[0], np.array(temps))


def write_csv(series: DailySeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for day, value in zip(series.dates, series.temps):
            w.writerow([day.isoformat(), repr(float(value))])


# --- splits ------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train: tuple = (2008, 2012)
    val: tuple = (2013, 2015)
    test: tuple = (2016, 2018)

    def __post_init__(self):
        ranges = [tuple(self.train), tuple(self.val), tuple(self.test)]
        for lo, hi in ranges:
            if lo > hi:
                raise ValueError(f"year range {lo}-{hi} is reversed")
        if not (ranges[0][1] < ranges[1][0] and ranges[1][1] < ranges[2][0]):
            raise ValueError(f"year ranges must be disjoint and ordered: {ranges}")

    def items(self):
        return (("train", self.train), ("val", self.val), ("test", self.test))


def split(series: DailySeries, spec: SplitSpec = SplitSpec()) -> tuple:
    """Cut ``(train, val, test)`` on calendar-year boundaries."""
    out = []
    for name, (lo, hi) in spec.items():
        first, last = dt.date(lo, 1, 1), dt.date(hi, 12, 31)
        if first < series.start or last > series.end:
            raise DataError(
                f"{series.city}: {name} years {lo}-{hi} not covered by {series.start}..{series.end}"
            )
        out.append(series.between(first, last))
    return tuple(out)


# --- standardization ---------------------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DataError(f"standard deviation must be positive, got {self.sigma}")

    @classmethod
    def fit(cls, train) -> "Standardizer":
        """Mean and population (1/N) standard deviation of the training temps."""
        x = np.asarray(train.temps if isinstance(train, DailySeries) else train, dtype=np.float64)
        if x.size == 0:
            raise DataError("cannot standardize an empty series")
        sigma = float(x.std())
        if sigma == 0:
            raise DataError("constant training series has zero standard deviation")
        return cls(float(x.mean()), sigma)

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mu) / self.sigma

    def invert(self, z):
        return np.asarray(z, dtype=np.float64) * self.sigma + self.mu


fit_standardizer = Standardizer.fit


# --- windows -------------------------------------------------------------------------

@dataclass
class WindowedDataset:
    inputs: np.ndarray   # (n, input_len)
    targets: np.ndarray  # (n, output_len)
    starts: np.ndarray   # index of each window's first input day

    def __len__(self):
        return len(self.inputs)


def make_windows(values, input_len: int = 90, output_len: int = 30, stride: int = 1) -> WindowedDataset:
    """Window k covers inputs ``[s, s + input_len)`` and targets
    ``[s + input_len, s + input_len + output_len)`` with ``s = k * stride``."""
    values = np.asarray(values.temps if isinstance(values, DailySeries) else values, dtype=np.float64)
    span = input_len + output_len
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if len(values) < span:
        raise DataError(f"series of length {len(values)} is shorter than one window ({span})")
    starts = np.arange(0, len(values) - span + 1, stride)
    idx = starts[:, None] + np.arange(span)[None, :]
    block = values[idx]
    return WindowedDataset(block[:, :input_len].copy(), block[:, input_len:].copy(), starts)


# --- synthetic data --------------------------------------------------------------------

def synth_generate(amplitude: float = 1.0, phase: float = 0.0, omega: float = 2 * math.pi / 365,
                   noise_sigma: float = 0.0, days: int = 4018, seed: int = 0,
                   start: dt.date = dt.date(2008, 1, 1), offset: float = 0.0,
                   city: str = "synthetic") -> DailySeries:
    """``offset + amplitude * cos(omega * i + phase)`` plus seeded Gaussian noise."""
    if days < 1:
        raise ValueError("days must be >= 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    i = np.arange(days, dtype=np.float64)
    temps = offset + amplitude * np.cos(omega * i + phase)
    if noise_sigma > 0:
        temps = temps + np.random.default_rng(seed).normal(0.0, noise_sigma, size=days)
    return DailySeries(city, start, temps)
