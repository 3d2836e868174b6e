"""Daily weather series: CSV ingestion, a seeded synthetic generator, and
the climate perturbations (uniform warming, rainfall reduction)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

CSV_HEADER = ("day", "srad", "tmax", "tmin", "rain")


@dataclass(frozen=True)
class WeatherRecord:
    day: int
    srad: float  # MJ/m2/d
    tmax: float  # degC
    tmin: float  # degC
    rain: float  # mm/d

    @property
    def tmean(self) -> float:
        return 0.5 * (self.tmax + self.tmin)


def _check_record(rec: WeatherRecord, where: str) -> None:
    vals = (rec.srad, rec.tmax, rec.tmin, rec.rain)
    if not all(math.isfinite(v) for v in vals):
        raise DataError(f"{where}: non-finite value")
    if rec.tmax < rec.tmin:
        raise DataError(f"{where}: tmax {rec.tmax} is below tmin {rec.tmin}")
    if rec.srad < 0:
        raise DataError(f"{where}: negative srad {rec.srad}")
    if rec.rain < 0:
        raise DataError(f"{where}: negative rain {rec.rain}")


@dataclass(frozen=True)
class WeatherSeries:
    """Immutable, gap-free daily records.  Transforms return new series."""

    records: tuple[WeatherRecord, ...]
    label: str = "weather"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for i, rec in enumerate(self.records):
            _check_record(rec, f"record {i} (day {rec.day})")
            if i and rec.day != self.records[i - 1].day + 1:
                raise DataError(
                    f"record {i}: day {rec.day} does not follow day {self.records[i - 1].day}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i) -> WeatherRecord:
        return self.records[i]

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


# ---------------------------------------------------------------- CSV


def load_weather_csv(path, label: str | None = None) -> WeatherSeries:
    """Read ``day,srad,tmax,tmin,rain``; any bad row raises DataError naming it."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        missing = [c for c in CSV_HEADER if c not in header]
        if missing:
            raise DataError(f"{path}: header is missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in CSV_HEADER]
        records = []
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}: row {rowno}"
            try:
                cells = [row[i].strip() for i in idx]
            except IndexError:
                raise DataError(f"{where}: expected {len(header)} cells, got {len(row)}") from None
            try:
                day = int(cells[0])
                srad, tmax, tmin, rain = (float(c) for c in cells[1:])
            except ValueError:
                raise DataError(f"{where}: non-numeric cell in {row!r}") from None
            rec = WeatherRecord(day, srad, tmax, tmin, rain)
            _check_record(rec, where)
            if records and day != records[-1].day + 1:
                raise DataError(f"{where}: day {day} leaves a gap after day {records[-1].day}")
            records.append(rec)
    if not records:
        raise DataError(f"{path}: no data rows")
    return WeatherSeries(tuple(records), label or path.stem)


def save_weather_csv(series: WeatherSeries, path) -> None:
    from .modelio import atomic_write

    lines = [",".join(CSV_HEADER)]
    for r in series:
        lines.append(f"{r.day},{r.srad!r},{r.tmax!r},{r.tmin!r},{r.rain!r}")
    atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


# ---------------------------------------------------------------- perturbations


@dataclass(frozen=True)
class PerturbationSpec:
    temp_shift: float = 0.0
    rain_scale: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.temp_shift):
            raise ConfigError("temperature shift must be finite")
        if not 0.0 <= self.rain_scale <= 1.0:
            raise ConfigError(f"rain scale {self.rain_scale} outside [0, 1]; increases are not supported")

    def apply(self, series: WeatherSeries) -> WeatherSeries:
        out = series
        if self.temp_shift != 0.0:
            out = shift_temperature(out, self.temp_shift)
        if self.rain_scale != 1.0:
            out = scale_rainfall(out, self.rain_scale)
        return out


def _fmt(x: float) -> str:
    return f"{x:+g}"


def shift_temperature(series: WeatherSeries, delta: float) -> WeatherSeries:
    """Add ``delta`` degC to both tmax and tmin of every day."""
    if delta == 0:
        return series
    recs = tuple(replace(r, tmax=r.tmax + delta, tmin=r.tmin + delta) for r in series)
    return WeatherSeries(recs, f"{series.label}{_fmt(delta)}C")


def scale_rainfall(series: WeatherSeries, factor: float) -> WeatherSeries:
    if not 0.0 <= factor <= 1.0:
        raise ConfigError(f"rain scale factor {factor} outside [0, 1]")
    if factor == 1.0:
        return series
    recs = tuple(replace(r, rain=r.rain * factor) for r in series)
    return WeatherSeries(recs, f"{series.label}*rain{factor:g}")


# ---------------------------------------------------------------- synthesis


@dataclass(frozen=True)
class ClimateParams:
    """Iowa-like seasonal profile; plausible, not calibrated."""

    start_doy: int = 100  # ~April 10
    mean_temp: float = 10.0
    temp_amplitude: float = 14.0
    peak_doy: int = 200
    diurnal_range: float = 11.0
    temp_noise: float = 2.5
    temp_ar: float = 0.7
    rain_prob: float = 0.28
    rain_mean: float = 10.0
    srad_mean: float = 18.0
    srad_amplitude: float = 6.0
    cloudy_factor: float = 0.55


def synthesize_weather(seed: int, days: int = 204, params: ClimateParams | None = None, label: str | None = None) -> WeatherSeries:
    """Seeded sinusoidal season with AR(1) temperature noise and sparse exponential rain."""
    if days < 1:
        raise ConfigError("need at least one day of weather")
    p = params or ClimateParams()
    rng = np.random.default_rng(seed)
    doy = p.start_doy + np.arange(days)
    phase = np.cos(2 * np.pi * (doy - p.peak_doy) / 365.0)
    noise = np.empty(days)
    e = rng.normal(0.0, p.temp_noise, size=days)
    acc = 0.0
    for i in range(days):
        acc = p.temp_ar * acc + math.sqrt(1 - p.temp_ar**2) * e[i]
        noise[i] = acc
    tmean = p.mean_temp + p.temp_amplitude * phase + noise
    half_range = 0.5 * p.diurnal_range * rng.uniform(0.7, 1.3, size=days)
    wet = rng.random(days) < p.rain_prob
    rain = np.where(wet, rng.exponential(p.rain_mean, size=days), 0.0)
    srad = (p.srad_mean + p.srad_amplitude * phase) * np.where(wet, p.cloudy_factor, 1.0)
    srad *= rng.uniform(0.9, 1.1, size=days)
    half_range = np.where(wet, 0.7 * half_range, half_range)
    recs = tuple(
        WeatherRecord(
            int(i + 1),
            float(round(srad[i], 3)),
            float(round(tmean[i] + half_range[i], 2)),
            float(round(tmean[i] - half_range[i], 2)),
            float(round(rain[i], 2)),
        )
        for i in range(days)
    )
    return WeatherSeries(recs, label or f"synth-{seed}")


# ---------------------------------------------------------------- summaries


@dataclass(frozen=True)
class MonthSummary:
    month: int
    mean_temp: float
    total_rain: float
    n_days: int


def monthly_summary(series: WeatherSeries, month_days: int = 30) -> list[MonthSummary]:
    """Mean of daily (tmax+tmin)/2 and rain total per consecutive ``month_days`` bucket."""
    if not len(series):
        raise DataError("empty series")
    tm = 0.5 * (series.column("tmax") + series.column("tmin"))
    rain = series.column("rain")
    out = []
    for m, start in enumerate(range(0, len(series), month_days), start=1):
        sl = slice(start, start + month_days)
        out.append(MonthSummary(m, float(tm[sl].mean()), float(rain[sl].sum()), len(tm[sl])))
    return out
