"""Uniformly sampled time series: CSV ingestion, resampling and scaling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import EmptySeries, IncompatibleStep, NegativeScale, NonUniformStep, ParseError

UNITS = ("kW", "degC", "1")

# longest run of missing samples that ingestion will fill by interpolation
MAX_GAP_STEPS = 3

# timestamps closer than this to the step grid count as on-grid
_STEP_TOL_S = 1.0


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 stamp; naive values are taken as UTC."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TimeSeries:
    start: datetime
    dt_minutes: float
    values: np.ndarray = field(repr=False)
    unit: str = "kW"

    def __post_init__(self):
        if not self.dt_minutes > 0:
            raise NonUniformStep(f"dt must be positive, got {self.dt_minutes}")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise EmptySeries("a series needs at least one value")
        if not np.all(np.isfinite(vals)):
            raise ParseError("series contains non-finite values")
        vals.flags.writeable = False
        start = self.start
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start", start.astimezone(timezone.utc))

    def __len__(self):
        return self.values.size

    @property
    def dt_hours(self) -> float:
        return self.dt_minutes / 60.0

    @property
    def timestamps(self) -> list[datetime]:
        step = timedelta(minutes=self.dt_minutes)
        return [self.start + i * step for i in range(len(self))]

    @property
    def end(self) -> datetime:
        """Instant just past the last sample."""
        return self.start + timedelta(minutes=self.dt_minutes * len(self))

    def energy(self) -> float:
        """Integral of a power series in kWh."""
        return float(self.values.sum() * self.dt_hours)

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.start, self.dt_minutes, np.asarray(values, dtype=float), self.unit)

    def slice(self, start: datetime, end: datetime) -> "TimeSeries":
        """Sub-series covering [start, end); both must lie on the step grid."""
        i0 = self.index_of(start)
        i1 = self.index_of(end)
        if i0 < 0 or i1 > len(self) or i1 <= i0:
            raise IncompatibleStep(f"window {start}..{end} not covered by series")
        return TimeSeries(start, self.dt_minutes, self.values[i0:i1], self.unit)

    def index_of(self, instant: datetime) -> int:
        if instant.tzinfo is None:
            instant = instant.replace(tzinfo=timezone.utc)
        offset = (instant - self.start).total_seconds()
        steps = offset / (self.dt_minutes * 60.0)
        k = round(steps)
        if abs(steps - k) * self.dt_minutes * 60.0 > _STEP_TOL_S:
            raise IncompatibleStep(f"{instant} is not on the {self.dt_minutes} min grid")
        return int(k)


def load_timeseries(path, unit: str = "kW", dt_minutes: float | None = None) -> TimeSeries:
    """Read a ``timestamp,value`` CSV into a TimeSeries.

    The step is inferred as the smallest positive spacing between rows.
    Gaps of up to three missing steps, and empty value cells in runs of up
    to three, are filled by linear interpolation; anything longer raises
    NonUniformStep.
    """
    path = Path(path)
    stamps: list[datetime] = []
    raw: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptySeries(f"{path}: empty file") from None
        if [h.strip().lower() for h in header[:2]] != ["timestamp", "value"]:
            raise ParseError(f"{path}: expected header 'timestamp,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                stamps.append(parse_timestamp(row[0]))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad timestamp {row[0]!r}") from exc
            cell = row[1].strip()
            if cell == "":
                raw.append(math.nan)
                continue
            try:
                raw.append(float(cell))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad value {cell!r}") from exc
            if not math.isfinite(raw[-1]):
                raise ParseError(f"{path}:{lineno}: non-finite value {cell!r}")
    if not stamps:
        raise EmptySeries(f"{path}: no data rows")
    return _regularize(stamps, raw, unit, dt_minutes, str(path))


def _regularize(stamps, raw, unit, dt_minutes, label) -> TimeSeries:
    secs = np.array([(s - stamps[0]).total_seconds() for s in stamps])
    diffs = np.diff(secs)
    if np.any(diffs <= 0):
        bad = int(np.argmax(diffs <= 0)) + 1
        raise NonUniformStep(f"{label}: timestamps not strictly increasing at row {bad + 1}")
    if dt_minutes is None:
        if diffs.size == 0:
            raise NonUniformStep(f"{label}: cannot infer the step from a single row")
        step_s = float(diffs.min())
    else:
        step_s = float(dt_minutes) * 60.0
    ratios = diffs / step_s
    nsteps = np.rint(ratios)
    if np.any(np.abs(ratios - nsteps) * step_s > _STEP_TOL_S) or np.any(nsteps < 1):
        raise NonUniformStep(f"{label}: timestamps do not sit on a {step_s / 60:g} min grid")
    if np.any(nsteps - 1 > MAX_GAP_STEPS):
        raise NonUniformStep(f"{label}: gap longer than {MAX_GAP_STEPS} steps")
    idx = np.concatenate([[0], np.cumsum(nsteps)]).astype(int)
    values = np.full(idx[-1] + 1, np.nan)
    values[idx] = raw
    values = _fill_gaps(values, label)
    return TimeSeries(stamps[0], step_s / 60.0, values, unit)


def _fill_gaps(values: np.ndarray, label: str) -> np.ndarray:
    missing = np.isnan(values)
    if not missing.any():
        return values
    if missing[0] or missing[-1]:
        raise NonUniformStep(f"{label}: missing values at the series boundary")
    # run lengths of consecutive NaNs
    edges = np.diff(np.concatenate([[0], missing.astype(int), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    if np.any(stops - starts > MAX_GAP_STEPS):
        raise NonUniformStep(f"{label}: gap longer than {MAX_GAP_STEPS} steps")
    k = np.arange(values.size)
    out = values.copy()
    out[missing] = np.interp(k[missing], k[~missing], values[~missing])
    return out


def write_timeseries(ts: TimeSeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "value"])
        for t, v in zip(ts.timestamps, ts.values):
            w.writerow([format_timestamp(t), f"{v:.6g}"])


def resample(ts: TimeSeries, new_dt_minutes: float) -> TimeSeries:
    """Change the step of a series.

    Coarser steps average each window (energy conserving for power);
    finer steps hold each value.
    """
    if new_dt_minutes <= 0:
        raise IncompatibleStep("new step must be positive")
    ratio = new_dt_minutes / ts.dt_minutes
    if math.isclose(ratio, 1.0):
        return ts
    if ratio > 1:
        factor = round(ratio)
        if not math.isclose(ratio, factor):
            raise IncompatibleStep(f"{new_dt_minutes} is not a multiple of {ts.dt_minutes}")
        if len(ts) % factor:
            raise IncompatibleStep(f"length {len(ts)} not divisible into windows of {factor}")
        values = ts.values.reshape(-1, factor).mean(axis=1)
    else:
        factor = round(1 / ratio)
        if not math.isclose(1 / ratio, factor):
            raise IncompatibleStep(f"{new_dt_minutes} does not divide {ts.dt_minutes}")
        values = np.repeat(ts.values, factor)
    return TimeSeries(ts.start, float(new_dt_minutes), values, ts.unit)


def scale_renewable(base: TimeSeries, m: float) -> TimeSeries:
    """Capacity scaling of a renewable power profile."""
    if m < 0:
        raise NegativeScale(f"scale factor must be non-negative, got {m}")
    return base.with_values(base.values * m)
