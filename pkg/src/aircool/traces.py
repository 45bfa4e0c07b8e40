"""Ambient weather traces: CSV ingestion, synthetic generation, splitting.

A trace is a minute-resolution sequence of outside-air temperature and RH
rows. The CSV schema is fixed: header ``minute,t_o_c,rh_o_pct``, integer
minutes at strict 1-minute spacing, floats written with shortest repr so
a save/load round trip is bit-exact. Files ending in .gz are transparently
gzip-compressed.
"""

from __future__ import annotations

import gzip
import math
from dataclasses import dataclass

import numpy as np

HEADER = "minute,t_o_c,rh_o_pct"
MINUTES_PER_DAY = 1440

T_O_RANGE = (15.0, 45.0)
RH_O_RANGE = (0.0, 100.0)


class TraceError(ValueError):
    """Malformed, out-of-range, or too-short weather trace."""


@dataclass(frozen=True)
class WeatherTrace:
    minutes: np.ndarray  # int64, strictly increasing at 1-minute spacing
    t_o: np.ndarray      # deg C
    rh_o: np.ndarray     # percent

    def __len__(self) -> int:
        return len(self.minutes)

    @property
    def n_days(self) -> float:
        return len(self) / MINUTES_PER_DAY

    def validate(self) -> None:
        if len(self.minutes) == 0:
            raise TraceError("trace too short: no data rows")
        if not (len(self.minutes) == len(self.t_o) == len(self.rh_o)):
            raise TraceError("column length mismatch")
        diffs = np.diff(self.minutes)
        if len(diffs) and not np.all(diffs == 1):
            bad = int(np.argmax(diffs != 1))
            raise TraceError(
                f"timestamps must increase by exactly 1 minute; row {bad + 1} breaks the spacing"
            )
        lo, hi = T_O_RANGE
        if np.any(self.t_o < lo) or np.any(self.t_o > hi):
            raise TraceError(f"outside temperature out of range [{lo}, {hi}]")
        lo, hi = RH_O_RANGE
        if np.any(self.rh_o < lo) or np.any(self.rh_o > hi):
            raise TraceError(f"outside RH out of range [{lo}, {hi}]")


def _open_text(path: str, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t")
    return open(path, mode)


def load_csv(path: str) -> WeatherTrace:
    """Parse and validate a weather-trace CSV (optionally gzipped)."""
    minutes, t_o, rh_o = [], [], []
    with _open_text(path, "r") as fh:
        header = fh.readline().rstrip("\n")
        if header != HEADER:
            raise TraceError(f"bad header {header!r}, expected {HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise TraceError(f"line {lineno}: expected 3 fields, got {len(parts)}")
            try:
                minutes.append(int(parts[0]))
                t_o.append(float(parts[1]))
                rh_o.append(float(parts[2]))
            except ValueError as exc:
                raise TraceError(f"line {lineno}: {exc}") from exc
    trace = WeatherTrace(
        minutes=np.asarray(minutes, dtype=np.int64),
        t_o=np.asarray(t_o, dtype=np.float64),
        rh_o=np.asarray(rh_o, dtype=np.float64),
    )
    trace.validate()
    return trace


def save_csv(path: str, trace: WeatherTrace) -> None:
    """Write a trace using shortest-repr floats (load reproduces it bit-exactly)."""
    with _open_text(path, "w") as fh:
        fh.write(HEADER + "\n")
        for m, t, rh in zip(trace.minutes, trace.t_o, trace.rh_o):
            fh.write(f"{int(m)},{float(t)!r},{float(rh)!r}\n")


@dataclass(frozen=True)
class SynthWeatherParams:
    """Synthetic tropical climate: hot, humid, mild diurnal swing.

    Defaults target a yearly mean near 27 C / 70 % RH with an instant
    maximum capped at 37 C and RH moving opposite to temperature with a
    short lag. Short rainfall episodes push RH toward saturation and
    cool the air a few degrees, reproducing the near-100 % spikes that
    make tropical RH control hard.
    """

    t_mean: float = 27.0
    t_amp: float = 4.0
    t_clip: tuple[float, float] = (23.0, 37.0)
    rh_mean: float = 70.0
    rh_amp: float = 15.0
    rh_clip: tuple[float, float] = (50.0, 100.0)
    rh_lag_min: float = 60.0
    ar_coeff: float = 0.95
    t_noise_sigma: float = 0.15
    rh_noise_sigma: float = 0.5
    peak_minute: float = 900.0       # hottest time of day
    rain_events_per_day: float = 1.5
    rain_len_min: tuple[int, int] = (30, 120)
    rain_rh: tuple[float, float] = (94.0, 100.0)
    rain_t_drop: float = 2.5


def _ar1(n: int, coeff: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    eps = sigma * rng.standard_normal(n)
    out = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = coeff * acc + eps[i]
        out[i] = acc
    return out


def synth_weather(
    days: int, seed: int, params: SynthWeatherParams = SynthWeatherParams()
) -> WeatherTrace:
    """Generate a deterministic synthetic trace of `days` whole days."""
    if days < 1:
        raise ValueError("days must be >= 1")
    n = days * MINUTES_PER_DAY
    rng = np.random.default_rng(seed)
    minutes = np.arange(n, dtype=np.int64)
    phase = 2.0 * math.pi * (minutes - (params.peak_minute - 360.0)) / MINUTES_PER_DAY
    lag = 2.0 * math.pi * params.rh_lag_min / MINUTES_PER_DAY
    t_o = params.t_mean + params.t_amp * np.sin(phase)
    t_o += _ar1(n, params.ar_coeff, params.t_noise_sigma, rng)
    rh_o = params.rh_mean - params.rh_amp * np.sin(phase - lag)
    rh_o += _ar1(n, params.ar_coeff, params.rh_noise_sigma, rng)
    for day in range(days):
        for _ in range(rng.poisson(params.rain_events_per_day)):
            start = day * MINUTES_PER_DAY + int(rng.integers(0, MINUTES_PER_DAY))
            stop = min(start + int(rng.integers(*params.rain_len_min)), n)
            rain_rh = rng.uniform(*params.rain_rh)
            rh_o[start:stop] = np.maximum(rh_o[start:stop], rain_rh)
            t_o[start:stop] -= params.rain_t_drop
    trace = WeatherTrace(
        minutes=minutes,
        t_o=np.clip(t_o, *params.t_clip),
        rh_o=np.clip(rh_o, *params.rh_clip),
    )
    trace.validate()
    return trace


def split(trace: WeatherTrace, train_days: int, test_days: int) -> tuple[WeatherTrace, WeatherTrace]:
    """Contiguous prefix/suffix split into train_days then test_days, no overlap."""
    if train_days < 0 or test_days < 0:
        raise ValueError("day counts must be non-negative")
    n_train = train_days * MINUTES_PER_DAY
    n_test = test_days * MINUTES_PER_DAY
    if n_train + n_test > len(trace):
        raise TraceError(
            f"trace holds {len(trace)} rows, need {n_train + n_test} "
            f"for a {train_days}+{test_days} day split"
        )
    train = WeatherTrace(
        minutes=trace.minutes[:n_train], t_o=trace.t_o[:n_train], rh_o=trace.rh_o[:n_train]
    )
    test = WeatherTrace(
        minutes=trace.minutes[n_train : n_train + n_test],
        t_o=trace.t_o[n_train : n_train + n_test],
        rh_o=trace.rh_o[n_train : n_train + n_test],
    )
    return train, test
