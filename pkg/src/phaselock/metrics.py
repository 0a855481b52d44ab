"""Performance statistics: transition times, noise figures, visibility.

All interval bounds are in seconds, tick-aligned and inclusive on both ends.
Noise figures use the sample (n-1) standard deviation; the Poisson reference
is ``sigma_p = sqrt(mean)`` and the coefficient of variation ``cv = std/mean``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NoTransitionError(ValueError):
    """The interval does not contain a resolvable 10-90% transition."""


@dataclass(frozen=True)
class IntervalSpec:
    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        if not self.t_start < self.t_end:
            raise ValueError(
                f"interval must satisfy t_start < t_end, got [{self.t_start}, {self.t_end}]"
            )


@dataclass(frozen=True)
class NoiseStats:
    mean: float
    std: float
    sigma_p: float
    cv: float


@dataclass(frozen=True)
class RiseFall:
    t10: float
    t90: float
    duration: float


def _slice(series, interval: IntervalSpec, t=None) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(series, dtype=float)
    times = np.arange(len(values)) if t is None else np.asarray(t, dtype=float)
    if len(times) != len(values):
        raise ValueError("time and value arrays must have equal length")
    mask = (times >= interval.t_start) & (times <= interval.t_end)
    if times.size and (interval.t_start < times[0] or interval.t_end > times[-1]):
        raise ValueError(f"interval [{interval.t_start}, {interval.t_end}] outside the run")
    return values[mask], times[mask]


def noise_stats(series, interval: IntervalSpec, t=None) -> NoiseStats:
    """Mean, sample std, Poisson reference and CV over one interval."""
    values, _ = _slice(series, interval, t)
    if len(values) < 2:
        raise ValueError("interval must contain at least 2 samples")
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1))
    cv = std / mean if mean != 0 else math.nan
    return NoiseStats(mean=mean, std=std, sigma_p=math.sqrt(mean), cv=cv)


def percent_decrease_noise(sigma_po: float, sigma_adaptive: float) -> float:
    """Relative noise reduction in percent; positive means quieter."""
    if sigma_po <= 0:
        raise ValueError(f"sigma_po must be > 0, got {sigma_po}")
    return 100.0 * (sigma_po - sigma_adaptive) / sigma_po


def percent_decrease_time(t_po: float, t_adaptive: float) -> float:
    """Relative transition-time reduction in percent."""
    if t_po <= 0:
        raise ValueError(f"t_po must be > 0, got {t_po}")
    return 100.0 * (t_po - t_adaptive) / t_po


def _first_crossing(values, times, threshold: float, rising: bool) -> tuple[int, float]:
    """Index and linearly interpolated time of the first threshold crossing."""
    beyond = values >= threshold if rising else values <= threshold
    hits = np.flatnonzero(beyond)
    if hits.size == 0:
        direction = "rise above" if rising else "fall below"
        raise NoTransitionError(f"series never {direction}s {threshold:.6g}")
    k = int(hits[0])
    if k == 0:
        return k, float(times[0])
    y0, y1 = values[k - 1], values[k]
    if y1 == y0:
        return k, float(times[k])
    frac = (threshold - y0) / (y1 - y0)
    return k, float(times[k - 1] + frac * (times[k] - times[k - 1]))


def rise_fall_time(series, interval: IntervalSpec, t=None) -> RiseFall:
    """10-90% transition time within an interval.

    The baseline is the median of the first 10% of the interval and the
    steady level the median of the last 20%; falls are handled symmetrically.
    When both threshold crossings land in the same inter-tick gap the
    transition is faster than one tick and the duration is zero.
    """
    values, times = _slice(series, interval, t)
    if len(values) < 2:
        raise ValueError("interval must contain at least 2 samples")
    n = len(values)
    baseline = float(np.median(values[: max(1, round(0.1 * n))]))
    steady = float(np.median(values[-max(1, round(0.2 * n)):]))
    if steady == baseline:
        raise NoTransitionError("steady level equals baseline; no transition")
    rising = steady > baseline
    lo = baseline + 0.1 * (steady - baseline)
    hi = baseline + 0.9 * (steady - baseline)
    k10, t10 = _first_crossing(values, times, lo, rising)
    k90, t90 = _first_crossing(values, times, hi, rising)
    if k10 == k90:
        t10 = t90
    return RiseFall(t10=t10, t90=t90, duration=abs(t90 - t10))


def _robust_level(values) -> float:
    """5% two-sided trimmed mean; scalars pass through unchanged."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("empty series")
    if arr.size < 3:
        return float(np.mean(arr))
    cut = int(math.floor(0.05 * arr.size))
    trimmed = np.sort(arr)[cut: arr.size - cut]
    return float(np.mean(trimmed))


def visibility(series_max, series_min) -> float:
    """Fringe contrast (max - min)/(max + min) from robust port levels.

    Levels are 5% trimmed means so single shot-noise outliers do not inflate
    the contrast.
    """
    level_max = _robust_level(series_max)
    level_min = _robust_level(series_min)
    if level_max < level_min:
        raise ValueError("series_max level below series_min level")
    if level_min < 0:
        raise ValueError("count levels must be >= 0")
    total = level_max + level_min
    if total == 0:
        raise ValueError("visibility undefined for two zero levels")
    return (level_max - level_min) / total
