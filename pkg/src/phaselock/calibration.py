"""Sawtooth self-adjustment of the circular control bounds.

A sawtooth of growing amplitude drives the stretcher while the coincidence
response is recorded.  Each trace is averaged per ramp phase, the optical
phase covered by one ramp is reconstructed, and the amplitude is classified:

- Incomplete:     less than one full fringe per ramp (modulation too small)
- Optimal:        the ramp covers one fringe and the output is continuous
                  across the ramp reset
- Discontinuous:  more than one fringe per ramp (reset jump visible)

A binary search over the amplitude then finds the smallest Optimal amplitude,
which fixes (s_min, s_max) to span one 2*pi period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .plant import DAC_MAX

SPAN_TOLERANCE = 0.03          # relative band around one full fringe
RESET_JUMP_TOLERANCE = 0.1     # rad, phase continuity across the ramp reset
LINEARITY_TOLERANCE = 0.35     # rad rms, unwrapped phase must follow the ramp


class ResponseClass(Enum):
    INCOMPLETE = "Incomplete"
    OPTIMAL = "Optimal"
    DISCONTINUOUS = "Discontinuous"


@dataclass(frozen=True)
class SawtoothConfig:
    offset: int = 0
    amplitude: int = 1024
    period: int = 64
    ramps: int = 6

    def validate(self) -> None:
        if self.offset < 0:
            raise ValueError(f"offset must be >= 0, got {self.offset}")
        if self.offset + self.amplitude > DAC_MAX:
            raise ValueError(
                f"offset + amplitude must be <= {DAC_MAX}, "
                f"got {self.offset + self.amplitude}"
            )
        if self.period < 8:
            raise ValueError(f"period must be >= 8, got {self.period}")
        if self.ramps < 2:
            raise ValueError(f"ramps must be >= 2, got {self.ramps}")


class CalibrationError(RuntimeError):
    """No Optimal amplitude exists in the search range."""

    def __init__(self, message: str, classifications: dict[int, ResponseClass]):
        super().__init__(message)
        self.classifications = dict(classifications)


@dataclass(frozen=True)
class CalibrationResult:
    s_min: int
    s_max: int
    amplitude: int
    gain_estimate: float  # rad per AU implied by the recovered span
    rounds: int
    classifications: dict[int, ResponseClass] = field(default_factory=dict)


def generate_sawtooth(cfg: SawtoothConfig, tick: int) -> int:
    """Sawtooth control word at a given tick; resets to offset each period."""
    if tick < 0:
        raise ValueError(f"tick must be >= 0, got {tick}")
    phase = tick % cfg.period
    return cfg.offset + (cfg.amplitude * phase) // cfg.period


def _ramp_average(trace: np.ndarray, period: int) -> np.ndarray:
    ramps = len(trace) // period
    return trace[: ramps * period].reshape(ramps, period).mean(axis=0)


def _find_extrema(avg: np.ndarray, prominence: float) -> list[tuple[int, str]]:
    """Interior extrema (index, 'max'|'min') with the given vertical prominence."""
    extrema: list[tuple[int, str]] = []
    anchor = float(avg[0])
    anchor_idx = 0
    direction = 0  # +1 climbing, -1 falling
    for idx in range(1, len(avg)):
        value = float(avg[idx])
        if direction >= 0 and value < anchor - prominence:
            if direction > 0:
                extrema.append((anchor_idx, "max"))
            direction = -1
            anchor, anchor_idx = value, idx
        elif direction <= 0 and value > anchor + prominence:
            if direction < 0:
                extrema.append((anchor_idx, "min"))
            direction = 1
            anchor, anchor_idx = value, idx
        elif direction >= 0 and value > anchor:
            anchor, anchor_idx = value, idx
        elif direction <= 0 and value < anchor:
            anchor, anchor_idx = value, idx
    return extrema


def _unwrap_phase(avg: np.ndarray, prominence: float) -> np.ndarray:
    """Phase reconstruction of one averaged ramp.

    Normalizes the ramp to [-1, 1] and maps through arccos; monotone
    segments between detected extrema pick the falling (phase in (0, pi))
    or rising (phase in (pi, 2*pi)) cosine branch, and every maximum passed
    advances the wrap count.  The sawtooth only drives the phase forward,
    so the result should grow linearly for a well normalized trace.
    """
    lo, hi = float(np.min(avg)), float(np.max(avg))
    mid, half = (hi + lo) / 2.0, (hi - lo) / 2.0
    c = np.clip((avg - mid) / half, -1.0, 1.0)
    theta = np.arccos(c)  # principal branch, [0, pi]
    two_pi = 2.0 * math.pi

    extrema = _find_extrema(avg, prominence)
    boundaries = [e[0] for e in extrema]
    segment_starts = [0] + [b + 1 for b in boundaries]
    segment_ends = boundaries + [len(avg) - 1]

    # value-falling segments sit on the (0, pi) branch (cos decreasing)
    if extrema:
        first_falling = extrema[0][1] == "min"
    else:
        first_falling = float(avg[-1]) <= float(avg[0])

    psi = np.empty(len(avg))
    falling = first_falling
    wraps = 0
    for start, end in zip(segment_starts, segment_ends):
        block = theta[start : end + 1]
        psi[start : end + 1] = (
            wraps * two_pi + block if falling else wraps * two_pi + (two_pi - block)
        )
        if not falling:
            wraps += 1  # the segment ended at (or ran into) a maximum
        falling = not falling
    return psi


def _span_fit(avg: np.ndarray, prominence: float) -> tuple[float, float]:
    """Full-ramp phase span and linearity residual of the unwrapped phase.

    The sawtooth drives the phase linearly in the sample index, so for a
    correctly normalized trace the unwrapped phase is a line; a large
    residual means the trace covers less than one full fringe and the
    min-max normalization stretched a partial cosine into a fake one.  The
    fitted slope times the period extrapolates the sampled span to the full
    amplitude (the last sample sits one step short of the reset).
    """
    psi = _unwrap_phase(avg, prominence)
    k = np.arange(len(psi))
    slope, intercept = np.polyfit(k, psi, 1)
    rmse = float(np.sqrt(np.mean((psi - (slope * k + intercept)) ** 2)))
    return float(slope) * len(psi), rmse


def classify_response(
    trace, period: int, noise_floor: float = 0.0
) -> ResponseClass:
    """Classify one sawtooth response trace.

    ``trace`` must cover at least two full ramps of the given period; it is
    averaged per ramp phase before analysis.  ``noise_floor`` is the minimum
    modulation half-range regarded as a real fringe signal.
    """
    values = np.asarray(trace, dtype=float)
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    if len(values) < 2 * period:
        raise ValueError(
            f"trace must cover >= 2 ramps ({2 * period} samples), got {len(values)}"
        )
    avg = _ramp_average(values, period)
    half_range = (float(np.max(avg)) - float(np.min(avg))) / 2.0
    if half_range <= noise_floor:
        return ResponseClass.INCOMPLETE

    prominence = max(noise_floor, 0.05 * half_range)
    extrema = _find_extrema(avg, prominence)
    if not extrema:
        return ResponseClass.INCOMPLETE
    if len(extrema) >= 3:
        return ResponseClass.DISCONTINUOUS

    span, rmse = _span_fit(avg, prominence)
    if rmse > LINEARITY_TOLERANCE:
        # Stretched partial fringe: modulation does not cover one wavelength.
        return ResponseClass.INCOMPLETE
    two_pi = 2.0 * math.pi
    if span < two_pi * (1.0 - SPAN_TOLERANCE):
        return ResponseClass.INCOMPLETE
    if span > two_pi * (1.0 + SPAN_TOLERANCE):
        return ResponseClass.DISCONTINUOUS
    if abs(span - two_pi) > RESET_JUMP_TOLERANCE:
        # Within the coarse band but the reset still jumps; steer the search
        # by the sign of the residual.
        return (
            ResponseClass.DISCONTINUOUS if span > two_pi else ResponseClass.INCOMPLETE
        )
    return ResponseClass.OPTIMAL


def auto_calibrate(
    probe: Callable[[int], float],
    offset: int = 0,
    period: int = 64,
    ramps: int = 6,
    amplitude_min: int = 64,
) -> CalibrationResult:
    """Discover (s_min, s_max) spanning one 2*pi period by bisection.

    ``probe`` drives the plant for one window at the given control word and
    returns the feedback counts.  The search classifies at most
    ceil(log2(4096)) = 12 amplitudes and returns the smallest one classified
    Optimal; if none exists a :class:`CalibrationError` carries the observed
    classifications for diagnosis.
    """
    if not 0 <= offset < DAC_MAX:
        raise ValueError(f"offset must be in [0, {DAC_MAX}), got {offset}")
    lo, hi = amplitude_min, DAC_MAX - offset
    if lo > hi:
        raise ValueError("empty amplitude search range")

    def measure(amplitude: int) -> ResponseClass:
        cfg = SawtoothConfig(offset=offset, amplitude=amplitude, period=period,
                             ramps=ramps)
        cfg.validate()
        trace = [probe(generate_sawtooth(cfg, t)) for t in range(ramps * period)]
        mean_level = max(float(np.mean(trace)), 1.0)
        floor = 5.0 * math.sqrt(mean_level / ramps)
        return classify_response(trace, period, noise_floor=floor)

    classifications: dict[int, ResponseClass] = {}
    best: int | None = None
    rounds = 0
    while lo <= hi:
        mid = (lo + hi) // 2
        outcome = measure(mid)
        classifications[mid] = outcome
        rounds += 1
        if outcome is ResponseClass.OPTIMAL:
            best = mid
            hi = mid - 1
        elif outcome is ResponseClass.INCOMPLETE:
            lo = mid + 1
        else:
            hi = mid - 1

    if best is None:
        raise CalibrationError(
            "no amplitude classified Optimal in the search range "
            f"[{amplitude_min}, {DAC_MAX - offset}]",
            classifications,
        )
    return CalibrationResult(
        s_min=offset,
        s_max=offset + best,
        amplitude=best,
        gain_estimate=2.0 * math.pi / best,
        rounds=rounds,
        classifications=classifications,
    )
