"""Event-level model of the photon acquisition pipeline.

Detector pulses carry an 8-bit fine arrival time within a coarse cycle; the
pipeline applies per-channel delay compensation, counts per-channel singles
and pairwise coincidences with 24-bit wrapping counters, and integrates them
into per-window reports on a sync boundary.

Time convention: the absolute fine time of an event is ``cycle * 256 + toa``.
A coincidence window is expressed in fine-time units and the boundary is
inclusive (|t_a - t_b| <= window counts).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TOA_BITS = 8
SLOTS_PER_CYCLE = 1 << TOA_BITS
COUNTER_BITS = 24
COUNTER_MASK = (1 << COUNTER_BITS) - 1

DEFAULT_COINCIDENCE_WINDOW = 1


class Channel(Enum):
    TG = "Tg"
    D1 = "D1"
    D2 = "D2"


@dataclass(frozen=True)
class PulseEvent:
    channel: Channel
    cycle: int
    toa: int

    def __post_init__(self) -> None:
        if not 0 <= self.toa < SLOTS_PER_CYCLE:
            raise ValueError(f"toa must fit in {TOA_BITS} bits, got {self.toa}")
        if self.cycle < 0:
            raise ValueError(f"cycle must be non-negative, got {self.cycle}")

    @property
    def time(self) -> int:
        """Absolute fine time."""
        return self.cycle * SLOTS_PER_CYCLE + self.toa


@dataclass
class CountReport:
    """Per-window singles and pairwise coincidence totals (24-bit semantics)."""

    singles_tg: int = 0
    singles_d1: int = 0
    singles_d2: int = 0
    cc_tg_d1: int = 0
    cc_tg_d2: int = 0
    cc_d1_d2: int = 0
    window_index: int = 0

    _COUNTERS = (
        "singles_tg",
        "singles_d1",
        "singles_d2",
        "cc_tg_d1",
        "cc_tg_d2",
        "cc_d1_d2",
    )

    def __post_init__(self) -> None:
        for name in self._COUNTERS:
            value = getattr(self, name)
            if not 0 <= value <= COUNTER_MASK:
                raise ValueError(f"{name}={value} does not fit a 24-bit counter")


@dataclass(frozen=True)
class DelayConfig:
    """Per-channel shifts in fine-time units (may be negative)."""

    delay_tg: int = 0
    delay_d1: int = 0
    delay_d2: int = 0

    def for_channel(self, channel: Channel) -> int:
        return {
            Channel.TG: self.delay_tg,
            Channel.D1: self.delay_d1,
            Channel.D2: self.delay_d2,
        }[channel]


def _check_sorted(events: list[PulseEvent]) -> None:
    for a, b in zip(events, events[1:]):
        if (a.cycle, a.toa) > (b.cycle, b.toa):
            raise ValueError("event stream must be sorted by (cycle, toa)")


def apply_delay(
    events: list[PulseEvent], cfg: DelayConfig
) -> tuple[list[PulseEvent], int]:
    """Shift each event's absolute time by its channel delay.

    Carries overflow of the 8-bit fine field into the cycle index.  Events
    whose shifted time would be negative are dropped; the second return value
    tallies them.  Output is re-sorted by time, stable for equal times.
    """
    _check_sorted(events)
    shifted: list[PulseEvent] = []
    dropped = 0
    for ev in events:
        t = ev.time + cfg.for_channel(ev.channel)
        if t < 0:
            dropped += 1
            continue
        cycle, toa = divmod(t, SLOTS_PER_CYCLE)
        shifted.append(PulseEvent(ev.channel, cycle, toa))
    shifted.sort(key=lambda ev: ev.time)  # stable: ties keep input order
    return shifted, dropped


def _greedy_pair_count(times_a: list[int], times_b: list[int], window: int) -> int:
    """Earliest-first matching: each event pairs at most once per pair type."""
    i = j = matched = 0
    na, nb = len(times_a), len(times_b)
    while i < na and j < nb:
        dt = times_a[i] - times_b[j]
        if abs(dt) <= window:
            matched += 1
            i += 1
            j += 1
        elif dt > 0:
            j += 1
        else:
            i += 1
    return matched


def count_coincidences(
    events: list[PulseEvent],
    window: int = DEFAULT_COINCIDENCE_WINDOW,
    window_index: int = 0,
) -> CountReport:
    """Count singles and pairwise coincidences over one event stream.

    The stream must be time sorted.  All counters wrap modulo 2**24.
    """
    if window < 0:
        raise ValueError(f"coincidence window must be >= 0, got {window}")
    _check_sorted(events)
    times = {ch: [] for ch in Channel}
    for ev in events:
        times[ev.channel].append(ev.time)
    return CountReport(
        singles_tg=len(times[Channel.TG]) & COUNTER_MASK,
        singles_d1=len(times[Channel.D1]) & COUNTER_MASK,
        singles_d2=len(times[Channel.D2]) & COUNTER_MASK,
        cc_tg_d1=_greedy_pair_count(times[Channel.TG], times[Channel.D1], window)
        & COUNTER_MASK,
        cc_tg_d2=_greedy_pair_count(times[Channel.TG], times[Channel.D2], window)
        & COUNTER_MASK,
        cc_d1_d2=_greedy_pair_count(times[Channel.D1], times[Channel.D2], window)
        & COUNTER_MASK,
        window_index=window_index,
    )


class WindowAccumulator:
    """Accumulates sub-reports within a sync window, 24-bit wrapped.

    ``close()`` returns the report for the window being closed, zeroes the
    accumulators and advances the window index.
    """

    def __init__(self) -> None:
        self.window_index = 0
        self._totals = dict.fromkeys(CountReport._COUNTERS, 0)

    def add(self, report: CountReport) -> None:
        for name in CountReport._COUNTERS:
            self._totals[name] = (self._totals[name] + getattr(report, name)) & COUNTER_MASK

    def close(self) -> CountReport:
        report = CountReport(window_index=self.window_index, **self._totals)
        self._totals = dict.fromkeys(CountReport._COUNTERS, 0)
        self.window_index += 1
        return report


def synthesize_window_events(
    rng: np.random.Generator,
    window_index: int,
    pair_rate_d1: float,
    pair_rate_d2: float,
    background_tg: float = 0.0,
    background_d1: float = 0.0,
    background_d2: float = 0.0,
    cycles_per_window: int = 1024,
) -> list[PulseEvent]:
    """Generate one window of events: coincident pairs plus background singles.

    Pair events share an identical absolute time on Tg and the detector
    channel; background events are independent.  Used to cross-check the
    event path against the plant's direct rate path.
    """
    span = cycles_per_window * SLOTS_PER_CYCLE
    base = window_index * span
    events: list[PulseEvent] = []

    def add(channel: Channel, offset: int) -> None:
        cycle, toa = divmod(base + offset, SLOTS_PER_CYCLE)
        events.append(PulseEvent(channel, cycle, toa))

    for rate, partner in ((pair_rate_d1, Channel.D1), (pair_rate_d2, Channel.D2)):
        for offset in rng.integers(0, span, size=rng.poisson(rate)):
            add(Channel.TG, int(offset))
            add(partner, int(offset))
    for rate, channel in (
        (background_tg, Channel.TG),
        (background_d1, Channel.D1),
        (background_d2, Channel.D2),
    ):
        if rate > 0:
            for offset in rng.integers(0, span, size=rng.poisson(rate)):
                add(channel, int(offset))
    events.sort(key=lambda ev: ev.time)
    return events


def events_to_csv(events: list[PulseEvent]) -> str:
    """Dump a stream as ``channel,cycle,toa`` lines (golden-vector format)."""
    lines = ["channel,cycle,toa"]
    lines += [f"{ev.channel.value},{ev.cycle},{ev.toa}" for ev in events]
    return "\n".join(lines) + "\n"


def events_from_csv(text: str) -> list[PulseEvent]:
    lines = text.strip().splitlines()
    if not lines or lines[0] != "channel,cycle,toa":
        raise ValueError("event dump must start with header 'channel,cycle,toa'")
    events = []
    for line in lines[1:]:
        channel, cycle, toa = line.split(",")
        events.append(PulseEvent(Channel(channel), int(cycle), int(toa)))
    return events
