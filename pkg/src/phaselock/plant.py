"""Optical plant: expected coincidence response and stochastic counts.

Two complementary exit ports follow ``C0 * (1 +/- v * cos(phi2 - phi1 +
phi_noise))``; port D1 carries the plus sign by convention.  One ``advance``
call is one feedback window (1 simulated second): the noise phase steps once,
both expected rates are evaluated, and Poisson counts are drawn.

The slow noise phase is a sum of three independently disableable terms:
a Wiener random walk, a linear drift and one sinusoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .counting import COUNTER_MASK, CountReport

DAC_MAX = 4095


class Port(Enum):
    D1 = "D1"
    D2 = "D2"


@dataclass(frozen=True)
class NoiseConfig:
    """Noise-phase process parameters (radians, per 1 s window)."""

    diffusion: float = 0.0
    drift_rate: float = 0.0
    sine_amplitude: float = 0.0
    sine_period: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.diffusion < 0 or self.sine_amplitude < 0:
            raise ValueError("noise magnitudes must be >= 0")
        if self.sine_amplitude > 0 and self.sine_period <= 0:
            raise ValueError("sine_period must be > 0 when sine_amplitude > 0")


@dataclass(frozen=True)
class PlantConfig:
    """Optical constants, actuator gains and singles rates."""

    c0: float = 1500.0
    visibility: float = 0.9
    gain1: float = 2.0 * math.pi / 1700.0  # rad per AU
    gain2: float = 2.0 * math.pi / 1700.0
    amp_offset: float = 0.0  # phase difference at s1 = s2 = 0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    singles_tg: float = 20000.0
    singles_d1: float = 6000.0
    singles_d2: float = 6000.0

    def validate(self) -> None:
        if self.c0 <= 0:
            raise ValueError(f"c0 must be > 0, got {self.c0}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must be in [0, 1], got {self.visibility}")
        if self.gain1 <= 0 or self.gain2 <= 0:
            raise ValueError("actuator gains must be > 0")
        if min(self.singles_tg, self.singles_d1, self.singles_d2) < 0:
            raise ValueError("singles rates must be >= 0")
        self.noise.validate()


@dataclass
class PlantState:
    phi_noise: float = 0.0
    tick: int = 0


@dataclass(frozen=True)
class Observation:
    """Expected port rates for one window plus the sampled counts."""

    rate_d1: float
    rate_d2: float
    counts: CountReport


def actuator_phase(s_ctrl: int, gain: float, offset: float = 0.0) -> float:
    """Phase applied by a stretcher at control word ``s_ctrl``."""
    if not 0 <= s_ctrl <= DAC_MAX:
        raise ValueError(f"s_ctrl must be in [0, {DAC_MAX}], got {s_ctrl}")
    return offset + gain * s_ctrl


def expected_rate(
    config: PlantConfig,
    phi1: float,
    phi2: float,
    phi_noise: float,
    port: Port,
) -> float:
    """Expected coincidence rate at one exit port, counts per window.

    D2 is computed as the exact complement of D1 so the two ports always sum
    to 2*c0 bit-exactly.
    """
    modulation = config.visibility * math.cos(phi2 - phi1 + phi_noise)
    rate_d1 = config.c0 * (1.0 + modulation)
    if port is Port.D1:
        return max(0.0, rate_d1)
    return max(0.0, 2.0 * config.c0 - rate_d1)


def _sine_value(cfg: NoiseConfig, tick: int) -> float:
    if cfg.sine_amplitude == 0.0:
        return 0.0
    return cfg.sine_amplitude * math.sin(2.0 * math.pi * tick / cfg.sine_period)


def step_noise(
    state: PlantState, cfg: NoiseConfig, rng: np.random.Generator
) -> PlantState:
    """Advance the noise phase by one window.

    Always consumes exactly one normal draw so that the noise stream stays
    aligned when individual terms are toggled off.
    """
    kick = cfg.diffusion * rng.standard_normal()
    sine_inc = _sine_value(cfg, state.tick + 1) - _sine_value(cfg, state.tick)
    return PlantState(
        phi_noise=state.phi_noise + cfg.drift_rate + kick + sine_inc,
        tick=state.tick + 1,
    )


def sample_counts(rate: float, rng: np.random.Generator) -> int:
    """Draw one Poisson count at the given mean rate."""
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    return int(rng.poisson(rate))


class Plant:
    """Owns config, noise state and the dedicated noise RNG stream.

    Shot noise is drawn from the RNG passed to :meth:`advance`, which is kept
    separate from the noise stream so that paired runs can share a noise
    realization while remaining individually reproducible.
    """

    def __init__(
        self,
        config: PlantConfig,
        noise_rng: np.random.Generator | None = None,
    ) -> None:
        config.validate()
        self.config = config
        self.state = PlantState()
        self._noise_rng = (
            noise_rng
            if noise_rng is not None
            else np.random.default_rng(config.noise.seed)
        )

    def inject_phase(self, delta: float) -> None:
        """One-shot phase kick (noise-burst schedule events)."""
        self.state = replace(self.state, phi_noise=self.state.phi_noise + delta)

    def rates(self, s1: int, s2: int) -> tuple[float, float]:
        """Expected port rates at the current noise phase."""
        phi1 = actuator_phase(s1, self.config.gain1)
        phi2 = actuator_phase(s2, self.config.gain2, self.config.amp_offset)
        rate_d1 = expected_rate(self.config, phi1, phi2, self.state.phi_noise, Port.D1)
        rate_d2 = expected_rate(self.config, phi1, phi2, self.state.phi_noise, Port.D2)
        return rate_d1, rate_d2

    def advance(self, s1: int, s2: int, rng: np.random.Generator) -> Observation:
        """Run one feedback window and sample its counts."""
        self.state = step_noise(self.state, self.config.noise, self._noise_rng)
        rate_d1, rate_d2 = self.rates(s1, s2)
        cfg = self.config
        counts = CountReport(
            cc_tg_d1=sample_counts(rate_d1, rng) & COUNTER_MASK,
            cc_tg_d2=sample_counts(rate_d2, rng) & COUNTER_MASK,
            cc_d1_d2=0,
            singles_tg=sample_counts(cfg.singles_tg, rng) & COUNTER_MASK,
            singles_d1=sample_counts(cfg.singles_d1, rng) & COUNTER_MASK,
            singles_d2=sample_counts(cfg.singles_d2, rng) & COUNTER_MASK,
            window_index=self.state.tick,
        )
        return Observation(rate_d1=rate_d1, rate_d2=rate_d2, counts=counts)
