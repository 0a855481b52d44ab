"""Integer perturb-and-observe controllers for fringe maximization.

Both controllers share a three-state machine clocked once per sync tick and
compare the current feedback value against the previous tick's latch.  The
classical variant steps by a fixed amount and clamps to the DAC range; the
adaptive variant scales its step with the distance to an intensity ceiling
(division realized as a right shift) and wraps circularly between calibrated
bounds, exploiting the 2*pi periodicity of the optical phase.

State machine (per tick, `inc` = feedback strictly greater than last tick):

    index 0: if enabled      -> s += step, index 1
    index 1: inc -> s += step            | else -> s -= 2*step, index 2
    index 2: inc -> s -= step            | else -> s += step,   index 0

Ties (equal feedback) take the else branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .counting import CountReport
from .plant import DAC_MAX


class FeedbackTarget(Enum):
    TG_D1 = "TgD1"
    TG_D2 = "TgD2"


@dataclass
class ControlState:
    s_ctrl: int
    index: int = 0
    i_prev: int = 0
    en_control: bool = True

    def validate(self) -> None:
        if self.index not in (0, 1, 2):
            raise ValueError(f"index must be 0, 1 or 2, got {self.index}")
        if not 0 <= self.s_ctrl <= DAC_MAX:
            raise ValueError(f"s_ctrl out of DAC range: {self.s_ctrl}")


@dataclass(frozen=True)
class FixedParams:
    """Classical controller: fixed perturbation size in AU."""

    p: int = 50

    def validate(self) -> None:
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")


@dataclass(frozen=True)
class AdaptiveParams:
    """Adaptive step law and circular bounds.

    The step is ``((i_max - i) >> shift) + beta`` with the feedback clamped to
    [0, i_max], so it ranges over [beta, alpha + beta] where
    ``alpha = i_max >> shift``.
    """

    beta: int = 50
    shift: int = 3
    i_max: int = 3000
    s_min: int = 0
    s_max: int = 1700

    @property
    def alpha(self) -> int:
        return self.i_max >> self.shift

    def validate(self) -> None:
        if self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.shift < 0:
            raise ValueError(f"shift must be >= 0, got {self.shift}")
        if self.i_max < 1:
            raise ValueError(f"i_max must be >= 1, got {self.i_max}")
        if not 0 <= self.s_min < self.s_max <= DAC_MAX:
            raise ValueError(
                f"bounds must satisfy 0 <= s_min < s_max <= {DAC_MAX}, "
                f"got [{self.s_min}, {self.s_max}]"
            )


def adaptive_step_size(i_actual: int, params: AdaptiveParams) -> int:
    """Step size in AU for the current feedback value (integer arithmetic)."""
    if i_actual < 0:
        raise ValueError(f"i_actual must be >= 0, got {i_actual}")
    clamped = min(i_actual, params.i_max)
    return ((params.i_max - clamped) >> params.shift) + params.beta


def _state_machine(state: ControlState, i_actual: int, step: int) -> tuple[int, int]:
    increased = i_actual > state.i_prev
    s, index = state.s_ctrl, state.index
    if index == 0:
        if state.en_control:
            s += step
            index = 1
    elif index == 1:
        if increased:
            s += step
        else:
            s -= 2 * step
            index = 2
    else:
        if increased:
            s -= step
        else:
            s += step
            index = 0
    return s, index


def po_step(state: ControlState, i_actual: int, params: FixedParams) -> ControlState:
    """One classical P&O tick; the result is clamped to the DAC range."""
    s, index = _state_machine(state, i_actual, params.p)
    s = min(max(s, 0), DAC_MAX)
    return ControlState(s_ctrl=s, index=index, i_prev=i_actual,
                        en_control=state.en_control)


def adaptive_po_step(
    state: ControlState, i_actual: int, params: AdaptiveParams
) -> ControlState:
    """One adaptive P&O tick followed by the circular wrap."""
    dp = adaptive_step_size(max(i_actual, 0), params)
    s, index = _state_machine(state, i_actual, dp)
    if s > params.s_max:
        s = params.s_min
    if s < params.s_min:
        s = params.s_max
    return ControlState(s_ctrl=s, index=index, i_prev=i_actual,
                        en_control=state.en_control)


def select_feedback(report: CountReport, target: FeedbackTarget) -> int:
    """Pick the coincidence counter the controller climbs on."""
    if target is FeedbackTarget.TG_D1:
        return report.cc_tg_d1
    return report.cc_tg_d2
