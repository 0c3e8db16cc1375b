# -*- coding: utf-8 -*-
"""
Classical feed-forward: outcome -> correction, and whether the Pockels cell
voltage is on when the stored photon passes through it.

Time origin is the moment the ancilla photon reaches its detector; the
output photon reaches the Pockels cell after the fiber storage delay.
"""

import logging
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import ndtr

from detection import D2A, AcceptPolicy, DetectionOutcome, accept
from elements import Pockels, pockels_map
from errors import AnalysisError, FeedForwardError
from fockstate import ModeId, PhotonicState, apply_slot_map

logger = logging.getLogger(__name__)


class LatencyBudget(BaseModel):
    """Latencies of the classical chain, in ns"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    detector_edge_ns: float = Field(18.0, ge=0.0, description="Detector output rise time")
    pockels_chain_ns: float = Field(38.0, ge=0.0, description="Pockels driver and cell response")
    logic_board_ns: float = Field(18.0, ge=0.0, description="OR-gate logic board")
    cabling_ns: float = Field(26.0, ge=0.0, description="Signal cables")
    ttl_pulse_width_ns: float = Field(33.0, gt=0.0, description="Width of the OR-gate output pulse")


class TimingConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    fiber_delay_ns: float = Field(100.0, ge=0.0)
    extra_electronic_delay_ns: float = Field(0.0, description="Adjustable delay in the Pockels driver; may be negative")
    edge_sigma_ns: float = Field(3.0, ge=0.0, description="Gaussian width of the voltage edges")
    hold_ns: Optional[float] = Field(None, gt=0.0, description="Voltage hold time; defaults to the TTL pulse width")

    def hold_for(self, budget: LatencyBudget) -> float:
        return budget.ttl_pulse_width_ns if self.hold_ns is None else self.hold_ns


class Correction(str, Enum):
    IDENTITY = "identity"
    Z = "z"


class VoltageWindow(NamedTuple):
    t_on: float
    t_off: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_on + self.t_off)


def correction_for(outcome: DetectionOutcome) -> Correction:
    if not accept(outcome, AcceptPolicy.OR_GATE):
        raise FeedForwardError(f"No correction defined for outcome {outcome}")
    if outcome.count(D2A) == 1:
        return Correction.IDENTITY
    return Correction.Z


def total_system_delay(b: LatencyBudget) -> float:
    return b.detector_edge_ns + b.pockels_chain_ns + b.logic_board_ns + b.cabling_ns


def voltage_window(b: LatencyBudget, t: TimingConfig) -> VoltageWindow:
    t_on = total_system_delay(b) + t.extra_electronic_delay_ns
    return VoltageWindow(t_on, t_on + t.hold_for(b))


def applied_probability(photon_arrival_ns: float, window: VoltageWindow, edge_sigma_ns: float) -> float:
    """Chance the half-wave voltage is on at arrival: two Gaussian-smoothed edges"""
    if edge_sigma_ns < 0.0:
        raise AnalysisError(f"Edge width must be non-negative, got {edge_sigma_ns} ns")
    if edge_sigma_ns == 0.0:
        return float(window.t_on <= photon_arrival_ns <= window.t_off)
    rise = ndtr((photon_arrival_ns - window.t_on) / edge_sigma_ns)
    fall = ndtr((window.t_off - photon_arrival_ns) / edge_sigma_ns)
    return float(rise * fall)


def timing_applied_probability(budget: LatencyBudget, timing: TimingConfig) -> float:
    window = voltage_window(budget, timing)
    p = applied_probability(timing.fiber_delay_ns, window, timing.edge_sigma_ns)
    if p < 1e-3:
        logger.warning(f"Voltage window [{window.t_on:.1f}, {window.t_off:.1f}] ns misses the photon "
                       f"arriving at {timing.fiber_delay_ns:.1f} ns; corrections will not land")
    elif p < 0.99:
        logger.info(f"Voltage window [{window.t_on:.1f}, {window.t_off:.1f}] ns only partly covers the photon "
                    f"arriving at {timing.fiber_delay_ns:.1f} ns; corrections land with probability {p:.3f}")
    return p


def apply_feedforward(state: PhotonicState, c: Correction, applied: bool, out_mode: ModeId) -> PhotonicState:
    if c == Correction.Z and applied:
        return apply_slot_map(state, pockels_map(Pockels(mode=out_mode, on=True)))
    return state


def plateau_stats(curve: Sequence[Tuple[float, float]]) -> dict:
    """Center, full width at half maximum and peak of a single-plateau scan.

    Half maximum is taken midway between the curve's max and min; crossings
    are linearly interpolated between samples.
    """
    if len(curve) < 3:
        raise AnalysisError("Plateau analysis needs at least three points")
    points = sorted(curve)
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    top, bottom = y.max(), y.min()
    if top - bottom <= 0.0:
        raise AnalysisError("Flat curve has no plateau")
    half = 0.5 * (top + bottom)
    above = np.flatnonzero(y >= half)
    first, last = above[0], above[-1]
    if first == 0 or last == len(y) - 1:
        raise AnalysisError("Plateau runs off the scanned range")

    def crossing(i, j):
        return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i])

    left = crossing(first - 1, first)
    right = crossing(last, last + 1)
    return {
        'center': 0.5 * (left + right),
        'fwhm': right - left,
        'peak': float(top),
        'left': left,
        'right': right,
    }
