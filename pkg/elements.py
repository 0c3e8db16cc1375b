# -*- coding: utf-8 -*-
"""
Optical elements as slot maps, and circuits built from them
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Annotated, FrozenSet, Iterable, Literal, NamedTuple, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import ElementError
from fockstate import ModeId, PhotonicState, Pol, Slot, SlotMap, apply_slot_map

logger = logging.getLogger(__name__)

# Spatial modes of the parity check
INPUT_MODE = "1"
ANCILLA_MODE = "2"
ANCILLA_SPARE_MODE = "2v"  # unused input port of the detector-package PBS
D2A_MODE = "2a"
D2B_MODE = "2b"
LOSS_MODE = "loss0"
PASS_MODE = "out"
BLOCK_MODE = "block"

PARITY_CHECK_MODES = frozenset({
    INPUT_MODE, ANCILLA_MODE, ANCILLA_SPARE_MODE, D2A_MODE, D2B_MODE,
    LOSS_MODE, PASS_MODE, BLOCK_MODE,
})

ANCILLA_PREP_DEG = 22.5
DETECTION_FRAME_DEG = 22.5


class _Element(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    def modes(self) -> Tuple[ModeId, ...]:
        raise NotImplementedError

    def reserved_modes(self) -> Tuple[ModeId, ...]:
        return ()


class PBS(_Element):
    """Polarizing beamsplitter: H transmitted, V reflected, both with coefficient +1"""
    kind: Literal["pbs"] = "pbs"
    in_a: ModeId = Field(..., min_length=1)
    in_b: ModeId = Field(..., min_length=1)
    out_a: ModeId = Field(..., min_length=1)
    out_b: ModeId = Field(..., min_length=1)

    def modes(self):
        return tuple(dict.fromkeys((self.in_a, self.in_b, self.out_a, self.out_b)))


class HWP(_Element):
    """Half-wave plate with fast axis at theta_deg"""
    kind: Literal["hwp"] = "hwp"
    mode: ModeId = Field(..., min_length=1)
    theta_deg: float = 0.0

    def modes(self):
        return (self.mode,)


class Pockels(_Element):
    """Pockels cell with H/V axes; at half-wave voltage it shifts H by pi"""
    kind: Literal["pockels"] = "pockels"
    mode: ModeId = Field(..., min_length=1)
    on: bool = False

    def modes(self):
        return (self.mode,)


class FiberDelay(_Element):
    """Fiber delay line with lossy coupling into an explicit loss mode"""
    kind: Literal["fiber"] = "fiber"
    mode: ModeId = Field(..., min_length=1)
    coupling_eta: float = Field(1.0, ge=0.0, le=1.0, description="Fiber coupling efficiency")
    delay_ns: float = Field(0.0, ge=0.0, description="Optical storage time")
    loss_mode: ModeId = Field(..., min_length=1)
    residual_rotation_deg: float = Field(0.0, description="Birefringence left after the polarization controller")

    @model_validator(mode="after")
    def _distinct_loss_mode(self):
        if self.loss_mode == self.mode:
            raise ValueError("loss_mode must differ from the signal mode")
        return self

    def modes(self):
        return (self.mode, self.loss_mode)

    def reserved_modes(self):
        return (self.loss_mode,)


class Analyzer(_Element):
    """Polarization analyzer: the theta component goes to pass_mode, the orthogonal one to block_mode"""
    kind: Literal["analyzer"] = "analyzer"
    mode: ModeId = Field(..., min_length=1)
    theta_deg: float = 0.0
    pass_mode: ModeId = Field(..., min_length=1)
    block_mode: ModeId = Field(..., min_length=1)

    @model_validator(mode="after")
    def _distinct_ports(self):
        if len({self.mode, self.pass_mode, self.block_mode}) != 3:
            raise ValueError("mode, pass_mode and block_mode must be distinct")
        return self

    def modes(self):
        return (self.mode, self.pass_mode, self.block_mode)

    def reserved_modes(self):
        return (self.pass_mode, self.block_mode)


Element = Annotated[Union[PBS, HWP, Pockels, FiberDelay, Analyzer], Field(discriminator="kind")]


def _pair(mode: ModeId) -> Tuple[Slot, Slot]:
    return Slot(mode, Pol.H), Slot(mode, Pol.V)


def _rotation(theta_deg: float) -> np.ndarray:
    theta = math.radians(theta_deg)
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def pbs_map(e: PBS) -> SlotMap:
    if e.in_a == e.in_b or e.out_a == e.out_b:
        raise ElementError(f"PBS inputs and outputs must be two distinct modes each: {e}")

    if e.in_a == e.out_a and e.in_b == e.out_b:
        # In-place wiring: H stays put, V swaps between the two ports
        slots = _pair(e.in_a) + _pair(e.in_b)
        moves = {0: 0, 1: 3, 2: 2, 3: 1}
    elif len({e.in_a, e.in_b, e.out_a, e.out_b}) == 4:
        slots = _pair(e.in_a) + _pair(e.in_b) + _pair(e.out_a) + _pair(e.out_b)
        # in_a:H->out_a:H, in_a:V->out_b:V, in_b:H->out_b:H, in_b:V->out_a:V, and back
        swaps = [(0, 4), (1, 7), (2, 6), (3, 5)]
        moves = {}
        for i, j in swaps:
            moves[i], moves[j] = j, i
    else:
        raise ElementError(f"PBS wiring aliases an input with the opposite output: {e}")

    matrix = np.zeros((len(slots), len(slots)))
    for source, target in moves.items():
        matrix[target, source] = 1.0
    return SlotMap(slots, matrix)


def hwp_map(e: HWP) -> SlotMap:
    two_theta = math.radians(2.0 * e.theta_deg)
    c, s = math.cos(two_theta), math.sin(two_theta)
    return SlotMap(_pair(e.mode), np.array([[c, s], [s, -c]]))


def pockels_map(e: Pockels) -> SlotMap:
    phase = np.diag([-1.0, 1.0]) if e.on else np.eye(2)
    return SlotMap(_pair(e.mode), phase)


def fiber_map(e: FiberDelay) -> SlotMap:
    t = math.sqrt(e.coupling_eta)
    r = math.sqrt(1.0 - e.coupling_eta)
    coupling = np.block([[t * np.eye(2), -r * np.eye(2)],
                         [r * np.eye(2), t * np.eye(2)]])
    birefringence = np.block([[_rotation(e.residual_rotation_deg), np.zeros((2, 2))],
                              [np.zeros((2, 2)), np.eye(2)]])
    return SlotMap(_pair(e.mode) + _pair(e.loss_mode), coupling @ birefringence)


def analyzer_map(e: Analyzer) -> SlotMap:
    theta = math.radians(e.theta_deg)
    c, s = math.cos(theta), math.sin(theta)
    # rows: (pass, block) components of the (H, V) input
    project = np.array([[c, s], [-s, c]])
    matrix = np.block([[np.zeros((2, 2)), project.T],
                       [project, np.zeros((2, 2))]])
    slots = _pair(e.mode) + (Slot(e.pass_mode, Pol.H), Slot(e.block_mode, Pol.H))
    return SlotMap(slots, matrix)


ELEMENT_MAPS = {
    PBS: pbs_map,
    HWP: hwp_map,
    Pockels: pockels_map,
    FiberDelay: fiber_map,
    Analyzer: analyzer_map,
}


def element_map(e: Element) -> SlotMap:
    try:
        builder = ELEMENT_MAPS[type(e)]
    except KeyError:
        raise ElementError(f"Unknown element type {type(e).__name__}")
    return builder(e)


def apply_element(state: PhotonicState, e: Element) -> PhotonicState:
    return apply_slot_map(state, element_map(e))


@dataclass(frozen=True, eq=False)
class Circuit:
    """Ordered elements over a registry of spatial modes"""
    elements: Tuple[Element, ...]
    modes: FrozenSet[ModeId]
    _maps: Tuple[SlotMap, ...] = field(init=False, repr=False)

    def __post_init__(self):
        elements = tuple(self.elements)
        modes = frozenset(self.modes)
        for e in elements:
            unknown = set(e.modes()) - modes
            if unknown:
                raise ElementError(f"{type(e).__name__} uses unregistered modes {sorted(unknown)}")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "_maps", tuple(element_map(e) for e in elements))

    @property
    def reserved_modes(self) -> FrozenSet[ModeId]:
        return frozenset(m for e in self.elements for m in e.reserved_modes())

    def delay_ns(self, mode: ModeId) -> float:
        """Optical storage accumulated along `mode`"""
        if mode not in self.modes:
            raise ElementError(f"Mode '{mode}' is not registered")
        return float(sum(e.delay_ns for e in self.elements
                         if isinstance(e, FiberDelay) and e.mode == mode))

    def extended(self, more: Iterable[Element]) -> "Circuit":
        return Circuit(self.elements + tuple(more), self.modes)

    def check_detectable(self, detector_modes: Iterable[ModeId]) -> None:
        """Loss, pass-through and block modes never serve as signal detectors"""
        clash = set(detector_modes) & (self.reserved_modes - {PASS_MODE})
        if clash:
            raise ElementError(f"Detectors placed on reserved modes {sorted(clash)}")


def run_circuit(state: PhotonicState, circuit: Circuit) -> PhotonicState:
    for slot_map in circuit._maps:
        state = apply_slot_map(state, slot_map)
    return state


class ParityCheckLayout(NamedTuple):
    """The three stages of the experiment; the Pockels cell sits between delay_line and analysis"""
    herald: Circuit
    delay_line: Circuit
    analysis: Circuit


def herald_elements(ancilla_prep: bool = True) -> Tuple[Element, ...]:
    """Ancilla preparation, the main PBS and the 45-degree detector package"""
    elements = []
    if ancilla_prep:
        elements.append(HWP(mode=ANCILLA_MODE, theta_deg=ANCILLA_PREP_DEG))
    elements.append(PBS(in_a=INPUT_MODE, in_b=ANCILLA_MODE, out_a=INPUT_MODE, out_b=ANCILLA_MODE))
    # PBS' rotated by 45 degrees = HWP at 22.5 followed by an H/V PBS
    elements.append(HWP(mode=ANCILLA_MODE, theta_deg=DETECTION_FRAME_DEG))
    elements.append(PBS(in_a=ANCILLA_MODE, in_b=ANCILLA_SPARE_MODE, out_a=D2A_MODE, out_b=D2B_MODE))
    return tuple(elements)


def analysis_circuit(theta_deg: float) -> Circuit:
    return Circuit((Analyzer(mode=INPUT_MODE, theta_deg=theta_deg,
                             pass_mode=PASS_MODE, block_mode=BLOCK_MODE),),
                   PARITY_CHECK_MODES)


def parity_check_layout(ancilla_prep: bool = True, coupling_eta: float = 1.0,
                        delay_ns: float = 100.0, residual_rotation_deg: float = 0.0,
                        analyzer_theta_deg: float = 30.0) -> ParityCheckLayout:
    herald = Circuit(herald_elements(ancilla_prep), PARITY_CHECK_MODES)
    delay_line = Circuit((FiberDelay(mode=INPUT_MODE, coupling_eta=coupling_eta, delay_ns=delay_ns,
                                     loss_mode=LOSS_MODE, residual_rotation_deg=residual_rotation_deg),),
                         PARITY_CHECK_MODES)
    logger.debug(f"Parity check layout: {len(herald.elements)} herald elements, "
                 f"{delay_line.delay_ns(INPUT_MODE):.1f} ns storage, analyzer at {analyzer_theta_deg} deg")
    return ParityCheckLayout(herald, delay_line, analysis_circuit(analyzer_theta_deg))
