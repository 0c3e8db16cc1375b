# -*- coding: utf-8 -*-
"""
Scenario files: INI sections describing source, circuit, control,
imperfections and the sweep to run
"""

import configparser
import logging
import re
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import config
from detection import D1, D2A, D2B, AcceptPolicy
from errors import ScenarioError, StateError
from feedforward import LatencyBudget, TimingConfig
from fockstate import JonesVector
from imperfections import ChannelCalibration, OverlapModel, coherence_time_from_filter

logger = logging.getLogger(__name__)


class ControlPolicy(str, Enum):
    PASSIVE = "passive"
    OR_GATE = "or_gate"
    OR_GATE_NO_CORRECTION = "or_gate_no_correction"

    @property
    def accept_policy(self) -> AcceptPolicy:
        return AcceptPolicy.PASSIVE if self == ControlPolicy.PASSIVE else AcceptPolicy.OR_GATE

    @property
    def corrects(self) -> bool:
        return self == ControlPolicy.OR_GATE


class Channel(str, Enum):
    D2A = "d2a"
    D2B = "d2b"
    BOTH = "both"


class SweepKind(str, Enum):
    ANALYZER = "analyzer"
    DELAY = "delay"
    OVERLAP = "overlap"


class OverlapAxis(str, Enum):
    V = "v"
    DELAY_NS = "delay_ns"


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SourceSection(_Section):
    input_theta_deg: Optional[float] = Field(None, description="Linear input polarization; 30 when nothing is given")
    input_jones: Optional[Tuple[complex, complex]] = Field(None, description="'alpha, beta' instead of an angle")
    ancilla_prep: bool = True
    pair_rate_per_min: float = Field(440.0, gt=0.0)

    @field_validator("input_jones", mode="before")
    @classmethod
    def parse_jones(cls, value):
        value = _split_list(value)
        if value is None:
            return None
        if len(value) != 2:
            raise ValueError("input_jones takes exactly two complex amplitudes")
        return tuple(complex(v.replace(" ", "")) if isinstance(v, str) else v for v in value)

    @model_validator(mode="after")
    def one_input(self):
        if self.input_jones is not None:
            if self.input_theta_deg is not None:
                raise ValueError("give input_theta_deg or input_jones, not both")
            try:
                JonesVector(*self.input_jones).validate()
            except StateError as e:
                raise ValueError(str(e))
        return self

    @property
    def jones(self) -> JonesVector:
        if self.input_jones is not None:
            return JonesVector(*self.input_jones)
        return JonesVector.linear(30.0 if self.input_theta_deg is None else self.input_theta_deg)


class CircuitSection(_Section):
    coupling_eta: float = Field(0.5, ge=0.0, le=1.0, description="Fiber coupling efficiency")
    delay_ns: float = Field(100.0, ge=0.0, description="Fiber storage delay")
    residual_rotation_deg: float = 0.0
    analyzer_theta_deg: float = 30.0


class ControlSection(LatencyBudget):
    policy: ControlPolicy = ControlPolicy.OR_GATE
    channel: Channel = Channel.BOTH
    extra_electronic_delay_ns: float = 0.0
    edge_sigma_ns: float = Field(3.0, ge=0.0)
    hold_ns: Optional[float] = Field(None, gt=0.0)

    @property
    def budget(self) -> LatencyBudget:
        return LatencyBudget(**{name: getattr(self, name) for name in LatencyBudget.model_fields})


class ImperfectionsSection(_Section):
    overlap_v: float = Field(1.0, ge=0.0, le=1.0)
    coherence_time_ns: float = Field(default_factory=coherence_time_from_filter, gt=0.0)
    relative_delay_ns: Optional[float] = None
    efficiency_d1: float = Field(1.0, ge=0.0, le=1.0)
    efficiency_d2a: float = Field(1.0, ge=0.0, le=1.0)
    efficiency_d2b: float = Field(1.0, ge=0.0, le=1.0)
    anchor_efficiency: float = Field(1.0, gt=0.0, le=1.0)


DEFAULT_SWEEPS = {
    (SweepKind.ANALYZER, OverlapAxis.V): (0.0, 180.0, 5.0),
    (SweepKind.DELAY, OverlapAxis.V): (-70.0, 40.0, 1.0),
    (SweepKind.OVERLAP, OverlapAxis.V): (0.0, 1.0, 0.25),
    (SweepKind.OVERLAP, OverlapAxis.DELAY_NS): (-3e-4, 3e-4, 2e-5),
}


def grid(start: float, stop: float, step: float) -> Tuple[float, ...]:
    """Inclusive evenly spaced grid, rounded so that 0.1-style steps stay exact"""
    count = int(round((stop - start) / step)) + 1
    return tuple(float(x) for x in np.round(start + step * np.arange(count), 12))


class SweepSection(_Section):
    kind: SweepKind
    points: Optional[Tuple[float, ...]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = Field(None, gt=0.0)
    axis: OverlapAxis = OverlapAxis.V

    @field_validator("points", mode="before")
    @classmethod
    def parse_points(cls, value):
        return _split_list(value)

    @model_validator(mode="after")
    def one_grid(self):
        ranged = [self.start, self.stop, self.step]
        if self.points is not None and any(x is not None for x in ranged):
            raise ValueError("give points or start/stop/step, not both")
        if any(x is not None for x in ranged):
            if any(x is None for x in ranged):
                raise ValueError("start, stop and step go together")
            if self.stop < self.start:
                raise ValueError("stop must not be below start")
        if self.points is not None and not self.points:
            raise ValueError("points is empty")
        if self.axis == OverlapAxis.DELAY_NS and self.kind != SweepKind.OVERLAP:
            raise ValueError("axis applies to overlap sweeps only")
        return self

    def values(self) -> Tuple[float, ...]:
        if self.points is not None:
            return self.points
        if self.start is not None:
            return grid(self.start, self.stop, self.step)
        axis = self.axis if self.kind == SweepKind.OVERLAP else OverlapAxis.V
        return grid(*DEFAULT_SWEEPS[(self.kind, axis)])


class Scenario(BaseModel):
    """A complete experiment description"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    source: SourceSection = Field(default_factory=SourceSection)
    circuit: CircuitSection = Field(default_factory=CircuitSection)
    control: ControlSection = Field(default_factory=ControlSection)
    imperfections: ImperfectionsSection = Field(default_factory=ImperfectionsSection)
    sweep: SweepSection

    def timing(self) -> TimingConfig:
        return TimingConfig(
            fiber_delay_ns=self.circuit.delay_ns,
            extra_electronic_delay_ns=self.control.extra_electronic_delay_ns,
            edge_sigma_ns=self.control.edge_sigma_ns,
            hold_ns=self.control.hold_ns,
        )

    def overlap(self) -> OverlapModel:
        i = self.imperfections
        return OverlapModel(overlap_v=i.overlap_v, coherence_time_ns=i.coherence_time_ns,
                            relative_delay_ns=i.relative_delay_ns)

    def calibration(self) -> ChannelCalibration:
        i = self.imperfections
        return ChannelCalibration(
            efficiencies={D1: i.efficiency_d1, D2A: i.efficiency_d2a, D2B: i.efficiency_d2b},
            pair_rate_per_min=self.source.pair_rate_per_min,
            anchor_efficiency=i.anchor_efficiency,
        )

    def updated(self, section: str, **changes) -> "Scenario":
        """Copy with some keys of one section replaced (validated)"""
        current = getattr(self, section)
        replaced = type(current)(**{**current.model_dump(exclude_none=True), **changes})
        return self.model_copy(update={section: replaced})


SECTIONS = {
    "source": SourceSection,
    "circuit": CircuitSection,
    "control": ControlSection,
    "imperfections": ImperfectionsSection,
    "sweep": SweepSection,
}

_SECTION_RE = re.compile(r"^\s*\[(?P<name>[^\]]+)\]")
_KEY_RE = re.compile(r"^\s*(?P<key>[^#=:\s][^=:]*?)\s*[=:]")


def _column(lines, lineno: Optional[int]) -> Optional[int]:
    if lineno is None or not 1 <= lineno <= len(lines):
        return None
    line = lines[lineno - 1]
    return len(line) - len(line.lstrip()) + 1


def _index_positions(lines) -> Dict[Tuple[str, Optional[str]], int]:
    """(section, key) -> line number; key None for the section header"""
    positions = {}
    section = None
    for lineno, line in enumerate(lines, start=1):
        if line.lstrip().startswith("#"):
            continue
        match = _SECTION_RE.match(line)
        if match:
            section = match.group("name").strip()
            positions.setdefault((section, None), lineno)
            continue
        match = _KEY_RE.match(line)
        if match and section is not None:
            positions.setdefault((section, match.group("key")), lineno)
    return positions


def _read_ini(text: str, source: str) -> configparser.ConfigParser:
    lines = text.splitlines()
    parser = configparser.ConfigParser(strict=True, interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), default_section="\x00defaults")
    parser.optionxform = str  # keys are case sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateSectionError as e:
        raise ScenarioError(f"duplicate section [{e.section}]", e.lineno, _column(lines, e.lineno))
    except configparser.DuplicateOptionError as e:
        raise ScenarioError(f"duplicate key '{e.option}' in [{e.section}]", e.lineno,
                            _column(lines, e.lineno), key=f"{e.section}.{e.option}")
    except configparser.MissingSectionHeaderError as e:
        raise ScenarioError(f"expected a [section] header, got {e.line.strip()!r}", e.lineno,
                            _column(lines, e.lineno))
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ScenarioError(f"cannot parse {line.strip()!s}", lineno, _column(lines, lineno))
    return parser


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    lines = text.splitlines()
    positions = _index_positions(lines)
    parser = _read_ini(text, source)

    def locate(section, key=None):
        lineno = positions.get((section, key)) or positions.get((section, None))
        return lineno, _column(lines, lineno)

    sections = {}
    for name in parser.sections():
        if name not in SECTIONS:
            raise ScenarioError(f"unknown section [{name}]", *locate(name))
        raw = dict(parser.items(name))
        try:
            sections[name] = SECTIONS[name](**raw)
        except ValidationError as e:
            error = e.errors()[0]
            key = str(error["loc"][0]) if error["loc"] else None
            label = f"[{name}] {key}" if key else f"[{name}]"
            message = "unknown key" if error["type"] == "extra_forbidden" else error["msg"]
            raise ScenarioError(f"{label}: {message}", *locate(name, key),
                                key=f"{name}.{key}" if key else None)

    if "sweep" not in sections:
        raise ScenarioError("missing required section [sweep]")
    scenario = Scenario(**sections)
    logger.debug(f"Parsed scenario {source}: sweep {scenario.sweep.kind.value}, policy {scenario.control.policy.value}")
    return scenario


def _format(value) -> str:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    return repr(value)


def serialize_scenario(s: Scenario) -> str:
    """Scenario file text that parses back to an equal Scenario"""
    out = []
    for name in SECTIONS:
        section = getattr(s, name)
        out.append(f"[{name}]")
        for key, value in section.model_dump(exclude_none=True).items():
            out.append(f"{key} = {_format(value)}")
        out.append("")
    return "\n".join(out)


def load_scenario(path) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding=config.CSV_ENCODING)
    scenario = parse_scenario(text, source=str(path))
    logger.info(f"Loaded scenario {path.name}: {scenario.sweep.kind.value} sweep, "
                f"policy {scenario.control.policy.value}")
    return scenario
