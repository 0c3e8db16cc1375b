# -*- coding: utf-8 -*-
"""
Exceptions raised by the simulator
"""

from typing import Optional


class SimulatorError(Exception):
    """Base class for every error raised on purpose by the simulator"""


class StateError(SimulatorError, ValueError):
    """Invalid photonic state, Jones vector or slot map"""


class ElementError(SimulatorError, ValueError):
    """Optical element or circuit wiring that cannot be realized"""


class DetectionError(SimulatorError):
    """Measurement request that has no well-defined answer"""


class FeedForwardError(SimulatorError):
    """Correction requested for an outcome the control logic rejects"""


class ScenarioError(SimulatorError, ValueError):
    """Scenario file that fails to parse or validate"""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.column = column
        self.key = key
        location = ""
        if line is not None:
            location = f"line {line}, column {column or 1}: "
        super().__init__(f"{location}{message}")


class AnalysisError(SimulatorError, ValueError):
    """Curve or calibration input that admits no meaningful summary"""
