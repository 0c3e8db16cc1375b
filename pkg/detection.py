# -*- coding: utf-8 -*-
"""
Born-rule detection: outcome distributions, projection onto an outcome,
post-selection policies and seeded sampling
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from errors import DetectionError
from fockstate import BasisKet, ModeId, PhotonicState, fidelity, normalize

logger = logging.getLogger(__name__)

D1 = "D1"
D2A = "D2a"
D2B = "D2b"

DISTRIBUTION_TOLERANCE = 1e-10
PURITY_TOLERANCE = 1e-12


class Detector(BaseModel):
    """Single-photon detector watching every polarization of one spatial mode"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str = Field(..., min_length=1)
    mode: ModeId = Field(..., min_length=1)
    efficiency: float = Field(1.0, ge=0.0, le=1.0)
    dark_count_rate: float = Field(0.0, ge=0.0, le=0.0, description="Reserved; dark counts are not modeled")


class DetectorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    detectors: Tuple[Detector, ...]

    @field_validator("detectors")
    @classmethod
    def unique_ids_and_modes(cls, detectors):
        ids = [d.id for d in detectors]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Duplicate detector ids in {ids}")
        modes = [d.mode for d in detectors]
        if len(set(modes)) != len(modes):
            raise ValueError(f"Two detectors watch the same mode in {modes}")
        return detectors

    @classmethod
    def of(cls, *pairs: Tuple[str, ModeId], efficiencies: Optional[Mapping[str, float]] = None) -> "DetectorConfig":
        efficiencies = efficiencies or {}
        return cls(detectors=tuple(Detector(id=i, mode=m, efficiency=efficiencies.get(i, 1.0)) for i, m in pairs))

    def by_mode(self) -> Dict[ModeId, Detector]:
        return {d.mode: d for d in self.detectors}

    def efficiency(self, detector_id: str) -> float:
        for d in self.detectors:
            if d.id == detector_id:
                return d.efficiency
        raise DetectionError(f"Unknown detector '{detector_id}'")


@dataclass(frozen=True, order=True)
class DetectionOutcome:
    """Photon counts per detector (zero counts omitted) plus photons nobody registered"""
    counts: Tuple[Tuple[str, int], ...]
    undetected: int = 0

    @classmethod
    def of(cls, counts: Mapping[str, int], undetected: int = 0) -> "DetectionOutcome":
        if undetected < 0 or any(n < 0 for n in counts.values()):
            raise DetectionError("Photon counts cannot be negative")
        return cls(tuple(sorted((k, int(n)) for k, n in counts.items() if n)), int(undetected))

    def count(self, detector_id: str) -> int:
        return dict(self.counts).get(detector_id, 0)

    @property
    def photon_number(self) -> int:
        return sum(n for _, n in self.counts) + self.undetected

    def __str__(self) -> str:
        fired = " ".join(f"{k}={n}" for k, n in self.counts) or "none"
        return f"{fired} (undetected {self.undetected})"


@dataclass(frozen=True)
class OutcomeDistribution:
    entries: Tuple[Tuple[DetectionOutcome, float], ...]

    def __post_init__(self):
        entries = tuple(sorted(self.entries))
        if len({outcome for outcome, _ in entries}) != len(entries):
            raise DetectionError("Outcome listed twice in a distribution")
        if any(p < -DISTRIBUTION_TOLERANCE for _, p in entries):
            raise DetectionError("Negative outcome probability")
        total = sum(p for _, p in entries)
        if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
            raise DetectionError(f"Outcome probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "entries", tuple((o, max(0.0, float(p))) for o, p in entries))

    @classmethod
    def from_weights(cls, weights: Mapping[DetectionOutcome, float]) -> "OutcomeDistribution":
        return cls(tuple(weights.items()))

    @property
    def outcomes(self) -> Tuple[DetectionOutcome, ...]:
        return tuple(o for o, _ in self.entries)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.entries])

    def probability(self, outcome: DetectionOutcome) -> float:
        return dict(self.entries).get(outcome, 0.0)

    def where(self, predicate) -> float:
        """Total probability of the outcomes satisfying predicate"""
        return float(sum(p for o, p in self.entries if predicate(o)))


@dataclass(frozen=True)
class HeraldedBranch:
    """One detection outcome with the mixture left behind in the unwatched modes"""
    outcome: DetectionOutcome
    probability: float
    components: Tuple[Tuple[float, PhotonicState], ...]


def _split(ket: BasisKet, watched: Mapping[ModeId, Detector]):
    detected = tuple(slot for slot in ket if slot.mode in watched)
    rest = tuple(slot for slot in ket if slot.mode not in watched)
    return detected, rest


def _physical_groups(state: PhotonicState, cfg: DetectorConfig):
    """outcome -> detected sub-ket -> {rest ket: amplitude}, at unit efficiency"""
    watched = cfg.by_mode()
    groups: Dict[DetectionOutcome, Dict[BasisKet, Dict[BasisKet, complex]]] = defaultdict(lambda: defaultdict(dict))
    for ket, amp in state.items():
        detected, rest = _split(ket, watched)
        counts: Dict[str, int] = defaultdict(int)
        for slot in detected:
            counts[watched[slot.mode].id] += 1
        outcome = DetectionOutcome.of(counts, len(rest))
        # detected and rest live in disjoint modes, so the bosonic weights factor
        groups[outcome][detected][rest] = amp
    return groups


def register_patterns(outcome: DetectionOutcome, cfg: DetectorConfig) -> List[Tuple[DetectionOutcome, float]]:
    """Fold per-photon detector efficiency into one physical pattern"""
    patterns: List[Tuple[Dict[str, int], int, float]] = [({}, outcome.undetected, 1.0)]
    for detector_id, n in outcome.counts:
        eff = cfg.efficiency(detector_id)
        folded = []
        for counts, missed, prob in patterns:
            for k in range(n + 1):
                p = math.comb(n, k) * eff ** k * (1.0 - eff) ** (n - k)
                if p == 0.0:
                    continue
                folded.append(({**counts, detector_id: k}, missed + n - k, prob * p))
        patterns = folded
    return [(DetectionOutcome.of(counts, missed), prob) for counts, missed, prob in patterns]


def conditional_ensemble(state: PhotonicState, cfg: DetectorConfig) -> Tuple[HeraldedBranch, ...]:
    """Unit-efficiency outcomes of `state`, each with its conditional mixture.

    Distinct detected sub-kets are orthogonal, so each one contributes its own
    pure component to the mixture of the unwatched modes.
    """
    branches = []
    for outcome, by_detected in sorted(_physical_groups(state, cfg).items()):
        weighted = []
        for rest_amps in by_detected.values():
            weight = float(sum(abs(a) ** 2 for a in rest_amps.values()))
            if weight == 0.0:
                continue
            rest = normalize(PhotonicState(rest_amps))
            weighted.append((weight, rest))
        total = sum(w for w, _ in weighted)
        if total == 0.0:
            continue
        branches.append(HeraldedBranch(outcome, total, tuple((w / total, s) for w, s in weighted)))
    for branch in branches:
        logger.debug(f"Branch {branch.outcome}: p={branch.probability:.6f}, {len(branch.components)} component(s)")
    return tuple(branches)


def fold_ensemble(branches: Iterable[HeraldedBranch], cfg: DetectorConfig) -> OutcomeDistribution:
    weights: Dict[DetectionOutcome, float] = defaultdict(float)
    for branch in branches:
        for registered, p in register_patterns(branch.outcome, cfg):
            weights[registered] += branch.probability * p
    return OutcomeDistribution.from_weights(weights)


def outcome_distribution(state: PhotonicState, cfg: DetectorConfig) -> OutcomeDistribution:
    """Registered-outcome probabilities of a normalized state"""
    return fold_ensemble(conditional_ensemble(state, cfg), cfg)


def project_outcome(state: PhotonicState, outcome: DetectionOutcome,
                    cfg: DetectorConfig) -> Tuple[PhotonicState, float]:
    """Normalized state of the unwatched modes given a registered outcome, and its probability"""
    probability = 0.0
    components: List[Tuple[float, PhotonicState]] = []
    for branch in conditional_ensemble(state, cfg):
        for registered, p in register_patterns(branch.outcome, cfg):
            if registered != outcome:
                continue
            probability += branch.probability * p
            components.extend((branch.probability * p * w, s) for w, s in branch.components)

    if probability <= 0.0:
        raise DetectionError(f"Outcome {outcome} has zero probability")
    reference = components[0][1]
    for _, other in components[1:]:
        if other.photon_number != reference.photon_number or fidelity(reference, other) < 1.0 - PURITY_TOLERANCE:
            raise DetectionError(f"Outcome {outcome} leaves a mixed state; use conditional_ensemble")
    return reference, probability


class AcceptPolicy(str, Enum):
    PASSIVE = "passive"
    OR_GATE = "or_gate"


def accept(outcome: DetectionOutcome, policy: AcceptPolicy) -> bool:
    a, b = outcome.count(D2A), outcome.count(D2B)
    if policy == AcceptPolicy.PASSIVE:
        return a == 1 and b == 0
    return (a, b) in ((1, 0), (0, 1))


def sample_outcomes(dist: OutcomeDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Indices into dist.outcomes drawn with their probabilities"""
    cumulative = np.cumsum(dist.probabilities)
    draws = rng.random(size) * cumulative[-1]
    return np.minimum(np.searchsorted(cumulative, draws, side="right"), len(cumulative) - 1)


def sample_outcome(dist: OutcomeDistribution, rng: np.random.Generator) -> DetectionOutcome:
    return dist.outcomes[int(sample_outcomes(dist, rng, 1)[0])]


def outcome_frequencies(dist: OutcomeDistribution, indices: Sequence[int]) -> Dict[DetectionOutcome, float]:
    counts = np.bincount(np.asarray(indices), minlength=len(dist.entries))
    return {o: c / len(indices) for o, c in zip(dist.outcomes, counts)}
