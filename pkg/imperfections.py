# -*- coding: utf-8 -*-
"""
Non-ideal physics as probability-level mixtures: partial photon
distinguishability, per-channel efficiency and the rate anchor
"""

import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field
from scipy.constants import c as SPEED_OF_LIGHT

from detection import (D2A, D2B, DetectionOutcome, DetectorConfig, HeraldedBranch, OutcomeDistribution,
                       conditional_ensemble, fold_ensemble)
from elements import ANCILLA_MODE, D2A_MODE, D2B_MODE, INPUT_MODE, PARITY_CHECK_MODES, \
    Circuit, herald_elements, run_circuit
from errors import AnalysisError, DetectionError
from fockstate import BasisKet, JonesVector, PhotonicState, make_ket, normalize, single_photon, tensor, vacuum

logger = logging.getLogger(__name__)

# Gaussian time-bandwidth product (FWHM)
TIME_BANDWIDTH_PRODUCT = 0.441

FILTER_CENTER_NM = 702.2
FILTER_BANDWIDTH_NM = 10.0


def coherence_time_from_filter(center_nm: float = FILTER_CENTER_NM,
                               bandwidth_nm: float = FILTER_BANDWIDTH_NM) -> float:
    """Coherence time in ns of photons behind a Gaussian interference filter"""
    if center_nm <= 0.0 or bandwidth_nm <= 0.0:
        raise AnalysisError("Filter center and bandwidth must be positive")
    center, bandwidth = center_nm * 1e-9, bandwidth_nm * 1e-9
    return TIME_BANDWIDTH_PRODUCT * center ** 2 / (SPEED_OF_LIGHT * bandwidth) * 1e9


def overlap_from_delay(relative_delay_ns: float, coherence_time_ns: float) -> float:
    if coherence_time_ns <= 0.0:
        raise AnalysisError(f"Coherence time must be positive, got {coherence_time_ns}")
    return math.exp(-relative_delay_ns ** 2 / (2.0 * coherence_time_ns ** 2))


class OverlapModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    overlap_v: float = Field(1.0, ge=0.0, le=1.0, description="Overlap of the two photons at zero delay")
    coherence_time_ns: float = Field(default_factory=coherence_time_from_filter, gt=0.0)
    relative_delay_ns: Optional[float] = Field(None, description="Path-length mismatch between the photons")

    @property
    def effective_v(self) -> float:
        if self.relative_delay_ns is None:
            return self.overlap_v
        return self.overlap_v * overlap_from_delay(self.relative_delay_ns, self.coherence_time_ns)


class ChannelCalibration(BaseModel):
    """Detector efficiencies and the coincidence rate everything is scaled to"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    efficiencies: Dict[str, float] = Field(default_factory=dict)
    pair_rate_per_min: float = Field(440.0, gt=0.0)
    anchor_efficiency: float = Field(1.0, gt=0.0, le=1.0,
                                     description="End-to-end efficiency of the channel that measured pair_rate_per_min")

    def efficiency(self, detector_id: str) -> float:
        value = self.efficiencies.get(detector_id, 1.0)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"Efficiency of {detector_id} must lie in [0, 1], got {value}")
        return value

    def rate(self, probability: float) -> float:
        """Coincidences per minute for a per-pair probability"""
        return self.pair_rate_per_min / self.anchor_efficiency * probability


def _photon_routes(photon: PhotonicState, cfg: DetectorConfig) -> List[Tuple[Optional[str], float, PhotonicState]]:
    """Where one tagged photon ends up: (detector id or None, probability, undetected state)"""
    watched = cfg.by_mode()
    hits: Dict[str, float] = defaultdict(float)
    missed: Dict[BasisKet, complex] = {}
    for ket, amp in photon.items():
        (slot,) = ket
        if slot.mode in watched:
            hits[watched[slot.mode].id] += abs(amp) ** 2
        else:
            missed[ket] = amp
    routes = [(detector_id, p, vacuum()) for detector_id, p in sorted(hits.items()) if p > 0.0]
    p_missed = sum(abs(a) ** 2 for a in missed.values())
    if p_missed > 0.0:
        routes.append((None, p_missed, normalize(PhotonicState(missed))))
    return routes


def _classical_pair(a: PhotonicState, b: PhotonicState) -> List[Tuple[float, PhotonicState]]:
    """Two distinguishable undetected photons as a mixture of basis kets"""
    components = []
    for ket_a, amp_a in a.items():
        for ket_b, amp_b in b.items():
            weight = abs(amp_a) ** 2 * abs(amp_b) ** 2
            if weight > 0.0:
                components.append((weight, PhotonicState({make_ket(ket_a + ket_b): 1 + 0j})))
    return components


def distinguishable_ensemble(circuit: Circuit, photons: Sequence[PhotonicState],
                             cfg: DetectorConfig) -> Tuple[HeraldedBranch, ...]:
    """Outcome ensemble of fully distinguishable photons.

    Each photon is propagated on its own and the joint statistics are formed
    classically, without cross terms between the photons' histories.
    """
    if not 1 <= len(photons) <= 2:
        raise DetectionError(f"Distinguishable engine handles one or two photons, got {len(photons)}")
    routes = [_photon_routes(run_circuit(photon, circuit), cfg) for photon in photons]

    probabilities: Dict[DetectionOutcome, float] = defaultdict(float)
    components: Dict[DetectionOutcome, List[Tuple[float, PhotonicState]]] = defaultdict(list)
    joint = [[r] for r in routes[0]]
    for more in routes[1:]:
        joint = [path + [r] for path in joint for r in more]
    for path in joint:
        counts: Dict[str, int] = defaultdict(int)
        p = 1.0
        left = []
        for detector_id, p_route, state in path:
            p *= p_route
            if detector_id is None:
                left.append(state)
            else:
                counts[detector_id] += 1
        outcome = DetectionOutcome.of(counts, len(left))
        probabilities[outcome] += p
        if not left:
            components[outcome].append((p, vacuum()))
        elif len(left) == 1:
            components[outcome].append((p, left[0]))
        else:
            components[outcome].extend((p * w, s) for w, s in _classical_pair(*left))

    branches = []
    for outcome in sorted(probabilities):
        total = probabilities[outcome]
        branches.append(HeraldedBranch(outcome, total, tuple((w / total, s) for w, s in components[outcome])))
    return tuple(branches)


def distinguishable_distribution(circuit: Circuit, photons: Sequence[PhotonicState],
                                 cfg: DetectorConfig) -> OutcomeDistribution:
    return fold_ensemble(distinguishable_ensemble(circuit, photons, cfg), cfg)


def _check_compatible(coherent_numbers, distinguishable_numbers):
    if coherent_numbers != distinguishable_numbers:
        raise DetectionError(f"Cannot blend outcome spaces with photon numbers "
                             f"{sorted(coherent_numbers)} and {sorted(distinguishable_numbers)}")


def _blend_distributions(coherent: OutcomeDistribution, distinguishable: OutcomeDistribution,
                         v: float) -> OutcomeDistribution:
    _check_compatible({o.photon_number for o in coherent.outcomes},
                      {o.photon_number for o in distinguishable.outcomes})
    weights: Dict[DetectionOutcome, float] = defaultdict(float)
    for outcome, p in coherent.entries:
        weights[outcome] += v * p
    for outcome, p in distinguishable.entries:
        weights[outcome] += (1.0 - v) * p
    return OutcomeDistribution.from_weights(weights)


def _blend_ensembles(coherent: Sequence[HeraldedBranch], distinguishable: Sequence[HeraldedBranch],
                     v: float) -> Tuple[HeraldedBranch, ...]:
    _check_compatible({b.outcome.photon_number for b in coherent},
                      {b.outcome.photon_number for b in distinguishable})
    probabilities: Dict[DetectionOutcome, float] = defaultdict(float)
    components: Dict[DetectionOutcome, List[Tuple[float, PhotonicState]]] = defaultdict(list)
    for scale, branches in ((v, coherent), (1.0 - v, distinguishable)):
        for branch in branches:
            p = scale * branch.probability
            if p == 0.0:
                continue
            probabilities[branch.outcome] += p
            components[branch.outcome].extend((p * w, s) for w, s in branch.components)
    return tuple(
        HeraldedBranch(o, probabilities[o], tuple((w / probabilities[o], s) for w, s in components[o]))
        for o in sorted(probabilities)
    )


Blendable = Union[OutcomeDistribution, Sequence[HeraldedBranch]]


def blend(coherent: Blendable, distinguishable: Blendable, v: float) -> Blendable:
    """v * coherent + (1 - v) * distinguishable, outcome by outcome.

    Works on plain distributions and on ensembles carrying conditional states;
    the endpoints v=1 and v=0 return the corresponding input untouched.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"Overlap v must lie in [0, 1], got {v}")
    both_distributions = isinstance(coherent, OutcomeDistribution) and isinstance(distinguishable, OutcomeDistribution)
    if not both_distributions and (isinstance(coherent, OutcomeDistribution)
                                   or isinstance(distinguishable, OutcomeDistribution)):
        raise DetectionError("Cannot blend a distribution with an ensemble")
    if v == 1.0:
        return coherent
    if v == 0.0:
        return distinguishable
    if both_distributions:
        return _blend_distributions(coherent, distinguishable, v)
    return _blend_ensembles(coherent, distinguishable, v)


def curve_visibility(curve: Sequence[Tuple[float, float]]) -> float:
    """(max - min) / (max + min) of a rate curve"""
    if len(curve) < 2:
        raise AnalysisError("Visibility needs at least two points")
    rates = [rate for _, rate in curve]
    top, bottom = max(rates), min(rates)
    if top + bottom <= 0.0:
        raise AnalysisError("Degenerate curve: max + min is zero")
    return (top - bottom) / (top + bottom)


def dip_circuit() -> Circuit:
    """Herald stage without ancilla preparation: both photons meet in the detector package"""
    return Circuit(herald_elements(ancilla_prep=False), PARITY_CHECK_MODES)


def dip_probability(v: float) -> float:
    """D2a & D2b coincidence probability for a V input photon and an H ancilla photon"""
    circuit = dip_circuit()
    cfg = DetectorConfig.of((D2A, D2A_MODE), (D2B, D2B_MODE))
    photons = [single_photon(INPUT_MODE, JonesVector(0, 1)), single_photon(ANCILLA_MODE, JonesVector(1, 0))]
    coherent = conditional_ensemble(run_circuit(tensor(*photons), circuit), cfg)
    distinguishable = distinguishable_ensemble(circuit, photons, cfg)
    mixed = blend(coherent, distinguishable, v)
    coincidence = DetectionOutcome.of({D2A: 1, D2B: 1})
    return float(sum(b.probability for b in mixed if b.outcome == coincidence))


def dip_visibility(v: float) -> float:
    reference = dip_probability(0.0)
    if reference <= 0.0:
        raise AnalysisError("No coincidences for distinguishable photons; dip undefined")
    return 1.0 - dip_probability(v) / reference
