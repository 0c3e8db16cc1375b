# -*- coding: utf-8 -*-
"""
Tests for distinguishability blends, visibility and calibration records
"""

import math

import numpy as np
import pytest

from detection import D2A, D2B, DetectionOutcome, DetectorConfig, conditional_ensemble, outcome_distribution
from elements import PARITY_CHECK_MODES, Circuit, analysis_circuit, element_map, herald_elements, run_circuit
from errors import AnalysisError, DetectionError
from fockstate import JonesVector, Pol, Slot, single_photon, tensor
from imperfections import (ChannelCalibration, OverlapModel, blend, coherence_time_from_filter, curve_visibility,
                           dip_probability, dip_visibility, distinguishable_distribution,
                           distinguishable_ensemble, overlap_from_delay)

HERALD = DetectorConfig.of((D2A, "2a"), (D2B, "2b"))
VIA_A = DetectionOutcome.of({D2A: 1}, 1)


def herald_circuit():
    return Circuit(herald_elements(), PARITY_CHECK_MODES)


def parity_photons(jones=JonesVector.linear(30)):
    return [single_photon("1", jones), single_photon("2", JonesVector(1, 0))]


def full_unitary(circuit):
    """Single-photon unitary of a whole circuit over every slot of its modes"""
    slots = [Slot(m, p) for m in sorted(circuit.modes) for p in Pol]
    index = {s: i for i, s in enumerate(slots)}
    total = np.eye(len(slots), dtype=complex)
    for e in circuit.elements:
        m = element_map(e)
        embedded = np.eye(len(slots), dtype=complex)
        positions = [index[s] for s in m.slots]
        embedded[np.ix_(positions, positions)] = m.matrix
        total = embedded @ total
    return slots, total


def tagged_path_oracle(jones):
    """P(exactly one photon at D2a, the other undetected) by enumerating both photons' paths"""
    slots, u = full_unitary(herald_circuit())
    h1, v1, h2 = (slots.index(Slot("1", Pol.H)), slots.index(Slot("1", Pol.V)), slots.index(Slot("2", Pol.H)))
    photon_1 = np.abs(u[:, h1] * jones.alpha + u[:, v1] * jones.beta) ** 2
    photon_2 = np.abs(u[:, h2]) ** 2
    total = 0.0
    for i, si in enumerate(slots):
        for j, sj in enumerate(slots):
            at_a = [s.mode == "2a" for s in (si, sj)]
            undetected = [s.mode not in ("2a", "2b") for s in (si, sj)]
            if sum(at_a) == 1 and sum(undetected) == 1:
                total += photon_1[i] * photon_2[j]
    return total


def pass_probability(state, theta):
    out = run_circuit(state, analysis_circuit(theta))
    return sum(abs(a) ** 2 for ket, a in out.items() if any(s.mode == "out" for s in ket))


@pytest.mark.parametrize("delay, expected", [(0.0, 1.0), (1e9, 0.0), (2.0, math.exp(-0.5))])
def test_overlap_from_delay(delay, expected):
    assert overlap_from_delay(delay, 2.0) == pytest.approx(expected, abs=1e-12)


def test_overlap_needs_positive_coherence_time():
    with pytest.raises(AnalysisError):
        overlap_from_delay(0.0, 0.0)


def test_coherence_time_of_ten_nm_filter():
    assert coherence_time_from_filter() == pytest.approx(7.25e-5, rel=1e-2)


def test_overlap_model_effective_v():
    model = OverlapModel(overlap_v=0.9, coherence_time_ns=1e-4, relative_delay_ns=1e-4)
    assert model.effective_v == pytest.approx(0.9 * math.exp(-0.5))
    assert OverlapModel(overlap_v=0.77).effective_v == 0.77


def test_single_photon_has_nothing_to_interfere():
    photon = single_photon("1", JonesVector.linear(30))
    circuit = herald_circuit()
    coherent = outcome_distribution(run_circuit(photon, circuit), HERALD)
    tagged = distinguishable_distribution(circuit, [photon], HERALD)
    assert set(coherent.outcomes) == set(tagged.outcomes)
    for outcome in coherent.outcomes:
        assert tagged.probability(outcome) == pytest.approx(coherent.probability(outcome), abs=1e-12)


@pytest.mark.parametrize("theta", [0.0, 30.0, 60.0, 90.0, 120.0, 150.0])
def test_distinguishable_curve_is_classical_mixture(theta):
    branches = {b.outcome: b for b in distinguishable_ensemble(herald_circuit(), parity_photons(), HERALD)}
    branch = branches[VIA_A]
    rate = branch.probability * sum(w * pass_probability(s, theta) for w, s in branch.components)
    t = math.radians(theta)
    assert rate == pytest.approx(0.25 * (0.75 * math.cos(t) ** 2 + 0.25 * math.sin(t) ** 2), abs=1e-12)


def test_distinguishable_acceptance_matches_tagged_path_oracle():
    rng = np.random.default_rng(31)
    for _ in range(20):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        z /= np.linalg.norm(z)
        jones = JonesVector(z[0], z[1])
        dist = distinguishable_distribution(herald_circuit(), parity_photons(jones), HERALD)
        assert dist.probability(VIA_A) == pytest.approx(tagged_path_oracle(jones), abs=1e-12)


def test_blend_endpoints():
    circuit = herald_circuit()
    coherent = outcome_distribution(run_circuit(tensor(*parity_photons()), circuit), HERALD)
    tagged = distinguishable_distribution(circuit, parity_photons(), HERALD)
    assert blend(coherent, tagged, 1.0) is coherent
    assert blend(coherent, tagged, 0.0) is tagged


@pytest.mark.parametrize("v", [0.0, 0.25, 0.5, 0.77, 1.0])
def test_blend_is_normalized_and_affine(v):
    circuit = herald_circuit()
    coherent = outcome_distribution(run_circuit(tensor(*parity_photons()), circuit), HERALD)
    tagged = distinguishable_distribution(circuit, parity_photons(), HERALD)
    mixed = blend(coherent, tagged, v)
    assert sum(mixed.probabilities) == pytest.approx(1.0, abs=1e-10)
    for outcome in mixed.outcomes:
        expected = v * coherent.probability(outcome) + (1 - v) * tagged.probability(outcome)
        assert mixed.probability(outcome) == pytest.approx(expected, abs=1e-12)


def test_blend_of_ensembles_keeps_conditional_states():
    circuit = herald_circuit()
    coherent = conditional_ensemble(run_circuit(tensor(*parity_photons()), circuit), HERALD)
    tagged = distinguishable_ensemble(circuit, parity_photons(), HERALD)
    mixed = {b.outcome: b for b in blend(coherent, tagged, 0.5)}
    assert mixed[VIA_A].probability == pytest.approx(0.25, abs=1e-12)
    assert sum(w for w, _ in mixed[VIA_A].components) == pytest.approx(1.0)


def test_blend_rejects_mismatched_outcome_spaces():
    circuit = herald_circuit()
    coherent = outcome_distribution(run_circuit(tensor(*parity_photons()), circuit), HERALD)
    single = distinguishable_distribution(circuit, parity_photons()[:1], HERALD)
    with pytest.raises(DetectionError):
        blend(coherent, single, 0.5)


def test_curve_visibility_examples():
    cos2 = [(t, math.cos(math.radians(t - 30)) ** 2) for t in range(0, 181, 5)]
    assert curve_visibility(cos2) == pytest.approx(1.0, abs=1e-12)
    assert curve_visibility([(0, 3.0), (1, 3.0)]) == 0.0
    with pytest.raises(AnalysisError):
        curve_visibility([(0, 0.0), (1, 0.0)])
    with pytest.raises(AnalysisError):
        curve_visibility([(0, 1.0)])


def test_dip_from_overlap():
    assert dip_probability(1.0) == pytest.approx(0.0, abs=1e-12)
    assert dip_probability(0.0) == pytest.approx(0.5, abs=1e-12)
    assert dip_visibility(0.77) == pytest.approx(0.77, abs=1e-12)


def test_channel_calibration_rate():
    cal = ChannelCalibration(pair_rate_per_min=440, anchor_efficiency=0.5)
    assert cal.rate(0.25) == pytest.approx(220.0)
    assert cal.efficiency("D1") == 1.0
