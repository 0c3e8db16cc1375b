# -*- coding: utf-8 -*-
"""
Tests for detection distributions, projection and post-selection
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from detection import (D1, D2A, D2B, AcceptPolicy, DetectionOutcome, DetectorConfig, OutcomeDistribution, accept,
                       conditional_ensemble, outcome_distribution, outcome_frequencies, project_outcome,
                       register_patterns, sample_outcome, sample_outcomes)
from elements import PASS_MODE, analysis_circuit, parity_check_layout, run_circuit
from errors import DetectionError
from fockstate import JonesVector, fidelity, global_phase, single_photon, tensor

HERALD = DetectorConfig.of((D2A, "2a"), (D2B, "2b"))
VIA_A = DetectionOutcome.of({D2A: 1}, 1)
VIA_B = DetectionOutcome.of({D2B: 1}, 1)


def heralded_state(jones):
    layout = parity_check_layout()
    return run_circuit(tensor(single_photon("1", jones), single_photon("2", JonesVector(1, 0))), layout.herald)


def random_jones(rng):
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    z /= np.linalg.norm(z)
    return JonesVector(z[0], z[1])


def test_parity_outcome_distribution():
    dist = outcome_distribution(heralded_state(JonesVector.linear(30)), HERALD)
    assert dist.probability(VIA_A) == pytest.approx(0.25, abs=1e-12)
    assert dist.probability(VIA_B) == pytest.approx(0.25, abs=1e-12)
    bunched = dist.where(lambda o: o not in (VIA_A, VIA_B))
    assert bunched == pytest.approx(0.5, abs=1e-12)


def test_single_photon_detection_and_efficiency():
    photon = single_photon("1", JonesVector(1, 0))
    dist = outcome_distribution(photon, DetectorConfig.of((D1, "1")))
    assert dist.probability(DetectionOutcome.of({D1: 1})) == pytest.approx(1.0)
    dist = outcome_distribution(photon, DetectorConfig.of((D1, "1"), efficiencies={D1: 0.5}))
    assert dist.probability(DetectionOutcome.of({D1: 1})) == pytest.approx(0.5)
    assert dist.probability(DetectionOutcome.of({}, 1)) == pytest.approx(0.5)


def test_register_patterns_binomial():
    cfg = DetectorConfig.of((D2A, "2a"), efficiencies={D2A: 0.5})
    patterns = dict(register_patterns(DetectionOutcome.of({D2A: 2}), cfg))
    assert patterns[DetectionOutcome.of({D2A: 2})] == pytest.approx(0.25)
    assert patterns[DetectionOutcome.of({D2A: 1}, 1)] == pytest.approx(0.5)
    assert patterns[DetectionOutcome.of({}, 2)] == pytest.approx(0.25)


def test_project_outcome_d2a_branch():
    state, p = project_outcome(heralded_state(JonesVector.linear(30)), VIA_A, HERALD)
    assert p == pytest.approx(0.25, abs=1e-12)
    assert fidelity(state, single_photon("1", JonesVector.linear(30))) == pytest.approx(1.0, abs=1e-12)


def test_project_outcome_d2b_branch():
    state, p = project_outcome(heralded_state(JonesVector.linear(30)), VIA_B, HERALD)
    assert p == pytest.approx(0.25, abs=1e-12)
    flipped = single_photon("1", JonesVector(-math.sqrt(3) / 2, 0.5))
    assert fidelity(state, flipped) == pytest.approx(1.0, abs=1e-12)
    # alpha H - beta V exactly, i.e. -1 against the flipped form above
    assert global_phase(flipped, state) == pytest.approx(-1.0, abs=1e-12)


def test_project_outcome_zero_probability():
    with pytest.raises(DetectionError):
        project_outcome(heralded_state(JonesVector.linear(30)), DetectionOutcome.of({D2A: 1, D2B: 1}), HERALD)


def test_project_outcome_probabilities_sum_to_one():
    state = heralded_state(JonesVector.linear(30))
    dist = outcome_distribution(state, HERALD)
    total = sum(project_outcome(state, outcome, HERALD)[1] for outcome in dist.outcomes)
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("theta", [0, 30, 75, 120, 150])
def test_conditional_states_reproduce_joint_probability(theta):
    state = heralded_state(JonesVector.linear(30))
    joint_cfg = DetectorConfig.of((D2A, "2a"), (D2B, "2b"), (D1, PASS_MODE))
    joint = outcome_distribution(run_circuit(state, analysis_circuit(theta)), joint_cfg)
    output_cfg = DetectorConfig.of((D1, PASS_MODE))
    for herald, detector in ((VIA_A, D2A), (VIA_B, D2B)):
        conditional, p = project_outcome(state, herald, HERALD)
        analyzed = run_circuit(conditional, analysis_circuit(theta))
        passed = outcome_distribution(analyzed, output_cfg).probability(DetectionOutcome.of({D1: 1}))
        direct = joint.probability(DetectionOutcome.of({detector: 1, D1: 1}))
        assert p * passed == pytest.approx(direct, abs=1e-12)


def test_heralds_equally_likely_for_any_input():
    rng = np.random.default_rng(17)
    for _ in range(50):
        dist = outcome_distribution(heralded_state(random_jones(rng)), HERALD)
        assert dist.probability(VIA_A) == pytest.approx(0.25, abs=1e-12)
        assert dist.probability(VIA_B) == pytest.approx(0.25, abs=1e-12)


def test_conditional_ensemble_components_are_pure_for_heralds():
    branches = {b.outcome: b for b in conditional_ensemble(heralded_state(JonesVector.linear(30)), HERALD)}
    assert len(branches[VIA_A].components) == 1
    assert len(branches[VIA_B].components) == 1


@pytest.mark.parametrize("outcome, passive, or_gate", [
    (DetectionOutcome.of({D2A: 1}), True, True),
    (DetectionOutcome.of({D2B: 1}), False, True),
    (DetectionOutcome.of({}), False, False),
    (DetectionOutcome.of({D2A: 2}), False, False),
    (DetectionOutcome.of({D2A: 1, D2B: 1}), False, False),
])
def test_accept_policies(outcome, passive, or_gate):
    assert accept(outcome, AcceptPolicy.PASSIVE) is passive
    assert accept(outcome, AcceptPolicy.OR_GATE) is or_gate


def test_sample_certain_outcome():
    dist = OutcomeDistribution(((VIA_A, 1.0),))
    rng = np.random.default_rng(0)
    assert all(sample_outcome(dist, rng) == VIA_A for _ in range(10))


def test_sampling_is_deterministic():
    dist = outcome_distribution(heralded_state(JonesVector.linear(30)), HERALD)
    first = sample_outcomes(dist, np.random.default_rng(42), 1000)
    second = sample_outcomes(dist, np.random.default_rng(42), 1000)
    assert np.array_equal(first, second)


def test_sampled_frequencies_within_three_sigma():
    dist = outcome_distribution(heralded_state(JonesVector.linear(30)), HERALD)
    n = 100000
    draws = sample_outcomes(dist, np.random.default_rng(123), n)
    frequencies = outcome_frequencies(dist, draws)
    for outcome, p in dist.entries:
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(frequencies[outcome] - p) <= 3 * sigma + 1e-12, outcome


def test_duplicate_detector_ids_rejected():
    with pytest.raises(ValidationError):
        DetectorConfig.of((D1, "1"), (D1, "2"))


def test_distribution_must_sum_to_one():
    with pytest.raises(DetectionError):
        OutcomeDistribution(((VIA_A, 0.5),))


def test_outcome_photon_bookkeeping():
    outcome = DetectionOutcome.of({D2A: 1, D2B: 0}, 1)
    assert outcome.counts == ((D2A, 1),)
    assert outcome.photon_number == 2
    with pytest.raises(DetectionError):
        DetectionOutcome.of({D2A: -1})
