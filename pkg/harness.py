# -*- coding: utf-8 -*-
"""
Experiment drivers for the feed-forward parity check
Analytic and Monte Carlo engines, analyzer/delay/overlap sweeps, rate
calibration and CSV export.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

import config
from detection import (D1, D2A, D2B, DetectorConfig, HeraldedBranch, accept, conditional_ensemble,
                       outcome_distribution, register_patterns)
from elements import (ANCILLA_MODE, D2A_MODE, D2B_MODE, INPUT_MODE, LOSS_MODE, PASS_MODE, analysis_circuit,
                      parity_check_layout, run_circuit)
from errors import AnalysisError
from feedforward import (Correction, applied_probability, apply_feedforward, correction_for, plateau_stats,
                         timing_applied_probability, total_system_delay, voltage_window)
from fockstate import JonesVector, fidelity, single_photon, tensor
from imperfections import blend, curve_visibility, dip_visibility, distinguishable_ensemble
from scenario import Channel, ControlPolicy, OverlapAxis, Scenario, SweepKind

logger = logging.getLogger(__name__)

HERALD_DETECTORS = (D2A, D2B)


class ChannelProbabilities(NamedTuple):
    """Per-pair coincidence probability heralded through each ancilla detector"""
    d2a: float
    d2b: float

    @property
    def total(self) -> float:
        return self.d2a + self.d2b

    def selected(self, channel: Channel) -> float:
        if channel == Channel.D2A:
            return self.d2a
        if channel == Channel.D2B:
            return self.d2b
        return self.total


class CountsRecord(BaseModel):
    """One point of a run or sweep"""
    sweep_kind: str = Field(..., description="analyzer, delay, overlap or run")
    setting: float = Field(..., description="Analyzer angle, extra delay or overlap value")
    rate_per_min: float = Field(..., ge=0.0)
    rate_d2a: float = Field(..., ge=0.0)
    rate_d2b: float = Field(..., ge=0.0)
    probability: float = Field(..., ge=0.0, le=1.0, description="Probability behind rate_per_min")
    accepted_counts: Optional[int] = Field(None, ge=0)
    counts_d2a: Optional[int] = Field(None, ge=0)
    counts_d2b: Optional[int] = Field(None, ge=0)
    shots: int = Field(0, ge=0)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def counts_fit_in_shots(self):
        if self.accepted_counts is not None and self.accepted_counts > self.shots:
            raise ValueError(f"{self.accepted_counts} accepted counts exceed {self.shots} shots")
        return self


@dataclass
class SweepResult:
    kind: str
    records: List[CountsRecord]
    summary: Dict[str, float] = field(default_factory=dict)
    details: List[Dict[str, float]] = field(default_factory=list)

    def curve(self) -> List[Tuple[float, float]]:
        return [(r.setting, r.rate_per_min) for r in self.records]


@dataclass(frozen=True)
class _ShotTables:
    """Per-branch and per-component probabilities laid out for vectorized sampling"""
    branch_cum: np.ndarray
    photons_at: np.ndarray      # (branches, herald detectors) physical photon counts
    efficiencies: np.ndarray    # (herald detectors,)
    component_cum: np.ndarray   # (branches, max components), padded with 1
    component_count: np.ndarray
    survive: np.ndarray         # (branches, max components)
    pass_off: np.ndarray        # P(D1 | survived), voltage off
    pass_on: np.ndarray         # P(D1 | survived), voltage on


class ParityCheckExperiment:
    """The parity check of one scenario, with the heralded ensemble precomputed"""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        circuit = scenario.circuit
        self.layout = parity_check_layout(
            ancilla_prep=scenario.source.ancilla_prep,
            coupling_eta=circuit.coupling_eta,
            delay_ns=circuit.delay_ns,
            residual_rotation_deg=circuit.residual_rotation_deg,
            analyzer_theta_deg=circuit.analyzer_theta_deg,
        )
        self.calibration = scenario.calibration()
        self.herald_detectors = DetectorConfig.of((D2A, D2A_MODE), (D2B, D2B_MODE),
                                                  efficiencies=self.calibration.efficiencies)
        self.output_detectors = DetectorConfig.of((D1, PASS_MODE), efficiencies=self.calibration.efficiencies)
        self.layout.herald.check_detectable(d.mode for d in self.herald_detectors.detectors)

        self.jones = scenario.source.jones.validate()
        self.input_state = single_photon(INPUT_MODE, self.jones)
        photons = [self.input_state, single_photon(ANCILLA_MODE, JonesVector(1, 0))]
        coherent = conditional_ensemble(run_circuit(tensor(*photons), self.layout.herald), self.herald_detectors)
        self.overlap_v = scenario.overlap().effective_v
        if self.overlap_v < 1.0:
            distinguishable = distinguishable_ensemble(self.layout.herald, photons, self.herald_detectors)
            self.branches: Tuple[HeraldedBranch, ...] = tuple(blend(coherent, distinguishable, self.overlap_v))
        else:
            self.branches = coherent

        self.budget = scenario.control.budget
        self.timing = scenario.timing()
        self.p_applied = timing_applied_probability(self.budget, self.timing)
        self._detect_cache: Dict[Tuple[int, int, bool, float], Tuple[float, float]] = {}
        logger.debug(f"Experiment ready: {len(self.branches)} branches, v={self.overlap_v:.4f}, "
                     f"p_applied={self.p_applied:.6f}")

    def _accepted_routes(self, policy: ControlPolicy):
        """(branch index, registered outcome, registration probability) for accepted outcomes"""
        for b, branch in enumerate(self.branches):
            for registered, p in register_patterns(branch.outcome, self.herald_detectors):
                if accept(registered, policy.accept_policy):
                    yield b, registered, p

    def _survive_and_detect(self, b: int, c: int, on: bool, theta: float) -> Tuple[float, float]:
        """(P survive the fiber, P D1 registers) for one component of one branch"""
        key = (b, c, on, theta)
        if key not in self._detect_cache:
            state = self.branches[b].components[c][1]
            stored = run_circuit(state, self.layout.delay_line)
            survive = sum(abs(a) ** 2 for ket, a in stored.items() if all(s.mode != LOSS_MODE for s in ket))
            corrected = apply_feedforward(stored, Correction.Z, on, INPUT_MODE)
            analyzed = run_circuit(corrected, analysis_circuit(theta))
            detect = outcome_distribution(analyzed, self.output_detectors).where(lambda o: o.count(D1) >= 1)
            self._detect_cache[key] = (float(survive), detect)
        return self._detect_cache[key]

    def _on_probability(self, registered, policy: ControlPolicy, p_applied: float) -> float:
        if policy.corrects and correction_for(registered) == Correction.Z:
            return p_applied
        return 0.0

    def channel_probabilities(self, theta: Optional[float] = None, policy: Optional[ControlPolicy] = None,
                              p_applied: Optional[float] = None) -> ChannelProbabilities:
        """Exact per-pair coincidence probabilities (herald accepted and D1 fired)"""
        theta = self.scenario.circuit.analyzer_theta_deg if theta is None else theta
        policy = self.scenario.control.policy if policy is None else policy
        q = self.p_applied if p_applied is None else p_applied

        totals = {D2A: 0.0, D2B: 0.0}
        for b, registered, p_register in self._accepted_routes(policy):
            on = self._on_probability(registered, policy, q)
            channel = D2A if registered.count(D2A) == 1 else D2B
            detected = 0.0
            for c, (weight, _) in enumerate(self.branches[b].components):
                off_part = self._survive_and_detect(b, c, False, theta)[1]
                on_part = self._survive_and_detect(b, c, True, theta)[1] if on else 0.0
                detected += weight * (on * on_part + (1.0 - on) * off_part)
            totals[channel] += self.branches[b].probability * p_register * detected
        return ChannelProbabilities(totals[D2A], totals[D2B])

    def acceptance_probability(self, policy: Optional[ControlPolicy] = None) -> float:
        """Probability that the herald pattern passes post-selection"""
        policy = self.scenario.control.policy if policy is None else policy
        return float(sum(self.branches[b].probability * p for b, _, p in self._accepted_routes(policy)))

    def success_probability(self, policy: Optional[ControlPolicy] = None,
                            p_applied: Optional[float] = None) -> float:
        """Accepted probability weighted by the fidelity of the output qubit with the input"""
        policy = self.scenario.control.policy if policy is None else policy
        q = self.p_applied if p_applied is None else p_applied
        total = 0.0
        for b, registered, p_register in self._accepted_routes(policy):
            on = self._on_probability(registered, policy, q)
            for weight, state in self.branches[b].components:
                if state.photon_number != 1:
                    continue
                corrected = apply_feedforward(state, Correction.Z, True, INPUT_MODE)
                f = on * fidelity(corrected, self.input_state) + (1.0 - on) * fidelity(state, self.input_state)
                total += self.branches[b].probability * p_register * weight * f
        return total

    def record(self, sweep_kind: str, setting: float, probabilities: ChannelProbabilities,
               **counts) -> CountsRecord:
        channel = self.scenario.control.channel
        selected = probabilities.selected(channel)
        return CountsRecord(
            sweep_kind=sweep_kind,
            setting=setting,
            rate_per_min=self.calibration.rate(selected),
            rate_d2a=self.calibration.rate(probabilities.d2a),
            rate_d2b=self.calibration.rate(probabilities.d2b),
            probability=min(1.0, max(0.0, selected)),
            **counts,
        )

    def _shot_tables(self, theta: float) -> _ShotTables:
        branches = self.branches
        width = max(len(b.components) for b in branches)
        photons_at = np.array([[b.outcome.count(d) for d in HERALD_DETECTORS] for b in branches])
        component_cum = np.ones((len(branches), width))
        survive = np.zeros((len(branches), width))
        pass_off = np.zeros((len(branches), width))
        pass_on = np.zeros((len(branches), width))
        for i, branch in enumerate(branches):
            weights = np.array([w for w, _ in branch.components])
            component_cum[i, :len(weights)] = np.cumsum(weights) / weights.sum()
            for c in range(len(weights)):
                s_off, d_off = self._survive_and_detect(i, c, False, theta)
                _, d_on = self._survive_and_detect(i, c, True, theta)
                survive[i, c] = s_off
                if s_off > 0.0:
                    pass_off[i, c] = min(1.0, d_off / s_off)
                    pass_on[i, c] = min(1.0, d_on / s_off)
        probabilities = np.array([b.probability for b in branches])
        return _ShotTables(
            branch_cum=np.cumsum(probabilities),
            photons_at=photons_at,
            efficiencies=np.array([self.calibration.efficiency(d) for d in HERALD_DETECTORS]),
            component_cum=component_cum,
            component_count=np.array([len(b.components) for b in branches]),
            survive=survive,
            pass_off=pass_off,
            pass_on=pass_on,
        )

    def _simulate_batch(self, tables: _ShotTables, policy: ControlPolicy, q: float,
                        rng: np.random.Generator, size: int) -> Tuple[int, int]:
        """Tally (D2a-heralded, D2b-heralded) coincidences; draw order is fixed"""
        b = np.searchsorted(tables.branch_cum, rng.random(size) * tables.branch_cum[-1], side="right")
        b = np.minimum(b, len(tables.branch_cum) - 1)
        k = np.stack([rng.binomial(tables.photons_at[b, j], tables.efficiencies[j])
                      for j in range(len(HERALD_DETECTORS))], axis=1)
        via_a = (k[:, 0] == 1) & (k[:, 1] == 0)
        via_b = (k[:, 0] == 0) & (k[:, 1] == 1)
        accepted = via_a if policy == ControlPolicy.PASSIVE else via_a | via_b

        c = (rng.random(size)[:, None] >= tables.component_cum[b]).sum(axis=1)
        c = np.minimum(c, tables.component_count[b] - 1)
        applied = rng.random(size) < q
        survived = rng.random(size) < tables.survive[b, c]
        on = via_b & applied & policy.corrects
        p_pass = np.where(on, tables.pass_on[b, c], tables.pass_off[b, c])
        passed = survived & (rng.random(size) < p_pass)

        hit = accepted & passed
        return int(np.count_nonzero(hit & via_a)), int(np.count_nonzero(hit & via_b))

    def montecarlo_counts(self, theta: float, shots: int, seed: int, stream: int = 0,
                          workers: int = 1, batch_size: Optional[int] = None,
                          p_applied: Optional[float] = None) -> Tuple[int, int]:
        """Sampled coincidence counts; identical for any worker count"""
        if shots < 1:
            raise ValueError(f"shots must be at least 1, got {shots}")
        batch_size = batch_size or config.MC_BATCH_SIZE
        policy = self.scenario.control.policy
        q = self.p_applied if p_applied is None else p_applied
        tables = self._shot_tables(theta)
        batches = [(i, min(batch_size, shots - i * batch_size)) for i in range(math.ceil(shots / batch_size))]

        def run(batch):
            index, size = batch
            rng = np.random.default_rng([seed, stream, index])
            return self._simulate_batch(tables, policy, q, rng, size)

        if workers > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                tallies = list(pool.map(run, batches))
        else:
            tallies = [run(batch) for batch in batches]
        return sum(t[0] for t in tallies), sum(t[1] for t in tallies)

    def sampled_record(self, sweep_kind: str, setting: float, theta: float, shots: int, seed: int,
                       stream: int = 0, workers: int = 1, batch_size: Optional[int] = None,
                       p_applied: Optional[float] = None) -> CountsRecord:
        counts_a, counts_b = self.montecarlo_counts(theta, shots, seed, stream, workers, batch_size, p_applied)
        sampled = ChannelProbabilities(counts_a / shots, counts_b / shots)
        channel = self.scenario.control.channel
        accepted = {Channel.D2A: counts_a, Channel.D2B: counts_b}.get(channel, counts_a + counts_b)
        return self.record(sweep_kind, setting, sampled, accepted_counts=accepted, counts_d2a=counts_a,
                           counts_d2b=counts_b, shots=shots, seed=seed)


def run_analytic(s: Scenario, theta: Optional[float] = None,
                 experiment: Optional[ParityCheckExperiment] = None) -> CountsRecord:
    experiment = experiment or ParityCheckExperiment(s)
    theta = s.circuit.analyzer_theta_deg if theta is None else theta
    return experiment.record("run", theta, experiment.channel_probabilities(theta))


def run_montecarlo(s: Scenario, theta: Optional[float] = None, shots: int = 100000,
                   seed: int = config.DEFAULT_SEED, stream: int = 0, workers: int = config.MC_WORKERS,
                   batch_size: Optional[int] = None,
                   experiment: Optional[ParityCheckExperiment] = None) -> CountsRecord:
    experiment = experiment or ParityCheckExperiment(s)
    theta = s.circuit.analyzer_theta_deg if theta is None else theta
    return experiment.sampled_record("run", theta, theta, shots, seed, stream, workers, batch_size)


def _point(experiment: ParityCheckExperiment, kind: SweepKind, setting: float, theta: float, index: int,
           shots: Optional[int], seed: int, workers: int, p_applied: Optional[float] = None) -> CountsRecord:
    if shots:
        return experiment.sampled_record(kind.value, setting, theta, shots, seed, stream=index,
                                         workers=workers, p_applied=p_applied)
    return experiment.record(kind.value, setting, experiment.channel_probabilities(theta, p_applied=p_applied))


def _progress(kind: SweepKind, index: int, total: int):
    if (index + 1) % config.PROGRESS_EVERY == 0 or index + 1 == total:
        logger.info(f"{kind.value} sweep: {index + 1}/{total} points")


def _safe_visibility(curve) -> Optional[float]:
    try:
        return curve_visibility(curve)
    except AnalysisError as e:
        logger.warning(f"Visibility unavailable: {e}")
        return None


def sweep_analyzer(s: Scenario, thetas: Optional[Sequence[float]] = None, shots: Optional[int] = None,
                   seed: int = config.DEFAULT_SEED, workers: int = config.MC_WORKERS) -> SweepResult:
    thetas = s.sweep.values() if thetas is None else tuple(thetas)
    experiment = ParityCheckExperiment(s)
    records = []
    for i, theta in enumerate(thetas):
        records.append(_point(experiment, SweepKind.ANALYZER, theta, theta, i, shots, seed, workers))
        _progress(SweepKind.ANALYZER, i, len(thetas))

    result = SweepResult(SweepKind.ANALYZER.value, records)
    if records:
        peak = max(records, key=lambda r: r.rate_per_min)
        result.summary['peak_setting'] = peak.setting
        result.summary['peak_rate'] = peak.rate_per_min
        visibility = _safe_visibility(result.curve())
        if visibility is not None:
            result.summary['visibility'] = visibility
    return result


def sweep_delay(s: Scenario, extra_delays: Optional[Sequence[float]] = None, shots: Optional[int] = None,
                seed: int = config.DEFAULT_SEED, workers: int = config.MC_WORKERS) -> SweepResult:
    extra_delays = s.sweep.values() if extra_delays is None else tuple(extra_delays)
    experiment = ParityCheckExperiment(s)
    theta = s.circuit.analyzer_theta_deg
    timing = experiment.timing
    records = []
    details = []
    for i, extra in enumerate(extra_delays):
        shifted = timing.model_copy(update={'extra_electronic_delay_ns': extra})
        window = voltage_window(experiment.budget, shifted)
        q = applied_probability(timing.fiber_delay_ns, window, timing.edge_sigma_ns)
        records.append(_point(experiment, SweepKind.DELAY, extra, theta, i, shots, seed, workers, p_applied=q))
        details.append({'setting': extra, 't_on': window.t_on, 't_off': window.t_off, 'applied_probability': q})
        _progress(SweepKind.DELAY, i, len(extra_delays))

    result = SweepResult(SweepKind.DELAY.value, records, details=details)
    result.summary['expected_center'] = (timing.fiber_delay_ns - total_system_delay(experiment.budget)
                                         - timing.hold_for(experiment.budget) / 2.0)
    try:
        stats = plateau_stats(result.curve())
        result.summary['plateau_center'] = stats['center']
        result.summary['plateau_fwhm'] = stats['fwhm']
        result.summary['peak_rate'] = stats['peak']
    except AnalysisError as e:
        logger.warning(f"Plateau not resolved: {e}")
    return result


def sweep_overlap(s: Scenario, values: Optional[Sequence[float]] = None, shots: Optional[int] = None,
                  seed: int = config.DEFAULT_SEED, workers: int = config.MC_WORKERS) -> SweepResult:
    values = s.sweep.values() if values is None else tuple(values)
    axis = s.sweep.axis
    theta = s.circuit.analyzer_theta_deg
    analyzer_grid = [float(t) for t in range(0, 181, 5)]
    records = []
    details = []
    for i, value in enumerate(values):
        if axis == OverlapAxis.V:
            point = s.updated("imperfections", overlap_v=value, relative_delay_ns=None)
        else:
            point = s.updated("imperfections", relative_delay_ns=value)
        experiment = ParityCheckExperiment(point)
        records.append(_point(experiment, SweepKind.OVERLAP, value, theta, i, shots, seed, workers))
        curve = [(t, experiment.channel_probabilities(t).selected(s.control.channel)) for t in analyzer_grid]
        details.append({
            'setting': value,
            'v': experiment.overlap_v,
            'visibility': _safe_visibility(curve),
            'dip_visibility': dip_visibility(experiment.overlap_v),
        })
        _progress(SweepKind.OVERLAP, i, len(values))

    result = SweepResult(SweepKind.OVERLAP.value, records, details=details)
    visibility = _safe_visibility(result.curve()) if len(records) >= 2 else None
    if visibility is not None:
        result.summary['visibility'] = visibility
    return result


SWEEPS = {
    SweepKind.ANALYZER: sweep_analyzer,
    SweepKind.DELAY: sweep_delay,
    SweepKind.OVERLAP: sweep_overlap,
}


def run_sweep(s: Scenario, shots: Optional[int] = None, seed: int = config.DEFAULT_SEED,
              workers: int = config.MC_WORKERS) -> SweepResult:
    """Run the sweep the scenario declares"""
    return SWEEPS[s.sweep.kind](s, shots=shots, seed=seed, workers=workers)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{config.CSV_DECIMALS}f}"
    return str(value)


def emit_csv(records, destination) -> Path:
    """Write records (or a SweepResult) in the fixed CSV schema"""
    if isinstance(records, SweepResult):
        records = records.records
    elif isinstance(records, CountsRecord):
        records = [records]
    destination = Path(destination)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with open(destination, 'w', newline='', encoding=config.CSV_ENCODING) as f:
        writer = csv.DictWriter(f, fieldnames=config.CSV_FIELDNAMES, lineterminator="\n", extrasaction='ignore')
        writer.writeheader()
        for record in records:
            row = record.model_dump()
            writer.writerow({name: _format_cell(row[name]) for name in config.CSV_FIELDNAMES})
    logger.info(f"Wrote {len(records)} rows to {destination}")
    return destination


def calibrate(s: Scenario, passive_average_rate: float = 131.0,
              d2a_share: float = 0.5) -> Tuple[Scenario, Dict[str, float]]:
    """Fit ancilla-channel efficiencies and the rate anchor to measured passive rates.

    Each channel's rate is taken with its correction landing perfectly; the
    OR-gate rate under the scenario's own timing is then a prediction. The
    output detector efficiency is kept as given.
    """
    if passive_average_rate <= 0.0:
        raise AnalysisError("Measured passive rate must be positive")
    if not 0.0 < d2a_share < 1.0:
        raise AnalysisError(f"d2a_share must lie strictly between 0 and 1, got {d2a_share}")

    ideal = ParityCheckExperiment(s.updated("imperfections", efficiency_d2a=1.0, efficiency_d2b=1.0,
                                            anchor_efficiency=1.0))
    p_a = ideal.channel_probabilities(policy=ControlPolicy.PASSIVE).d2a
    p_b = ideal.channel_probabilities(policy=ControlPolicy.OR_GATE, p_applied=1.0).d2b
    if p_a <= 0.0 or p_b <= 0.0:
        raise AnalysisError("Scenario gives no coincidences at the analyzer setting; cannot calibrate")

    pair_rate = s.source.pair_rate_per_min
    targets = np.array([2.0 * d2a_share, 2.0 * (1.0 - d2a_share)]) * passive_average_rate
    gains = targets / (pair_rate * np.array([p_a, p_b]))
    scale = float(gains.max())
    if scale <= 1.0:
        efficiencies, anchor = gains, 1.0
    else:
        efficiencies, anchor = gains / scale, 1.0 / scale

    calibrated = s.updated("imperfections", efficiency_d2a=float(efficiencies[0]),
                           efficiency_d2b=float(efficiencies[1]), anchor_efficiency=float(anchor))
    fitted = ParityCheckExperiment(calibrated)
    passive_rate = fitted.calibration.rate(fitted.channel_probabilities(policy=ControlPolicy.PASSIVE).d2a)
    or_rate = fitted.calibration.rate(fitted.channel_probabilities(policy=ControlPolicy.OR_GATE).total)
    extra = calibrated.control.extra_electronic_delay_ns
    report = {
        'efficiency_d1': calibrated.imperfections.efficiency_d1,
        'efficiency_d2a': float(efficiencies[0]),
        'efficiency_d2b': float(efficiencies[1]),
        'anchor_efficiency': float(anchor),
        'passive_rate': passive_rate,
        'or_gate_rate': or_rate,
        'ratio': or_rate / passive_rate,
        'p_applied': fitted.p_applied,
        'extra_electronic_delay_ns': extra,
    }
    logger.info(f"Calibrated: eff_d2a={report['efficiency_d2a']:.4f}, eff_d2b={report['efficiency_d2b']:.4f}, "
                f"anchor={anchor:.4f}; passive {passive_rate:.1f}/min, OR gate {or_rate:.1f}/min")
    logger.info(f"OR/passive ratio {report['ratio']:.3f} follows from the scenario timing: "
                f"extra_electronic_delay_ns={extra:+.1f}, p_applied={fitted.p_applied:.4f}")
    return calibrated, report
