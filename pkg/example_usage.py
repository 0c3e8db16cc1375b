#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Example usage of the Feed-forward Parity Check Simulator
Demonstrates programmatic use of scenarios, sweeps and calibration
"""

import os
import sys

# Add the current directory to Python path to import our modules
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import config
from harness import ParityCheckExperiment, calibrate, emit_csv, run_montecarlo, sweep_analyzer, sweep_delay
from scenario import ControlPolicy, load_scenario

SCENARIOS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")


def example_policies():
    """Compare passive, uncorrected and feed-forward operation at one analyzer setting"""
    print("=== Control Policies ===")

    s = load_scenario(os.path.join(SCENARIOS, "feedforward.ini"))
    experiment = ParityCheckExperiment(s)
    for policy in ControlPolicy:
        p = experiment.channel_probabilities(policy=policy)
        print(f"  {policy.value:24s} D2a {p.d2a:.4f}  D2b {p.d2b:.4f}  "
              f"success {experiment.success_probability(policy):.4f}")
    return True


def example_analyzer_sweep():
    """Feed-forward analyzer curve, exported to CSV"""
    print("\n=== Analyzer Sweep ===")

    s = load_scenario(os.path.join(SCENARIOS, "calibrated_440.ini"))
    result = sweep_analyzer(s)
    print(f"  Peak {result.summary['peak_rate']:.1f}/min at {result.summary['peak_setting']:g} deg")
    print(f"  Visibility {result.summary['visibility']:.3f}")
    out = emit_csv(result, os.path.join(config.DEFAULT_OUTPUT_DIR, "example_analyzer.csv"))
    print(f"  Results saved to: {out}")
    return True


def example_delay_scan():
    """Locate the voltage plateau of the Pockels driver"""
    print("\n=== Delay Scan ===")

    result = sweep_delay(load_scenario(os.path.join(SCENARIOS, "delay_scan.ini")))
    summary = result.summary
    print(f"  Expected center {summary['expected_center']:.1f} ns")
    if 'plateau_center' in summary:
        print(f"  Plateau center {summary['plateau_center']:.1f} ns, FWHM {summary['plateau_fwhm']:.1f} ns")
    return True


def example_montecarlo():
    """Sampled counts next to the exact rate"""
    print("\n=== Monte Carlo ===")

    s = load_scenario(os.path.join(SCENARIOS, "passive.ini"))
    record = run_montecarlo(s, shots=50000, seed=2024)
    exact = ParityCheckExperiment(s).channel_probabilities().d2a
    print(f"  {record.accepted_counts}/{record.shots} accepted coincidences (exact {exact * record.shots:.0f})")
    return True


def example_calibration():
    """Fit efficiencies so the passive rate matches a measured 131 per minute"""
    print("\n=== Calibration ===")

    s = load_scenario(os.path.join(SCENARIOS, "calibrated_440.ini"))
    _, report = calibrate(s, passive_average_rate=131.0)
    print(f"  Anchor efficiency {report['anchor_efficiency']:.4f}")
    print(f"  Passive {report['passive_rate']:.1f}/min, OR gate {report['or_gate_rate']:.1f}/min "
          f"(ratio {report['ratio']:.2f})")
    return True


def main():
    """Run all examples"""
    print("Feed-forward Parity Check Simulator - Usage Examples")
    print("=" * 50)

    examples = [
        ("Control Policies", example_policies),
        ("Analyzer Sweep", example_analyzer_sweep),
        ("Delay Scan", example_delay_scan),
        ("Monte Carlo", example_montecarlo),
        ("Calibration", example_calibration),
    ]

    for name, example_func in examples:
        print(f"\nRunning: {name}")
        try:
            if example_func():
                print(f"✓ {name} completed successfully")
            else:
                print(f"✗ {name} failed")
        except Exception as e:
            print(f"✗ {name} failed with error: {e}")

    print("\n" + "=" * 50)
    print("Examples completed!")
    print("\nTo run the simulator directly:")
    print("python parity_check_simulator.py run --scenario scenarios/passive.ini")


if __name__ == "__main__":
    main()
