#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Feed-forward Parity Check Simulator
Command-line driver: single runs, analyzer/delay/overlap sweeps and rate calibration
"""

import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

import config
from errors import SimulatorError
from harness import SWEEPS, ParityCheckExperiment, calibrate, emit_csv, run_analytic, run_montecarlo
from scenario import Channel, Scenario, SweepKind, SweepSection, load_scenario, serialize_scenario

logger = logging.getLogger(__name__)

SWEEP_COMMANDS = {
    'sweep-analyzer': SweepKind.ANALYZER,
    'sweep-delay': SweepKind.DELAY,
    'sweep-overlap': SweepKind.OVERLAP,
}


def setup_logging():
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format=config.LOG_FORMAT,
        handlers=[
            logging.FileHandler(config.LOG_FILE),
            logging.StreamHandler()
        ]
    )


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--scenario', required=True, help="Scenario .ini file")
    common.add_argument('--seed', type=_seed, default=config.DEFAULT_SEED, help="Master seed for Monte Carlo")
    common.add_argument('--shots', type=_positive_int, default=None,
                        help="Shots per point (omit for exact analytic rates)")
    common.add_argument('--out', default=None, help="Output path")
    common.add_argument('--channel', choices=[c.value for c in Channel], default=None,
                        help="Ancilla channel(s) counted in rate_per_min")
    common.add_argument('--workers', type=_positive_int, default=config.MC_WORKERS,
                        help="Threads for Monte Carlo batches")

    parser = argparse.ArgumentParser(description="Feed-forward quantum parity check simulator")
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('run', parents=[common], help="Rates at the scenario's analyzer setting")
    for name in SWEEP_COMMANDS:
        commands.add_parser(name, parents=[common], help=f"{SWEEP_COMMANDS[name].value} sweep")
    cal = commands.add_parser('calibrate', parents=[common], help="Fit channel efficiencies to a measured rate")
    cal.add_argument('--passive-rate', type=float, default=131.0, help="Measured passive coincidences per minute")
    cal.add_argument('--d2a-share', type=float, default=0.5, help="Share of the passive rate due to D2a")
    return parser


def _sweep_values(s: Scenario, kind: SweepKind):
    if s.sweep.kind == kind:
        return s.sweep.values()
    logger.warning(f"Scenario declares a {s.sweep.kind.value} sweep; using default {kind.value} points")
    return SweepSection(kind=kind).values()


def _default_out(args, suffix: str) -> Path:
    stem = Path(args.scenario).stem
    return Path(config.DEFAULT_OUTPUT_DIR) / f"{args.command.replace('-', '_')}_{stem}{suffix}"


def execute(args) -> Path:
    s = load_scenario(args.scenario)
    if args.channel:
        s = s.updated("control", channel=args.channel)

    if args.command == 'calibrate':
        calibrated, report = calibrate(s, args.passive_rate, args.d2a_share)
        for key, value in report.items():
            logger.info(f"  {key}: {value:.6f}")
        out = Path(args.out) if args.out else _default_out(args, ".ini")
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(serialize_scenario(calibrated), encoding=config.CSV_ENCODING)
        return out

    out = Path(args.out) if args.out else _default_out(args, ".csv")
    if args.command == 'run':
        experiment = ParityCheckExperiment(s)
        if args.shots:
            record = run_montecarlo(s, shots=args.shots, seed=args.seed, workers=args.workers,
                                    experiment=experiment)
        else:
            record = run_analytic(s, experiment=experiment)
        logger.info(f"Rate at {record.setting:g} deg: {record.rate_per_min:.3f}/min "
                    f"(D2a {record.rate_d2a:.3f}, D2b {record.rate_d2b:.3f})")
        return emit_csv(record, out)

    kind = SWEEP_COMMANDS[args.command]
    sweep = SWEEPS[kind]
    result = sweep(s, _sweep_values(s, kind), shots=args.shots, seed=args.seed, workers=args.workers)
    if result.summary:
        logger.info("Sweep summary:")
        for key, value in result.summary.items():
            logger.info(f"  {key}: {value:.6f}")
    return emit_csv(result, out)


def main(argv=None):
    """Main execution function"""
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        out = execute(args)
    except (SimulatorError, ValidationError, ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        sys.exit(1)
    print(f"\nProcessing complete! Results saved to: {out}")


if __name__ == "__main__":
    main()
