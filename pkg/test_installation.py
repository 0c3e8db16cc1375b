#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Installation check: required packages, configuration and one exact rate
"""

import sys
from pathlib import Path


def check_imports():
    """Check that all required packages can be imported"""
    print("Checking imports...")

    for name in ("pydantic", "numpy", "scipy"):
        try:
            module = __import__(name)
            print(f"✓ {name} {module.__version__} imported successfully")
        except ImportError as e:
            print(f"✗ {name} import failed: {e}")
            return False

    import pydantic
    major, minor = (int(part) for part in pydantic.VERSION.split(".")[:2])
    if (major, minor) < (2, 9):
        print(f"✗ pydantic {pydantic.VERSION} is too old; complex amplitudes need 2.9 or newer")
        return False
    return True


def check_config():
    """Check configuration loading"""
    print("\nChecking configuration...")

    try:
        import config
        print("✓ Configuration loaded successfully")
        print(f"  - Monte Carlo batch size: {config.MC_BATCH_SIZE}")
        print(f"  - Workers: {config.MC_WORKERS}")
        print(f"  - Output directory: {config.DEFAULT_OUTPUT_DIR}")
        return True
    except Exception as e:
        print(f"✗ Configuration loading failed: {e}")
        return False


def check_scenarios():
    """Check that the shipped scenario files parse"""
    print("\nChecking scenarios...")

    import config
    from scenario import load_scenario

    scenario_dir = Path(config.SCENARIO_DIR)
    files = sorted(scenario_dir.glob("*.ini"))
    if not files:
        print(f"✗ No scenario files in {scenario_dir}")
        return False
    for path in files:
        try:
            load_scenario(path)
        except Exception as e:
            print(f"✗ {path.name}: {e}")
            return False
    print(f"✓ {len(files)} scenario files parsed")
    return True


def check_parity_rate():
    """Ideal passive parity check at the input angle heralds a quarter of the pairs"""
    print("\nChecking a reference rate...")

    try:
        from harness import ParityCheckExperiment
        from scenario import parse_scenario

        s = parse_scenario("[circuit]\ncoupling_eta = 1\n[control]\npolicy = passive\n"
                           "channel = d2a\n[sweep]\nkind = analyzer\n")
        p = ParityCheckExperiment(s).channel_probabilities().d2a
        if abs(p - 0.25) < 1e-9:
            print(f"✓ Passive D2a coincidence probability {p:.6f}")
            return True
        print(f"✗ Expected 0.25, got {p}")
        return False
    except Exception as e:
        print(f"✗ Reference rate failed: {e}")
        return False


def main():
    """Run all checks"""
    print("Feed-forward Parity Check Simulator - Installation Check")
    print("=" * 50)

    checks = [
        check_imports,
        check_config,
        check_scenarios,
        check_parity_rate,
    ]

    passed = sum(1 for check in checks if check())

    print("\n" + "=" * 50)
    print(f"Check Results: {passed}/{len(checks)} checks passed")

    if passed == len(checks):
        print("✓ All checks passed! Installation is complete.")
        print("\nYou can now run the simulator:")
        print("python parity_check_simulator.py sweep-analyzer --scenario scenarios/feedforward.ini")
    else:
        print("✗ Some checks failed. Please check the errors above.")
        print("\nCommon solutions:")
        print("1. Install missing packages: pip install -r requirements.txt")
        print("2. Run from the repository root so scenarios/ is found")

    return passed == len(checks)


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
