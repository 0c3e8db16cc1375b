# -*- coding: utf-8 -*-
"""
Configuration file for the feed-forward parity check simulator
"""

import os

# Numerical configuration
PRUNE_THRESHOLD = float(os.getenv("PRUNE_THRESHOLD", "1e-15"))
NORM_TOLERANCE = float(os.getenv("NORM_TOLERANCE", "1e-12"))
UNITARY_TOLERANCE = float(os.getenv("UNITARY_TOLERANCE", "1e-10"))
MAX_PHOTONS = 2

# Monte Carlo configuration
MC_BATCH_SIZE = int(os.getenv("MC_BATCH_SIZE", "10000"))  # Shots per rng substream
MC_WORKERS = int(os.getenv("MC_WORKERS", "1"))
DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "0"))

# Logging configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "parity_check.log")
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

# Output configuration
DEFAULT_OUTPUT_DIR = os.getenv("DEFAULT_OUTPUT_DIR", "./output")
SCENARIO_DIR = os.getenv("SCENARIO_DIR", "./scenarios")
CSV_ENCODING = os.getenv("CSV_ENCODING", "utf-8")
CSV_DECIMALS = 6
CSV_FIELDNAMES = [
    'sweep_kind', 'setting', 'rate_per_min', 'rate_d2a', 'rate_d2b', 'shots', 'seed'
]

# Progress reporting for long sweeps
PROGRESS_EVERY = int(os.getenv("PROGRESS_EVERY", "10"))
