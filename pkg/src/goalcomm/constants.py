"""Default values, paths, and version constants."""

from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path

# Version
VERSION = "0.1.0"
APP_NAME = "goalcomm"

# Output
OUTPUT_DIR_ENV = "GOALCOMM_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = Path(os.environ.get(OUTPUT_DIR_ENV, "results"))

# Simulation time
DEFAULT_TICK = Fraction(1, 1000)  # seconds per tick

# Value of information
VOI_OUTER_SAMPLES = 256
VOI_INNER_SAMPLES = 64
PRAGMATIC_ROLLOUTS = 512

# Remote MDP
TARGET_REWARD = 100.0
STEP_REWARD = -1.0
DEFAULT_MESSAGES = 4
DEFAULT_SYMBOLS_PER_MESSAGE = 2
DEFAULT_ALPHABET = 2
EPISODE_STEP_CAP = 100

# Guidance coding
ORACLE_MAX_VERTICES = 12
ORACLE_MAX_BLOCK = 4

# AirComp / FEEL
GDOAC_BLOCK = 5
GDOAC_CODEBOOK_BITS = 6
SIGNATURE_LENGTH = 256

# Feedback codecs
USER_ID_BITS = 32
POPULATION = 2**USER_ID_BITS
K_MAX = 1000
HASHSIG_SLACK = 8  # extra GF(2) columns so the random system is solvable w.h.p.
HASHSIG_MAX_ATTEMPTS = 64
FEEDBACK_PROBES = 10_000

# Edge inference
EDGE_QUEUE_CAP = 10_000
BANDWIDTH_QUANTA = 1024

# Logging
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
