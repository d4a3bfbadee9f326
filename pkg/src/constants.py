"""
Constants for subcommands, chart tags and numerical tolerances
"""

import math
from enum import Enum


class Subcommand(str, Enum):
    """CLI subcommand names"""
    HARMONICS_CHECK = "harmonics-check"
    FRAME_BUILD = "frame-build"
    FRAME_CHECK = "frame-check"
    SIMULATE = "simulate"
    LOCALIZATION = "localization"
    UNCORRELATION = "uncorrelation"
    CLT = "clt"
    SJ_TEST = "sj-test"


class ChartTag(str, Enum):
    """Chart labels used in partition files"""
    IDENTITY = "I"
    POLAR = "polar"


FOUR_PI = 4.0 * math.pi

# Geometry
UNIT_TOL = 1e-12
ORTHO_TOL = 1e-12
POLE_TOL = 1e-12
PARTITION_DELTA0 = math.pi / 2
PARTITION_SAFETY = 0.5
PARTITION_SWEEP = (0.01, math.pi / 2, 200)

# Harmonics
DIRECT_SUM_MAX_L = 48
DIRECT_SUM_DPS = 60
TOP_SHELL_FRACTION = 1e-6

# Filters
DEFAULT_A = 2.0 ** (1.0 / 3.0)
STEP_NODES = 96
DAUBECHIES_POINTS_PER_DECADE = 10_000
DAUBECHIES_MIN_POINTS = 2_000
DAUBECHIES_LOG_RANGE = (-12.0, 6.0)

# Frames
RING_CHUNK_BYTES = 64 * 2 ** 20
EIGSH_TOL = 1e-10
EIGSH_MAXITER = 2000
DENSE_OPERATOR_LIMIT = 512
LOCALIZATION_FLOOR = 1e-10
LOCALIZATION_FAR_ZONE = 2.0

# Statistics
DEFAULT_ALPHA_LEVEL = 0.05
ISOTROPY_Z_LIMIT = 4.0

# Acceptance thresholds used by the check subcommands
GRAM_TOL = 1e-9
KERNEL_DIAGONAL_TOL = 1e-9
ZONAL_SPECTRAL_TOL = 1e-12
ZONAL_NUMERIC_TOL = 1e-6
LADDER_TOL = 1e-4
ADJOINT_TOL = 1e-9
ROTATION_TOL = 1e-9
LOCALIZATION_CENTER_TOL = 0.15
LOCALIZATION_MAX_SLOPE = -4.0
CLT_KS_LIMIT = 0.03
CLT_KS_SCALE = 1.9
CLT_MONOTONE_TOL = 0.01
UNCORRELATION_FINAL = 0.1
REJECTION_BAND = 0.02
COVARIANCE_Z_LIMIT = 5.0

# Test tooling
FULL_RUN_ENV = "SPINLET_FULL"
