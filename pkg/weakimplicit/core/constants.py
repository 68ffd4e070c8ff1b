"""Constants and defaults."""
from dataclasses import dataclass
from typing import Dict, Tuple


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances shared by checks and property tests."""
    normalization: float = 1e-12
    probability: float = 1e-10
    stationary: float = 1e-12
    eigenvalue: float = 1e-8


DEFAULT_TOLERANCES = Tolerances()

# Power iteration
STATIONARY_MAX_ITER = 100_000

# Feasibility margin for Gaussian natural parameters (d_y <= -eps)
GAUSS_EPS = 1e-3

# Gradient clipping (infinity norm, per batch)
DEFAULT_CLIP_NORM = 10.0

# Synthetic study (means, shared sigma, misspecified per-class sigmas)
SYNTH_MEANS: Tuple[float, float, float] = (-1.0, 0.0, 1.0)
SYNTH_SIGMA = 1.0
SYNTH_MISSPECIFIED_SIGMAS: Tuple[float, float, float] = (0.7, 1.0, 1.4)
SYNTH_TEST_SIZE = 100_000
SYNTH_SIZES: Tuple[int, ...] = (10, 20, 50, 100, 500)
SYNTH_REPETITIONS = 50

# Synthetic training budget: updates per fit regardless of T, averaged tail
SYNTH_STEP_SIZE = 0.05
SYNTH_MIN_UPDATES = 2000
SYNTH_AVERAGE_TAIL = 0.5

# Bayes error of the well-specified generator, frozen from quadrature
BAYES_ERROR_REFERENCE = 0.4113833849679825

# Segmentation study (desk scale)
SEG_IMAGE_SIZE = 32
SEG_NUM_LABELS = 3
SEG_PALETTE_SIZE = 8
SEG_SIZES: Tuple[int, ...] = (5, 10, 20, 40)
SEG_REPETITIONS = 10
SEG_HELD_OUT = 20
SEG_EDGE_TYPES: Tuple[str, ...] = ('horizontal', 'vertical', 'diagonal_down', 'diagonal_up')

# Decision forest defaults
FOREST_TREES = 16
FOREST_DEPTH = 10

# Method names
METHOD_CL = 'CL'
METHOD_CL_WEAK = 'CL-weak-reg'
METHOD_CL_STRONG = 'CL-strong-reg'
METHOD_RF = 'RF'
METHOD_CL_CRF = 'CL-CRF'
METHOD_IM = 'IM'
METHOD_BAYES = 'Bayes'           # generator posterior, reference only

# l2 weights of the regularized baselines (per-example objective)
L2_PRESETS: Dict[str, float] = {
    METHOD_CL: 0.0,
    METHOD_CL_WEAK: 1e-3,
    METHOD_CL_STRONG: 1e-1,
}

# Output files
RESULTS_FILE = 'results.csv'
RESOLVED_CONFIG_FILE = 'config.ini'
RESULTS_HEADER: Tuple[str, ...] = (
    'experiment', 'method', 'train_size', 'repetition',
    'train_error', 'test_error', 'risk_diff', 'seed', 'wall_time',
)

# Parameter archive
ARCHIVE_MAGIC = 'weakimplicit-params'
ARCHIVE_VERSION = 1
