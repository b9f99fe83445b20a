"""Constants for the spde_lab experiment runner."""

DOMAIN = "spde_lab"
VERSION = "0.3.0"

# Environment
ENV_THREADS = "SPDE_LAB_THREADS"

# Subcommands
SUBCOMMAND_SIMULATE = "simulate"
SUBCOMMAND_WEAK_RATE = "weak-rate"
SUBCOMMAND_STRONG_RATE = "strong-rate"
SUBCOMMAND_LOWER_BOUND = "lower-bound"
SUBCOMMAND_ORACLE_CHECK = "oracle-check"
SUBCOMMAND_PERTURBATION_CHECK = "perturbation-check"
SUBCOMMANDS = (
    SUBCOMMAND_SIMULATE,
    SUBCOMMAND_WEAK_RATE,
    SUBCOMMAND_STRONG_RATE,
    SUBCOMMAND_LOWER_BOUND,
    SUBCOMMAND_ORACLE_CHECK,
    SUBCOMMAND_PERTURBATION_CHECK,
)

# Exit codes
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_ACCEPTANCE = 3
EXIT_IO = 4

# Configuration sections
CONF_MODEL = "model"
CONF_SCHEME = "scheme"
CONF_GRID = "grid"
CONF_MC = "mc"
CONF_OUTPUT = "output"
CONF_FUNCTIONAL = "functional"
CONF_PERTURBATION = "perturbation"
CONF_SWEEP = "sweep"

# Model kinds
MODEL_ANDERSON = "anderson"
MODEL_CHC = "chc"
MODEL_DIAGONAL_ADDITIVE = "diagonal-additive"

# Defaults
DEFAULT_MODEL = MODEL_ANDERSON
DEFAULT_MODES = 64
DEFAULT_NU = 0.1
DEFAULT_KAPPA = 0.5
DEFAULT_C = 9.869604401089358  # pi^2
DEFAULT_RHO = 2.0
DEFAULT_DELTA = 0.0
DEFAULT_T = 1.0
DEFAULT_SCHEME = "linear-implicit"
DEFAULT_N_LIST = (8, 16, 32, 64, 128)
DEFAULT_N_REF = 8192
DEFAULT_WEAK_SAMPLES = 200_000
DEFAULT_STRONG_SAMPLES = 10_000
DEFAULT_SEED = 20140101
DEFAULT_CHUNK_SIZE = 32
DEFAULT_THREADS = "1"
DEFAULT_FORMAT = "csv"
DEFAULT_FUNCTIONAL = "exp_neg_sq_norm"
DEFAULT_THETA = 0.5
DEFAULT_MOMENT = 2.0
DEFAULT_DISTANCES = (0.1, 1.0)
DEFAULT_SWEEP_MODES = 2000
DEFAULT_H_EXPONENTS = (3, 4, 5, 6, 7, 8, 9, 10)
DEFAULT_SWEEP_SCHEME = 1
DEFAULT_RHO_NORM = 0.0

# Monte Carlo
STANDARD_ERROR_BAND = 3.0
MIN_REFERENCE_RATIO = 8
CONVOLUTION_SEED_SALT = 0x5DEECE66D
TAIL_RELATIVE_TOLERANCE = 1e-3

# Report layout
REPORT_COLUMNS = ("N", "h", "estimate", "std_error", "samples")
LOWER_BOUND_COLUMNS = ("N", "h", "exact_gap", "lower_bound")
FLOAT_FORMAT = ".17g"
