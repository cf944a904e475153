"""
Centralized Solver Limits and Constants: Single Source of Truth.

Guards, field sizes, trial counts and exit codes used across the
codebase are imported from here.  Config values in ``config.json``
(see ``src.utils.common.resolve_settings``) override the defaults.

Usage:
    from src.utils.limits import MAX_EXACT_VERTICES, DEFAULT_FIELD_DEGREE
"""

# =============================================================================
# Exact Solver Guards
# =============================================================================

# Branch-and-bound local coloring (units after packet merging)
MAX_EXACT_VERTICES = 26

# 0/1 cover program (set-partition enumeration)
MAX_ILP_VERTICES = 14

# LP relaxation over independent sets
MAX_LP_VERTICES = 20

# Hard cap on enumerated independent sets for the LP / ILP
MAX_INDEPENDENT_SETS = 4096

# =============================================================================
# Finite Field
# =============================================================================

# GF(2^q) degree for MDS encoding; raised until 2^q exceeds the palette
DEFAULT_FIELD_DEGREE = 8

# Largest degree accepted from users
MAX_FIELD_DEGREE = 16

# Random-linear baseline uses a larger field so rank deficiency is rare
RANDOM_FIELD_DEGREE = 16

# Trials per nu for the random-linear baseline
RANDOM_TRIALS = 20

# Extra rows tried past |S| before the random baseline gives up
RANDOM_EXTRA_ROWS = 8

# =============================================================================
# Verification
# =============================================================================

# Symbols per packet in codec round trips (= independent scalar assignments)
VERIFY_WIDTH = 100

# Exhaustive verification when canonical demands are at most this many
VERIFY_EXHAUSTIVE_LIMIT = 500

# Seeded random demand samples otherwise
VERIFY_SAMPLES = 50

# =============================================================================
# Bounds
# =============================================================================

# Order-optimality ceiling on achievable / lower bound
GAP_CEILING = 18

# Decimal places in CSV decimal columns
CSV_DECIMALS = 6

# =============================================================================
# Parallel Sweeps
# =============================================================================

# Environment variable capping worker processes
THREADS_ENV_VAR = "CODED_GROUPCAST_THREADS"

# =============================================================================
# Logging
# =============================================================================

# Environment variable overriding the log directory
LOG_DIR_ENV_VAR = "CODED_GROUPCAST_LOG_DIR"

# Rotating run log: bytes per file and files kept
RUN_LOG_MAX_BYTES = 5_000_000
RUN_LOG_BACKUPS = 2

# =============================================================================
# CLI Exit Codes
# =============================================================================

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INVALID_INPUT = 2
EXIT_SOLVER_GUARD = 3
EXIT_BOUND_VIOLATION = 4
