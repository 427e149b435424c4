"""
Shared numerical defaults, search grids and message templates.
"""

# Numerical kernels
DEFAULT_QUAD_TOL = 1e-10
# Maximum number of subintervals for adaptive quadrature
DEFAULT_QUAD_LIMIT = 200
DEFAULT_ROOT_TOL = 1e-12
DEFAULT_OPTIM_TOL = 1e-10
DEFAULT_OPTIM_MAX_ITER = 4000
DEFAULT_BISECTION_MAX_ITER = 400
# Relative width used to build the initial Nelder-Mead simplex
DEFAULT_SIMPLEX_STEP = 0.1

# Distributions
EPD_MONOTONE_GRID_POINTS = 64
EPD_MONOTONE_GRID_DECADES = 6
# Upper end of the doubling search for numeric quantile brackets
MAX_BRACKET_DOUBLINGS = 200

# Estimation
DEFAULT_LEVEL = 0.95
MIN_HILL_EXCEEDANCES = 2
MIN_GPD_EXCEEDANCES = 5
MIN_EPD_EXCEEDANCES = 10
# Below this many exceedances, asymptotic intervals get a note
SMALL_TAIL_EXCEEDANCES = 30
ALPHA_MIN = 1e-2
ALPHA_MAX = 1e3
# Fraction of ALPHA_MAX treated as the exponential-limit boundary
ALPHA_BOUNDARY_FRACTION = 0.99
ALPHA_SCAN_POINTS = 41
EPD_TAU_GRID = (-0.25, -0.5, -1.0, -2.0, -5.0, -10.0)
EPD_TAU_MIN = -50.0
EPD_DELTA_MAX = 1e3
EPD_DELTA_SCAN_POINTS = 41
# Margin kept between delta and its admissibility bound during the search
EPD_DELTA_MARGIN = 1e-9
# Profile intervals search alpha in [alpha_hat / span, alpha_hat * span]
PROFILE_SPAN = 10.0
PROFILE_GRID_POINTS = 50
CHI2_1_DOF = 1

# Risk measures and reinsurance
DEFAULT_P_LEVELS = (0.01, 0.005, 0.001)
DEFAULT_BOOTSTRAP_REPLICATES = 200

# Dynamic risk
DEFAULT_EWMA_BETA = 0.94
DEFAULT_RESIDUAL_LEVEL = 0.90
PRESAMPLE_VARIANCE_LENGTH = 50
MIN_GARCH_LENGTH = 100
GARCH_START_GRID = ((0.05, 0.90), (0.10, 0.85), (0.20, 0.70), (0.02, 0.97))
# Persistence above this is reported as a boundary solution
GARCH_PERSISTENCE_BOUNDARY = 1.0 - 1e-4
GARCH_LOG_OMEGA_BOUNDS = (-25.0, 5.0)
DEFAULT_HALF_WIDTH = 150
BACKTEST_BAND_LEVEL = 0.95

# Data
DEFAULT_DELIMITER = ","
PLOTTING_POSITION_OFFSET = 0.5

# Command line
DEFAULT_SEED = 20191201
OUTPUT_DIR_ENV_VAR = "PARETO_RISK_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "pareto_risk_output"
STUDY_TAU_GRID = (-20.0, -10.0, -5.0, -2.0, -1.0, -0.5, -0.25, 0.0)
STUDY_ALPHA = 1.5
STUDY_DELTA = 0.5
STUDY_SAMPLE_SIZE = 1000
STUDY_HILL_LEVELS = (0.6, 0.9)
STUDY_GPD_LEVEL = 0.8
STUDY_REPLICATES = 1
# Quantile levels of the thresholds in stability plots
STABILITY_LEVELS = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)
# Quantile levels of the grid in mean-excess plots
MEAN_EXCESS_LEVELS = tuple(round(0.02 * i, 2) for i in range(50))
DEFAULT_RETURN_PERIODS = (10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0)

# Error messages
ERROR_NON_FINITE_INPUT = "Input must be finite, got {}"
ERROR_PROBABILITY_RANGE = "Probability must lie in {}, got {}"
ERROR_BELOW_LOWER_BOUND = "Argument {} is below the lower bound {}"
ERROR_INFINITE_MEAN = "Tail index {} <= 1: the mean is infinite"
ERROR_EPD_DELTA = "delta={} must exceed max(-1, 1/tau)={} for tau={}"
ERROR_EPD_NOT_MONOTONE = "Survival function is not strictly decreasing for {}"
ERROR_INSUFFICIENT_EXCEEDANCES = (
    "{} requires at least {} exceedances above u={}, got {}"
)
ERROR_DEGENERATE_EXCEEDANCES = "Exceedances above u={} are degenerate: {}"
ERROR_EXTRAPOLATION = "Probability {} is not below the tail fraction q_u={}"
ERROR_SUB_THRESHOLD = "{} falls below the threshold u={}"
ERROR_NO_SIGN_CHANGE = "No sign change on [{}, {}]: f(lo)={}, f(hi)={}"
ERROR_NOT_CONVERGED = "Quadrature did not reach tolerance {} on [{}, {}]: {}"
ERROR_OBJECTIVE_NON_FINITE = "Objective is non-finite at the starting point {}"
ERROR_ALL_STARTS_FAILED = "All {} optimizer starts failed"
ERROR_MISALIGNED = "Series lengths differ: {} and {}"
ERROR_THRESHOLD_SPEC = (
    "Exactly one of an absolute threshold and a quantile level is required"
)

# Notes recorded in series metadata and fit notes
NOTE_SMALL_TAIL = "Only {} exceedances; asymptotic intervals are unreliable."
NOTE_POINT_FAILED = "{}={}: {}"
NOTE_OPEN_INTERVAL = "Interval endpoint not found inside the searched alpha range."
NOTE_TRUNCATED_WINDOW = "Window truncated at the series edge."
NOTE_BOUNDARY_SOLUTION = "Optimum on the admissible boundary: {}"
NOTE_DELTA_UNAVAILABLE = "Delta method unavailable for {} fits; no interval reported."
