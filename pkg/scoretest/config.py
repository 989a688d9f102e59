import os
from dotenv import load_dotenv

load_dotenv()


def _int_list(raw: str):
    return [int(v) for v in raw.split(",") if v.strip()]


# =====================
# RANDOMNESS
# =====================
DEFAULT_SEED = int(os.getenv("SCORETEST_SEED", 0))

# =====================
# LOGGING
# =====================
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_DIR = os.getenv("LOG_DIR", "logs")
LOG_TO_FILE = os.getenv("LOG_TO_FILE", "false").lower() == "true"

# =====================
# FINITE DIFFERENCES
# =====================
FD_STEP = float(os.getenv("FD_STEP", 1e-4))
FD_TOLERANCE = float(os.getenv("FD_TOLERANCE", 1e-4))
FD_PROBES = int(os.getenv("FD_PROBES", 20))

# =====================
# SAMPLERS
# =====================
MALA_BURN_IN = int(os.getenv("MALA_BURN_IN", 5000))
HMC_BURN_IN = int(os.getenv("HMC_BURN_IN", 5000))
# "1000 RBM iterations" is read as burn-in sweeps
GIBBS_BURN_IN = int(os.getenv("GIBBS_BURN_IN", 1000))
MALA_TARGET_ACCEPT = float(os.getenv("MALA_TARGET_ACCEPT", 0.57))
HMC_TARGET_ACCEPT = float(os.getenv("HMC_TARGET_ACCEPT", 0.8))
HMC_STEP_SIZE = float(os.getenv("HMC_STEP_SIZE", 0.1))
HMC_PATH_LENGTH = int(os.getenv("HMC_PATH_LENGTH", 20))
HMC_DIVERGENCE = float(os.getenv("HMC_DIVERGENCE", 1e3))
TUNE_ROUNDS = int(os.getenv("TUNE_ROUNDS", 20))
TUNE_STEPS = int(os.getenv("TUNE_STEPS", 100))
TUNE_STEP_MIN = float(os.getenv("TUNE_STEP_MIN", 1e-4))
TUNE_STEP_MAX = float(os.getenv("TUNE_STEP_MAX", 5.0))

# =====================
# EXPONENTS
# =====================
THETA_MAX = float(os.getenv("THETA_MAX", 50.0))
THETA_TOL = float(os.getenv("THETA_TOL", 1e-8))
THETA_MAX_LIMIT = float(os.getenv("THETA_MAX_LIMIT", 1e6))
MC_SAMPLES_GAUSSIAN = int(os.getenv("MC_SAMPLES_GAUSSIAN", 1_000_000))
MC_SAMPLES_MCMC = int(os.getenv("MC_SAMPLES_MCMC", 100_000))
EXPONENT_CURVE_POINTS = int(os.getenv("EXPONENT_CURVE_POINTS", 11))

# =====================
# QUADRATURE
# =====================
QUAD_TOLERANCE = float(os.getenv("QUAD_TOLERANCE", 1e-6))
QUAD_NODES = {1: 2001, 2: 401, 3: 121}
QUAD_MAX_DIM = 3

# =====================
# SWEEP
# =====================
SWEEP_N_LIST = _int_list(os.getenv("SWEEP_N_LIST", "1,2,4,8,16,32,64,128"))
SWEEP_TRIALS = int(os.getenv("SWEEP_TRIALS", 10_000))
SWEEP_POOL_SIZE = int(os.getenv("SWEEP_POOL_SIZE", 10_000))
SWEEP_RUNS = int(os.getenv("SWEEP_RUNS", 10))
SWEEP_WORKERS = int(os.getenv("SWEEP_WORKERS", 1))

# =====================
# RBM TRAINING
# =====================
TRAIN_LEARNING_RATE = float(os.getenv("TRAIN_LEARNING_RATE", 1e-3))
TRAIN_BATCH_SIZE = int(os.getenv("TRAIN_BATCH_SIZE", 32))
TRAIN_EPOCHS = int(os.getenv("TRAIN_EPOCHS", 200))
TRAIN_DIVERGENCE_FACTOR = float(os.getenv("TRAIN_DIVERGENCE_FACTOR", 10.0))
TRAIN_DIVERGENCE_PATIENCE = int(os.getenv("TRAIN_DIVERGENCE_PATIENCE", 3))
RBM_EXACT_MAX_HIDDEN = 12

# =====================
# DATA
# =====================
UNKNOWN_MAX_COUNT = int(os.getenv("UNKNOWN_MAX_COUNT", 100))
BAD_ROW_FRACTION = float(os.getenv("BAD_ROW_FRACTION", 0.01))
KDD_DATA_PATH = os.getenv("KDD_DATA_PATH")

# =====================
# PERTURBATION
# =====================
SIGMA_PTB = float(os.getenv("SIGMA_PTB", 0.01))
TAU_PTB = float(os.getenv("TAU_PTB", 0.01))

# =====================
# HTTP API
# =====================
API_HOST = os.getenv("API_HOST", "127.0.0.1")
API_PORT = int(os.getenv("API_PORT", 8000))
