import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    # ========== SERIES CERTIFICATION ==========
    # Absolute tolerance for a Converged verdict (half-width of the tail bracket)
    SERIES_ABS_TOL = float(os.getenv('IMPWALK_SERIES_ABS_TOL', '1e-10'))
    # Relative tolerance; 0 keeps the absolute rule only
    SERIES_REL_TOL = float(os.getenv('IMPWALK_SERIES_REL_TOL', '0.0'))
    # First chunk of terms; chunks double up to the horizon
    SERIES_CHUNK = 1024
    # Divergence witnesses are only trusted past this many terms
    SERIES_WITNESS_MIN_TERMS = 1024
    # Local power-law exponent must exceed 1 by this margin to extrapolate a tail
    SERIES_POWER_MARGIN = 0.02
    # Geometric tail bound needs every late ratio below 1 - this gap
    SERIES_RATIO_GAP = 1e-3

    # ========== HORIZONS ==========
    M_HORIZON = int(os.getenv('IMPWALK_M_HORIZON', '65536'))
    J_HORIZON = int(float(os.getenv('IMPWALK_J_HORIZON', '1e9')))
    CLASSIFY_HORIZON = int(os.getenv('IMPWALK_CLASSIFY_HORIZON', '1048576'))

    # ========== POWER-SERIES BRACKETING ==========
    # Terms summed exactly before geometric blocks take over
    PHI_HEAD_TERMS = 512
    # Each block is this factor longer than the last
    PHI_BLOCK_GROWTH = 1.01
    # Blocks stop once z^j is below exp(-PHI_DECAY_CUTOFF)
    PHI_DECAY_CUTOFF = 60.0
    # z values bracketed together (memory of one head/block matrix)
    PHI_Z_CHUNK = 2048

    # ========== MONTE CARLO ==========
    STEP_CAP = int(float(os.getenv('IMPWALK_STEP_CAP', '1e8')))
    MC_BATCH = int(os.getenv('IMPWALK_MC_BATCH', '1024'))
    # Rows left in a batch before the scalar engine finishes them
    MC_STRAGGLERS = 8
    # Histogram of M keeps exact counts below this value
    HIST_MAX = 1024
    EXACT_N_MAX = 14

    # ========== HARNESS ==========
    WORKERS = int(os.getenv('IMPWALK_WORKERS', '1'))
    OUTPUT_DIR = os.getenv('IMPWALK_OUTPUT_DIR', 'results')
    OUTPUT_FORMAT = os.getenv('IMPWALK_OUTPUT_FORMAT', 'csv')
    RUN_LEDGER = os.getenv('IMPWALK_RUN_LEDGER', '')
    KS_TOLERANCE = 0.02
    UNIFORM_MIN_N = 100
    UNIFORM_MIN_REPLICAS = 10_000
    GATE_TV_TOLERANCE = 1e-12
    # Relative tolerance of series certification in phase sweeps
    PHASE_REL_TOL = float(os.getenv('IMPWALK_PHASE_REL_TOL', '1e-2'))
    # Monte Carlo means are only compared with series values below this censor rate
    CENSOR_ASSERT_MAX = 0.01
    # Largest relative move of a positive recurrent mean when its replicas double
    STABILITY_REL_CHANGE = 0.05
    # Paths re-simulated on the crossing clock to check the ZeroTail range law
    RANGE_CLOCK_PATHS = 64
    # Stream id of the single walk written by --trace
    TRACE_STREAM = 1 << 32
