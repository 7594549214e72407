import os
import logging
from typing import Any, Dict, Optional

import yaml

from .errors import InvalidConfigError

logger = logging.getLogger(__name__)

DEFAULT_RUN = "default"

# Base paths
BASE_OUTPUT_PATH = os.environ.get("MULTITGDR_OUTPUT_PATH", "./runs")

LOG_LEVEL = os.environ.get("MULTITGDR_LOG_LEVEL", "INFO")
DEFAULT_JOBS = int(os.environ.get("MULTITGDR_JOBS", "1"))

# Algorithm defaults
DEFAULT_TAU = 0.5
DEFAULT_DELTA_V = 0.01
DEFAULT_MAX_STEPS = 1000
DEFAULT_FOLDS = 5
DEFAULT_CV_STRIDE = 10
DEFAULT_BOOTSTRAP = 100
DEFAULT_TAU_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_CUTOFF_GRID = tuple(round(0.05 * i, 2) for i in range(1, 11))
TABLE1_CUTOFFS = (0.4, 0.8)

# Replication runs walk a finer path so CV can place k between feature entries
TABLE1_DELTA_V = 0.002
TABLE1_MAX_STEPS = 1500
TABLE1_CV_STRIDE = 5
TABLE1_CRITERION = "gbs"

# Multi-study check
META_CHECK_TAU_GRID = (0.9, 1.0)
META_CHECK_DELTA_V = 0.002
META_CHECK_MAX_STEPS = 800
META_CHECK_CV_STRIDE = 5

# Numerical constants
SELECTION_TOLERANCE = 1e-12
ZERO_GRADIENT_FLOOR = 1e-14
LOGIT_CLAMP = 700.0
PROBABILITY_SUM_TOLERANCE = 1e-9
DEGENERATE_PROBABILITY = 1e-12
RIDGE = 1e-10
MAX_RESAMPLE_ATTEMPTS = 1000
MAX_MEMBER_FAILURE_RATE = 0.10


def get_output_path(base_path: Optional[str] = None, run: Optional[str] = None) -> str:
    if run is None:
        run = DEFAULT_RUN
    path = os.path.join(base_path or BASE_OUTPUT_PATH, run)

    # create run directory if it doesn't exist
    os.makedirs(path, exist_ok=True)
    return path


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a YAML config file into a flat dict keyed by option name."""
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise InvalidConfigError(f"Config file {path} is not valid YAML: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidConfigError(f"Config file {path} must contain a mapping")

    options = {str(key).replace("-", "_"): value for key, value in data.items()}
    logger.info(f"Loaded {len(options)} options from {path}")
    return options


def dump_config(options: Dict[str, Any]) -> str:
    return yaml.safe_dump(options, sort_keys=True, default_flow_style=False)
