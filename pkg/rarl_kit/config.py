# rarl_kit/config.py
"""
Shared configuration for rarl-kit.

Environment variables are read from the shell or from a .env file.
Everything here is optional; defaults suit desk-scale tabular problems.
"""

import os
from typing import Optional

from dotenv import load_dotenv, find_dotenv

# Load environment variables from .env if present
load_dotenv(find_dotenv())


def get_env_int(name: str, default: int) -> int:
    """Read an optional integer environment variable."""
    value = os.getenv(name)
    if not value:
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise RuntimeError(
            f"Environment variable {name}={value!r} is not an integer."
        ) from exc


def get_env_str(name: str, default: str) -> str:
    """Read an optional string environment variable."""
    return os.getenv(name) or default


# -------- Numeric tolerances --------
ROW_SUM_TOL = 1e-12
OCCUPANCY_SUM_TOL = 1e-9
SOLVE_RESIDUAL_TOL = 1e-10
PIVOT_TOL = 1e-10
ZERO_MASS_TOL = 1e-12
FILE_ROW_TOL = 1e-9
CHECK_TOL = 1e-9

# -------- Solver limits --------
LP_ITERATION_CAP = 1_000_000
MIN_VISITS_CAP = 10_000
ROLLOUT_CAP_ACCURACY = 1e-3
EPISODE_CAP_FACTOR = 50.0

# -------- Process-wide knobs --------
ENUMERATION_CAP: int = get_env_int("RARL_KIT_ENUM_CAP", 1_000_000)
LOG_LEVEL: str = get_env_str("RARL_KIT_LOG_LEVEL", "INFO")


def worker_count(requested: Optional[int] = None) -> int:
    """
    Number of worker processes for multi-seed runs.

    RARL_KIT_THREADS caps the count; without it the CPU count is used.
    """
    cap = get_env_int("RARL_KIT_THREADS", os.cpu_count() or 1)
    if requested is None:
        return max(1, cap)
    return max(1, min(requested, cap))
