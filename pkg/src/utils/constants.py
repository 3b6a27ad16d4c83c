"""
Shared constants and small helpers for convexlab
Only includes constants actually used in the codebase
"""

# Version information
__version__ = "1.0.0"

import os

# Report schema version, bumped on incompatible JSON changes
REPORT_SCHEMA = 1

# Environment variable capping worker threads
THREADS_ENV_VAR = "CONVEXLAB_THREADS"

# Exit codes of the command line surface
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_GEOMETRY = 2

# Numerical floors shared across modules
MACHINE_EPS = 2.220446049250313e-16
UNIT_NORM_TOL = 1e-12
TANGENCY_TOL = 1e-6
DEGENERATE_GRADIENT = 1e-8
FLAT_PROBE_FLOOR = 1e-14


def get_script_directory() -> str:
    """Get the repository root (3 levels up from this file)"""
    return os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def get_config_directory() -> str:
    """Directory holding the YAML defaults and the shipped gallery files"""
    return os.path.join(get_script_directory(), "configs")


def get_default_config_path() -> str:
    return os.path.join(get_config_directory(), "main.yaml")


def get_gallery_directory() -> str:
    return os.path.join(get_config_directory(), "gallery")


def get_thread_count() -> int:
    """
    Number of worker threads allowed by CONVEXLAB_THREADS.

    Unset, empty or unparsable values fall back to a single thread.
    """
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)
