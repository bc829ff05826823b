"""
This module defines constants for the scattering workbench.
It includes the results storage path, logging levels, solver and quadrature
defaults, diagnostic thresholds and the web reporter settings, plus the reader
for line-oriented ``key = value`` scenario files.
"""

import os
from pathlib import Path
from typing import Dict

# Base directory for CSV outputs and reports
RESULTS_DIR = Path(os.environ.get("SCATTER_BENCH_RESULTS",
                                  Path(__file__).parent / "results"))
RESULTS_DIR.mkdir(parents=True, exist_ok=True)

# CSV persistence
CSV_SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"

# Solver settings
SUPPORTED_QUAD_ORDERS = (3, 4, 6, 7)
DEFAULT_QUAD_ORDER = 6
NEAR_FIELD_FACTOR = 2.0  # Triangle pairs closer than this many diameters get singularity extraction
CONDITION_LIMIT = 1e12
RESIDUAL_TARGET = 1e-10
EXTRACTION_ASYMMETRY_LIMIT = 1e-2  # Relative gap between the one-sided near-pair correction and its transpose
ASSEMBLY_CHUNK_ENTRIES = 2_000_000  # Kernel entries held in memory per assembly chunk
SURFACE_CLEARANCE = 0.05  # Minimal evaluation distance, in local edge lengths

# Quadrature grids
FARFIELD_N_THETA = 16
FARFIELD_N_PHI = 32
BALL_ORDER = (64, 32, 32)        # radial x polar x azimuthal
NEAR_ERROR_BALL_ORDER = (6, 8, 16)
B0_GRID_POINTS = 2562            # Icosphere level 4

# Mie oracle
MIE_MAX_KA = 200.0
MIE_THRESHOLD = 0.03

# Geometry
WINDING_THRESHOLD = 0.5
DEGENERATE_AREA_RATIO = 1e-12
COPLANAR_TOLERANCE = 1e-9

# Logging configuration
LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Web reporter settings
REPORTER_HOST = "0.0.0.0"
REPORTER_PORT = 5050


def read_key_value_file(path) -> Dict[str, str]:
    """
    Read a scenario file made of ``key = value`` lines.

    :param path: path of the scenario file
    :return: mapping of keys to raw string values, in file order
    :raises ValidationError: on a missing file, a line without ``=`` or a duplicate key
    """
    from scatter_bench.helpers import ValidationError

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"Cannot read scenario file {path} - {e}") from e

    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValidationError(f"{path}:{number}: empty key")
        if key in values:
            raise ValidationError(f"{path}:{number}: duplicate key {key!r}")
        values[key] = value
    return values
