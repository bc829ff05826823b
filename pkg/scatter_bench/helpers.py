"""
Provides the utilities needed across the workbench:
    - exception hierarchy (validation errors vs solver failures)
    - logging setup for entry points
    - deterministic float formatting and CSV persistence
    - small vector helpers shared by the field modules
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from scatter_bench import config


class ScatterBenchError(Exception):
    """Base class for every error raised by the workbench."""


class ValidationError(ScatterBenchError):
    """Input, configuration or precondition violation (CLI exit code 1)."""


class MeshParseError(ValidationError):
    """Malformed line in a mesh file."""


class MeshValidationError(ValidationError):
    """Mesh violates a structural invariant."""


class SolverError(ScatterBenchError):
    """Numerical failure of the direct solver (CLI exit code 2)."""

    def __init__(self, message: str, condition: Optional[float] = None,
                 case_id: Optional[str] = None):
        super().__init__(message)
        self.condition = condition
        self.case_id = case_id

    def with_case(self, case_id: str) -> "SolverError":
        return SolverError(f"[{case_id}] {self}", condition=self.condition, case_id=case_id)


def setup_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL)
    logging.basicConfig(level=level, format=config.LOG_FORMAT)


def format_float(value: float) -> str:
    """
    Format a float with 17 significant digits so a CSV round trip is exact.

    :param value: any real number (nan and inf allowed)
    :return: decimal text
    """
    value = float(value)
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return config.FLOAT_FORMAT % value


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence],
              schema_version: Optional[int] = None) -> Path:
    """
    Write rows to a CSV file with deterministic formatting.

    :param path: target file, parent directories are created
    :param header: column names
    :param rows: iterable of row sequences
    :param schema_version: when given, a ``# schema_version=N`` line precedes the header
    :return: the written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f_obj:
        if schema_version is not None:
            f_obj.write(f"# schema_version={schema_version}\n")
        writer = csv.writer(f_obj, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
    return path


def read_csv(path) -> Tuple[List[str], List[List[str]]]:
    """
    Read a CSV written by ``write_csv``; comment lines are skipped.

    :return: (header, rows) with raw string cells
    :raises ValidationError: if the file cannot be read or has no header
    """
    try:
        with open(path, newline="", encoding="utf-8") as f_obj:
            lines = [line for line in f_obj if not line.startswith("#")]
    except OSError as e:
        raise ValidationError(f"Cannot read CSV {path} - {e}") from e
    parsed = list(csv.reader(lines))
    if not parsed:
        raise ValidationError(f"CSV {path} has no header")
    return parsed[0], parsed[1:]


def as_points(x) -> Tuple[np.ndarray, bool]:
    """Return ``x`` as an (n, 3) float array and whether the input was a single point."""
    arr = np.asarray(x, dtype=float)
    if arr.shape == (3,):
        return arr.reshape(1, 3), True
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError(f"Expected a point or an (n, 3) array, got shape {arr.shape}")
    return arr, False


def row_norms(v: np.ndarray) -> np.ndarray:
    """Euclidean norm along the last axis, complex entries allowed."""
    return np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))
