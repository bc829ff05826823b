"""
Incident plane waves and the constants that measure how well a pair of
waves spans every tangent direction.

Time dependence is exp(-i omega t); with unit material constants the fields
satisfy curl E = i k H and curl H = -i k E.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from scatter_bench import config
from scatter_bench.geometry import make_icosphere
from scatter_bench.helpers import ValidationError, as_points, row_norms
from scatter_bench.quadrature import icosphere_level_for

logger = logging.getLogger(__name__)

WAVE_KEYS = ("dx", "dy", "dz", "px", "py", "pz")


@dataclass(frozen=True, eq=False)
class PlaneWaveSpec:
    """
    Normalised plane wave with wavenumber ``k``, direction ``d`` and polarisation ``p``.

    A wave with p parallel to d is representable (its fields vanish) but is
    rejected wherever a usable wave is required.
    """
    k: float
    d: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float).reshape(3)
        p = np.array(self.p, dtype=float).reshape(3)
        if not self.k > 0:
            raise ValidationError(f"Wavenumber must be positive, got k={self.k}")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValidationError(f"Direction must be a unit vector, got |d|={np.linalg.norm(d)}")
        norm_p = np.linalg.norm(p)
        if not 0 < norm_p <= 1.0 + 1e-12:
            raise ValidationError(f"Polarisation must satisfy 0 < |p| <= 1, got |p|={norm_p}")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p", p)

    @property
    def amplitude_vector(self) -> np.ndarray:
        """(d x p) x d, the direction and size of E up to the factor i k exp(i k x.d)."""
        return np.cross(np.cross(self.d, self.p), self.d)

    @property
    def b(self) -> float:
        return float(np.linalg.norm(self.amplitude_vector))

    def scaled(self, alpha: float) -> "PlaneWaveSpec":
        return PlaneWaveSpec(self.k, self.d, alpha * self.p)

    def to_mapping(self, prefix: str = "") -> dict:
        values = dict(zip(WAVE_KEYS, list(self.d) + list(self.p)))
        values["k"] = self.k
        return {f"{prefix}{key}": float(value) for key, value in values.items()}

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], prefix: str = "",
                     k: Optional[float] = None) -> "PlaneWaveSpec":
        """Build from scenario keys ``<prefix>dx ... <prefix>pz`` plus ``k``."""
        try:
            numbers = [float(values[f"{prefix}{key}"]) for key in WAVE_KEYS]
            k = float(values["k"]) if k is None else k
        except KeyError as e:
            raise ValidationError(f"Missing plane-wave key {e.args[0]!r}") from e
        except ValueError as e:
            raise ValidationError(f"Invalid plane-wave value - {e}") from e
        return cls(k, numbers[:3], numbers[3:])


@dataclass(frozen=True, eq=False)
class EMSample:
    """Field values at one point (vectors of shape (3,)) or at many ((n, 3))."""
    x: np.ndarray
    E: np.ndarray
    H: np.ndarray


def plane_wave_fields(w: PlaneWaveSpec, points) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised (E, H) of shape (n, 3) at ``points``."""
    points, _ = as_points(points)
    phase = 1j * w.k * np.exp(1j * w.k * (points @ w.d))
    E = phase[:, None] * w.amplitude_vector[None, :]
    H = phase[:, None] * np.cross(w.d, w.p)[None, :]
    return E, H


def eval_plane_wave(w: PlaneWaveSpec, x) -> EMSample:
    """
    Evaluate the plane wave.

    :param x: a point (3,) or points (n, 3)
    :return: EMSample with the same leading shape as ``x``
    """
    points, single = as_points(x)
    E, H = plane_wave_fields(w, points)
    if single:
        return EMSample(points[0], E[0], H[0])
    return EMSample(points, E, H)


def duality_swap(s: EMSample) -> EMSample:
    """(E, H) -> (H, -E)."""
    return EMSample(s.x, np.asarray(s.H).copy(), -np.asarray(s.E))


def polarization_constant(w: PlaneWaveSpec) -> float:
    return w.b


def tangential_lower_bound(w1: PlaneWaveSpec, w2: PlaneWaveSpec, nu) -> np.ndarray:
    """max_j |nu x ((d_j x p_j) x d_j)| for each unit vector ``nu``."""
    nu, _ = as_points(nu)
    first = row_norms(np.cross(nu, w1.amplitude_vector))
    second = row_norms(np.cross(nu, w2.amplitude_vector))
    return np.maximum(first, second)


@dataclass(frozen=True, eq=False)
class IndependenceEstimate:
    b0: float
    resolution: float
    minimizer: np.ndarray


def _tangent_patch(center: np.ndarray, spacing: float, n: int = 10) -> np.ndarray:
    helper = np.array([1.0, 0.0, 0.0]) if abs(center[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(center, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(center, e1)
    offsets = spacing * np.arange(-n, n + 1) / n * 2.0
    u, v = np.meshgrid(offsets, offsets, indexing="ij")
    patch = center + u.reshape(-1, 1) * e1 + v.reshape(-1, 1) * e2
    return patch / np.linalg.norm(patch, axis=1, keepdims=True)


def independence_constant_b0(w1: PlaneWaveSpec, w2: PlaneWaveSpec,
                             grid: int = config.B0_GRID_POINTS,
                             refinements: int = 2) -> IndependenceEstimate:
    """
    Minimise ``tangential_lower_bound`` over the unit sphere.

    An icosphere vertex grid with at least ``grid`` points is searched, then the
    running minimum is refined on tangent patches, each a tenth of the previous
    spacing. The objective is Lipschitz with constant max_j |(d_j x p_j) x d_j|,
    which turns the final spacing into the reported resolution.
    """
    if grid < 1000:
        raise ValidationError(f"b0 needs at least 1000 sphere points, got {grid}")
    lipschitz = max(w1.b, w2.b)
    if lipschitz == 0.0:
        raise ValidationError("Both plane waves have p parallel to d; b0 is undefined")

    directions = make_icosphere(1.0, icosphere_level_for(grid)).vertices
    values = tangential_lower_bound(w1, w2, directions)
    best = int(np.argmin(values))
    minimizer, b0 = directions[best], float(values[best])
    spacing = 4.0 * np.pi / np.sqrt(len(directions))
    for _ in range(refinements):
        patch = _tangent_patch(minimizer, spacing)
        values = tangential_lower_bound(w1, w2, patch)
        best = int(np.argmin(values))
        if values[best] < b0:
            minimizer, b0 = patch[best], float(values[best])
        spacing /= 10.0
    resolution = lipschitz * spacing
    logger.debug(f"b0 = {b0:.6g} at {minimizer} (resolution {resolution:.2e})")
    return IndependenceEstimate(b0, float(resolution), minimizer)
