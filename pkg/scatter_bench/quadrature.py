"""
Quadrature rules shared by the solver and the diagnostics.

Triangle rules are symmetric Gauss rules in barycentric coordinates with
weights normalised to sum to one (multiply by the triangle area). Sphere and
ball grids are tensor products of Gauss-Legendre nodes in cos(theta) and the
radius with a uniform trapezoidal rule in phi.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from scatter_bench.helpers import ValidationError


def _orbit3(a: float, b: float) -> np.ndarray:
    """All distinct permutations of the barycentric point (a, b, b)."""
    return np.array([[a, b, b], [b, a, b], [b, b, a]])


_CENTROID = np.array([[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]])

# points per rule -> (barycentric nodes, weights); every node lies strictly inside
TRIANGLE_RULES: Dict[int, Tuple[np.ndarray, np.ndarray]] = {
    3: (_orbit3(2.0 / 3.0, 1.0 / 6.0), np.full(3, 1.0 / 3.0)),
    4: (np.vstack([_CENTROID, _orbit3(0.6, 0.2)]),
        np.array([-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0])),
    6: (np.vstack([_orbit3(0.108103018168070, 0.445948490915965),
                   _orbit3(0.816847572980459, 0.091576213509771)]),
        np.concatenate([np.full(3, 0.223381589678011), np.full(3, 0.109951743655322)])),
    7: (np.vstack([_CENTROID,
                   _orbit3(0.059715871789770, 0.470142064105115),
                   _orbit3(0.797426985353087, 0.101286507323456)]),
        np.concatenate([[0.225], np.full(3, 0.132394152788506), np.full(3, 0.125939180544827)])),
}


def triangle_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Look up a triangle rule.

    :param order: number of points, one of 3, 4, 6, 7
    :return: (barycentric nodes (q, 3), weights (q,)) with weights summing to 1
    :raises ValidationError: for an unsupported order
    """
    if order not in TRIANGLE_RULES:
        raise ValidationError(
            f"Unsupported triangle quadrature order {order}; use one of {sorted(TRIANGLE_RULES)}")
    return TRIANGLE_RULES[order]


def triangle_nodes(corners: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map a rule onto a batch of triangles.

    :param corners: (m, 3, 3) triangle vertices
    :return: nodes (m, q, 3) and area-scaled weights (m, q)
    """
    bary, weights = triangle_rule(order)
    nodes = np.einsum("qi,mid->mqd", bary, corners)
    areas = 0.5 * np.linalg.norm(
        np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1)
    return nodes, areas[:, None] * weights[None, :]


@dataclass(frozen=True)
class SphereGrid:
    """Product grid on the unit sphere; ``weights`` sum to 4*pi."""
    directions: np.ndarray
    weights: np.ndarray
    theta: np.ndarray
    phi: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)

    def same_as(self, other: "SphereGrid") -> bool:
        return (self.directions.shape == other.directions.shape
                and np.array_equal(self.directions, other.directions)
                and np.array_equal(self.weights, other.weights))


def sphere_grid(n_theta: int, n_phi: int) -> SphereGrid:
    """Gauss-Legendre in cos(theta) times uniform phi; exact for harmonics of degree < min(2 n_theta, n_phi)."""
    if n_theta < 1 or n_phi < 1:
        raise ValidationError(f"Sphere grid needs positive sizes, got {n_theta}x{n_phi}")
    mu, w_mu = leggauss(n_theta)
    theta = np.arccos(mu)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    directions = np.stack([np.sin(tt) * np.cos(pp),
                           np.sin(tt) * np.sin(pp),
                           np.cos(tt)], axis=-1).reshape(-1, 3)
    weights = np.outer(w_mu, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return SphereGrid(directions, weights, tt.ravel(), pp.ravel())


@dataclass(frozen=True)
class BallGrid:
    points: np.ndarray
    weights: np.ndarray
    center: np.ndarray
    radius: float


def ball_grid(center, radius: float, order: Tuple[int, int, int]) -> BallGrid:
    """
    Tensor Gauss rule on the ball B_radius(center).

    :param order: (radial, polar, azimuthal) node counts
    """
    if radius <= 0:
        raise ValidationError(f"Ball radius must be positive, got {radius}")
    n_r, n_theta, n_phi = order
    x, w_x = leggauss(n_r)
    r = 0.5 * radius * (x + 1.0)
    w_r = 0.5 * radius * w_x * r ** 2
    sphere = sphere_grid(n_theta, n_phi)
    center = np.asarray(center, dtype=float)
    points = center + (r[:, None, None] * sphere.directions[None, :, :]).reshape(-1, 3)
    weights = np.outer(w_r, sphere.weights).ravel()
    return BallGrid(points, weights, center, float(radius))


def icosphere_level_for(points: int) -> int:
    """Smallest icosphere subdivision level with at least ``points`` vertices."""
    level = 0
    while 10 * 4 ** level + 2 < points:
        level += 1
    return level
