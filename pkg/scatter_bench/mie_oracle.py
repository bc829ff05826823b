"""
Exact series for plane-wave scattering by a perfectly conducting sphere
centred at the origin, used to validate the EFIE solver.

Coefficients follow the conducting limit of the classical sphere series:
a_n = psi_n'(x) / xi_n'(x), b_n = psi_n(x) / xi_n(x) with the
Riccati-Bessel functions psi_n = x j_n(x), xi_n = x h_n^(1)(x). Far fields
use the same exp(i k r) / r normalisation as the solver.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from scatter_bench import config
from scatter_bench.efie_solver import FarFieldPattern
from scatter_bench.helpers import ValidationError
from scatter_bench.incident_fields import PlaneWaveSpec
from scatter_bench.quadrature import SphereGrid

logger = logging.getLogger(__name__)


def spherical_jn_yn(n_max: int, x: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    j_n(x) and y_n(x) for n = 0..n_max.

    j_n comes from a downward ratio recurrence normalised by j_0 = sin x / x,
    y_n from the upward recurrence, which is stable for it.
    """
    if x <= 0:
        raise ValidationError(f"Bessel argument must be positive, got {x}")
    start = int(max(n_max, x)) + 20 + int(math.sqrt(max(n_max, x)) * 4)
    ratio = 0.0
    ratios = np.zeros(n_max + 1)
    for n in range(start, 0, -1):
        ratio = x / (2 * n + 1 - x * ratio)
        if n <= n_max:
            ratios[n] = ratio
    jn = np.zeros(n_max + 1)
    jn[0] = math.sin(x) / x
    for n in range(1, n_max + 1):
        jn[n] = ratios[n] * jn[n - 1]

    yn = np.zeros(n_max + 1)
    yn[0] = -math.cos(x) / x
    if n_max >= 1:
        yn[1] = -math.cos(x) / x ** 2 - math.sin(x) / x
    for n in range(2, n_max + 1):
        yn[n] = (2 * n - 1) / x * yn[n - 1] - yn[n - 2]
    return jn, yn


def truncation_order(ka: float) -> int:
    """max(ka + 10, Wiscombe's ka + 4 ka^(1/3) + 2), rounded up."""
    return int(math.ceil(max(ka + 10.0, ka + 4.0 * ka ** (1.0 / 3.0) + 2.0)))


@dataclass(frozen=True, eq=False)
class MieSolution:
    a: float
    k: float
    n_max: int
    an: np.ndarray
    bn: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1)


def mie_coefficients(a: float, k: float, n_max: Optional[int] = None) -> MieSolution:
    if not a > 0 or not k > 0:
        raise ValidationError(f"Sphere radius and wavenumber must be positive, got a={a}, k={k}")
    x = k * a
    if x > config.MIE_MAX_KA:
        raise ValidationError(f"ka={x:.6g} outside the supported range (<= {config.MIE_MAX_KA})")
    n_max = truncation_order(x) if n_max is None else int(n_max)
    if n_max < x + 10:
        raise ValidationError(f"Truncation order {n_max} below ka + 10 = {x + 10:.6g}")
    jn, yn = spherical_jn_yn(n_max, x)
    hn = jn + 1j * yn
    psi, xi = x * jn, x * hn
    n = np.arange(1, n_max + 1)
    dpsi = psi[:-1] - n * psi[1:] / x
    dxi = xi[:-1] - n * xi[1:] / x
    an = dpsi / dxi
    bn = psi[1:] / xi[1:]
    if not (np.all(np.isfinite(an)) and np.all(np.isfinite(bn))):
        raise ValidationError(f"Mie coefficients overflowed at ka={x}")
    return MieSolution(float(a), float(k), n_max, an, bn)


def angular_functions(n_max: int, mu: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """pi_n and tau_n, shape (n_max, len(mu)), by upward recurrence."""
    mu = np.asarray(mu, dtype=float)
    pi = np.zeros((n_max + 1, len(mu)))
    tau = np.zeros((n_max + 1, len(mu)))
    if n_max >= 1:
        pi[1] = 1.0
    for n in range(2, n_max + 1):
        pi[n] = (2 * n - 1) / (n - 1) * mu * pi[n - 1] - n / (n - 1) * pi[n - 2]
    for n in range(1, n_max + 1):
        tau[n] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return pi[1:], tau[1:]


def mie_amplitudes(solution: MieSolution, cos_theta) -> Tuple[np.ndarray, np.ndarray]:
    """Scattering amplitudes (S1, S2) at the given scattering-angle cosines."""
    pi, tau = angular_functions(solution.n_max, np.atleast_1d(cos_theta))
    n = solution.orders[:, None]
    factor = (2 * n + 1) / (n * (n + 1))
    S1 = np.sum(factor * (solution.an[:, None] * pi + solution.bn[:, None] * tau), axis=0)
    S2 = np.sum(factor * (solution.an[:, None] * tau + solution.bn[:, None] * pi), axis=0)
    return S1, S2


def _incidence_frame(w: PlaneWaveSpec) -> Tuple[np.ndarray, np.ndarray, float]:
    q = w.amplitude_vector
    size = float(np.linalg.norm(q))
    if size == 0.0:
        raise ValidationError("Mie far field needs a wave with p not parallel to d")
    e1 = q / size
    return e1, np.cross(w.d, e1), size


def _pec_far_field(a: float, w: PlaneWaveSpec, directions: np.ndarray,
                   n_max: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    solution = mie_coefficients(a, w.k, n_max)
    e1, e2, size = _incidence_frame(w)
    d = w.d
    mu = np.clip(directions @ d, -1.0, 1.0)
    S1, S2 = mie_amplitudes(solution, mu)
    phi = np.arctan2(directions @ e2, directions @ e1)
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - mu ** 2))
    theta_hat = (mu * np.cos(phi))[:, None] * e1 + (mu * np.sin(phi))[:, None] * e2 - sin_theta[:, None] * d
    phi_hat = -np.sin(phi)[:, None] * e1 + np.cos(phi)[:, None] * e2
    E_inf = -size * ((S2 * np.cos(phi))[:, None] * theta_hat - (S1 * np.sin(phi))[:, None] * phi_hat)
    H_inf = np.cross(directions, E_inf)
    return E_inf, H_inf


def mie_far_field(a: float, k: float, w: PlaneWaveSpec, grid: SphereGrid,
                  boundary: str = "pec", n_max: Optional[int] = None) -> FarFieldPattern:
    """
    Far-field pattern of a sphere of radius ``a``.

    ``boundary="pmc"`` solves the magnetic-wall sphere through the duality
    swap: the conducting problem with polarisation d x p has incident field
    (H, -E), and its far field (E', H') gives E = -H', H = E'.
    """
    if abs(w.k - k) > 1e-12 * k:
        raise ValidationError(f"Wave has k={w.k}, expected {k}")
    directions = grid.directions
    if boundary == "pec":
        E_inf, H_inf = _pec_far_field(a, w, directions, n_max)
    elif boundary == "pmc":
        dual = PlaneWaveSpec(w.k, w.d, np.cross(w.d, w.p))
        E_dual, H_dual = _pec_far_field(a, dual, directions, n_max)
        E_inf, H_inf = -H_dual, E_dual
    else:
        raise ValidationError(f"Unknown boundary {boundary!r}; use 'pec' or 'pmc'")
    return FarFieldPattern(grid, E_inf, H_inf)


def mie_cross_sections(a: float, k: float, n_max: Optional[int] = None) -> Tuple[float, float]:
    """(scattering, extinction) cross sections; equal for a lossless sphere."""
    solution = mie_coefficients(a, k, n_max)
    n = solution.orders
    scale = 2.0 * np.pi / k ** 2
    sigma_sca = scale * np.sum((2 * n + 1) * (np.abs(solution.an) ** 2 + np.abs(solution.bn) ** 2))
    sigma_ext = scale * np.sum((2 * n + 1) * np.real(solution.an + solution.bn))
    return float(sigma_sca), float(sigma_ext)


def monostatic_rcs(a: float, k: float, n_max: Optional[int] = None) -> float:
    """Backscattering cross section 4 pi |S1(pi)|^2 / k^2."""
    S1, _ = mie_amplitudes(mie_coefficients(a, k, n_max), [-1.0])
    return float(4.0 * np.pi * abs(S1[0]) ** 2 / k ** 2)


def relative_far_field_error(reference: FarFieldPattern, candidate: FarFieldPattern) -> float:
    """||E_ref - E||_{L2(S2)} / ||E_ref||_{L2(S2)} on a shared grid."""
    if not reference.grid.same_as(candidate.grid):
        raise ValidationError("Far-field patterns are sampled on different grids")
    weights = reference.grid.weights
    difference = np.sqrt(np.sum(weights * np.sum(np.abs(reference.E_inf - candidate.E_inf) ** 2, axis=1)))
    norm = reference.l2_norm("E")
    return float(difference / norm) if norm > 0 else float(difference)
