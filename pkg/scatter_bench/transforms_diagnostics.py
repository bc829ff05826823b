"""
Executable checks for the analytic machinery around the scattering problem:
changes of variables for curl-type fields, reflections of solutions, the
truncation operator, radiation-condition and Helmholtz residuals,
three-spheres exponents, L-infinity/L2 ratios and the logarithmic moduli.

Fields are callables mapping an (n, 3) array of points to (n, 3) values;
Maxwell evaluators map points to an (E, H) pair.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial.transform import Rotation

from scatter_bench import config
from scatter_bench.geometry import Plane
from scatter_bench.helpers import ValidationError, as_points, row_norms, write_csv
from scatter_bench.incident_fields import EMSample
from scatter_bench.quadrature import SphereGrid, ball_grid

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]
Evaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


# -- finite differences ---------------------------------------------------------------

def fd_jacobian(f: Field, points: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Jacobian D[n, i, j] = d f_i / d x_j."""
    columns = []
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        columns.append((f(points + step) - f(points - step)) / (2.0 * h))
    return np.stack(columns, axis=-1)


def curl_from_jacobian(D: np.ndarray) -> np.ndarray:
    return np.stack([D[:, 2, 1] - D[:, 1, 2],
                     D[:, 0, 2] - D[:, 2, 0],
                     D[:, 1, 0] - D[:, 0, 1]], axis=-1)


def fd_curl(f: Field, points: np.ndarray, h: float) -> np.ndarray:
    return curl_from_jacobian(fd_jacobian(f, points, h))


def fd_divergence(f: Field, points: np.ndarray, h: float) -> np.ndarray:
    return np.trace(fd_jacobian(f, points, h), axis1=1, axis2=2)


def fd_laplacian(f: Field, points: np.ndarray, h: float) -> np.ndarray:
    center = f(points)
    total = np.zeros_like(center)
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        total += (f(points + step) - 2.0 * center + f(points - step)) / h ** 2
    return total


# -- bi-Lipschitz maps ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BiLipschitzMap:
    """
    Invertible map T with optional analytic Jacobian. ``L`` bounds the
    Lipschitz constants of T and its inverse; ``orientation`` is the sign of det J.
    """
    forward: Field
    inverse: Field
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    L: float = 1.0
    orientation: int = 1
    fd_step: float = 1e-5

    def __call__(self, points) -> np.ndarray:
        return self.forward(as_points(points)[0])

    def jacobian_at(self, points) -> np.ndarray:
        points, _ = as_points(points)
        if self.jacobian is not None:
            return np.broadcast_to(self.jacobian(points), (len(points), 3, 3))
        return fd_jacobian(self.forward, points, self.fd_step)

    def inverse_residual(self, points) -> float:
        points, _ = as_points(points)
        return float(np.abs(self.forward(self.inverse(points)) - points).max())


def affine_map(A, b=(0.0, 0.0, 0.0)) -> BiLipschitzMap:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    det = np.linalg.det(A)
    if det == 0:
        raise ValidationError("Affine map matrix is singular")
    A_inv = np.linalg.inv(A)
    L = max(np.linalg.norm(A, 2), np.linalg.norm(A_inv, 2))
    return BiLipschitzMap(lambda x: x @ A.T + b, lambda y: (y - b) @ A_inv.T,
                          lambda x: np.broadcast_to(A, (len(x), 3, 3)), float(L), int(np.sign(det)))


def rotation_map(rotvec) -> BiLipschitzMap:
    """Rigid rotation given as a rotation vector (axis times angle in radians)."""
    R = Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix()
    return BiLipschitzMap(lambda x: x @ R.T, lambda y: y @ R,
                          lambda x: np.broadcast_to(R, (len(x), 3, 3)), 1.0, 1)


def reflection_map(plane: Plane) -> BiLipschitzMap:
    J = plane.matrix
    return BiLipschitzMap(plane.reflect, plane.reflect,
                          lambda x: np.broadcast_to(J, (len(x), 3, 3)), 1.0, -1)


def sine_shear_map(amplitude: float) -> BiLipschitzMap:
    """T(x) = x + a sin(x_2) e_1, inverted exactly since T keeps x_2."""
    if abs(amplitude) >= 1:
        raise ValidationError(f"Shear amplitude must satisfy |a| < 1, got {amplitude}")

    def forward(x):
        y = np.array(x, dtype=float)
        y[:, 0] += amplitude * np.sin(x[:, 1])
        return y

    def inverse(y):
        x = np.array(y, dtype=float)
        x[:, 0] -= amplitude * np.sin(y[:, 1])
        return x

    def jacobian(x):
        J = np.broadcast_to(np.eye(3), (len(x), 3, 3)).copy()
        J[:, 0, 1] = amplitude * np.cos(x[:, 1])
        return J

    L = 1.0 + abs(amplitude)
    return BiLipschitzMap(forward, inverse, jacobian, L, 1)


def pullback_hcurl(u: Field, T: BiLipschitzMap) -> Field:
    """v(x) = J(x)^T u(T(x))."""
    def v(x):
        x = np.asarray(x, dtype=float)
        return np.einsum("nji,nj->ni", T.jacobian_at(x), u(T.forward(x)))
    return v


def _random_points(n: int, radius: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, size=(n, 3))


def curl_transform_check(u: Field, T: BiLipschitzMap, h_fd: float,
                         points: Optional[np.ndarray] = None,
                         curl_u: Optional[Field] = None,
                         n_points: int = 32, seed: int = 0) -> float:
    """
    Max relative residual of curl u(y) = (J / det J) curl v (x), y = T(x), v the pullback.

    Left side analytic when ``curl_u`` is given, otherwise central differences.

    :raises ValidationError: if det J changes sign over the sample points
    """
    if h_fd <= 0:
        raise ValidationError(f"Finite-difference step must be positive, got {h_fd}")
    y = _random_points(n_points, 1.0, seed) if points is None else as_points(points)[0]
    x = T.inverse(y)
    J = T.jacobian_at(x)
    det = np.linalg.det(J)
    if np.any(det == 0) or np.any(np.sign(det) != np.sign(det[0])):
        raise ValidationError("Jacobian determinant changes sign over the sample points")
    lhs = curl_u(y) if curl_u is not None else fd_curl(u, y, h_fd)
    rhs = np.einsum("nij,nj->ni", J, fd_curl(pullback_hcurl(u, T), x, h_fd)) / det[:, None]
    scale = row_norms(lhs).max()
    residual = row_norms(lhs - rhs).max()
    return float(residual / scale) if scale > 0 else float(residual)


def pushforward_coefficient(a, T: BiLipschitzMap) -> Callable[[np.ndarray], np.ndarray]:
    """
    T_*(a)(x) = |det J| J^{-1} a(T(x)) J^{-T}, symmetrised.

    :param a: constant (3, 3) matrix or callable returning (n, 3, 3)
    """
    def pushed(x):
        x, _ = as_points(x)
        J = T.jacobian_at(x)
        values = a(T.forward(x)) if callable(a) else np.broadcast_to(np.asarray(a, dtype=float), (len(x), 3, 3))
        J_inv = np.linalg.inv(J)
        out = np.abs(np.linalg.det(J))[:, None, None] * (J_inv @ values @ np.swapaxes(J_inv, 1, 2))
        return 0.5 * (out + np.swapaxes(out, 1, 2))
    return pushed


# -- reflections ------------------------------------------------------------------------

def reflect_solution(sample: EMSample, plane: Plane) -> EMSample:
    """(E, H) at x -> (-J E, J H) at T(x), J = I - 2 nu nu^T."""
    J = plane.matrix
    return EMSample(plane.reflect(np.asarray(sample.x, dtype=float)),
                    -(np.asarray(sample.E) @ J.T), np.asarray(sample.H) @ J.T)


def reflection_symmetry_residual(field: Evaluator, plane: Plane, points, parity: int = 1) -> float:
    """
    Max deviation of (E, H)(T x) from parity * reflect_solution((E, H)(x)),
    relative to the largest field value. ``parity`` is -1 for a symmetric
    scatterer lit with polarisation inside the plane, +1 for polarisation
    along the normal.
    """
    if parity not in (-1, 1):
        raise ValidationError(f"parity must be +1 or -1, got {parity}")
    points, _ = as_points(points)
    E, H = field(points)
    mirrored = plane.reflect(points)
    E_m, H_m = field(mirrored)
    expected = reflect_solution(EMSample(points, E, H), plane)
    deviation = max(row_norms(E_m - parity * expected.E).max(), row_norms(H_m - parity * expected.H).max())
    scale = max(row_norms(E).max(), row_norms(H).max())
    return float(deviation / scale) if scale > 0 else float(deviation)


# -- truncation ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FieldOnGrid:
    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 4 or values.shape[-1] != 3:
            raise ValidationError(f"Grid values must have shape (nx, ny, nz, 3), got {values.shape}")
        if not self.spacing > 0:
            raise ValidationError(f"Grid spacing must be positive, got {self.spacing}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Grid values must be finite")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))

    @classmethod
    def sample(cls, f: Field, lower, upper, spacing: float) -> "FieldOnGrid":
        axes = [np.arange(lo, hi + 0.5 * spacing, spacing) for lo, hi in zip(lower, upper)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        values = f(mesh.reshape(-1, 3)).reshape(mesh.shape)
        return cls(np.asarray(lower, dtype=float), float(spacing), values)

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=-1))

    def curl(self) -> np.ndarray:
        """Central-difference curl on interior nodes, shape (nx-2, ny-2, nz-2, 3)."""
        v, h = self.values, self.spacing

        def d(component, axis):
            forward = [slice(1, -1)] * 3
            backward = [slice(1, -1)] * 3
            forward[axis] = slice(2, None)
            backward[axis] = slice(None, -2)
            return (v[tuple(forward) + (component,)] - v[tuple(backward) + (component,)]) / (2.0 * h)

        return np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)], axis=-1)


def truncate_field(v: FieldOnGrid, M: float) -> FieldOnGrid:
    """F_M(v) = v where |v| <= M, M v / |v| elsewhere."""
    if not M > 0:
        raise ValidationError(f"Truncation level must be positive, got {M}")
    norms = v.norms()
    scale = np.where(norms > M, M / np.where(norms > M, norms, 1.0), 1.0)
    values = np.where((norms > M)[..., None], v.values * scale[..., None], v.values)
    return FieldOnGrid(v.origin, v.spacing, values)


@dataclass(frozen=True)
class TruncationCheck:
    identity_residual: float
    zero_residual: float
    identity_points: int
    zero_points: int


def truncation_curl_check(v: FieldOnGrid, M: float, tau: float) -> TruncationCheck:
    """
    Compare discrete curls of v and F_M(v) on nodes whose whole stencil has
    |v| < M - tau (curls must agree) or |v| > M + tau (curl of F_M(v) is
    expected to vanish, which holds for fields of locally constant direction).
    Nodes within tau of the level set |v| = M are excluded.
    """
    if tau < 0:
        raise ValidationError(f"Stencil margin must be non-negative, got {tau}")
    truncated = truncate_field(v, M)
    norms = v.norms()
    footprint = ndimage.generate_binary_structure(3, 1)
    stencil_max = ndimage.maximum_filter(norms, footprint=footprint, mode="nearest")[1:-1, 1:-1, 1:-1]
    stencil_min = ndimage.minimum_filter(norms, footprint=footprint, mode="nearest")[1:-1, 1:-1, 1:-1]
    below = stencil_max < M - tau
    above = stencil_min > M + tau
    curl_v, curl_t = v.curl(), truncated.curl()
    difference = np.sqrt(np.sum(np.abs(curl_t - curl_v) ** 2, axis=-1))
    size = np.sqrt(np.sum(np.abs(curl_t) ** 2, axis=-1))
    identity = float(difference[below].max()) if below.any() else 0.0
    zero = float(size[above].max()) if above.any() else 0.0
    return TruncationCheck(identity, zero, int(below.sum()), int(above.sum()))


# -- radiation conditions ------------------------------------------------------------------

@dataclass(frozen=True)
class SilverMullerReport:
    radius: float
    residual: float
    dual_residual: float
    unweighted: float


def silver_muller_residual(evaluator: Evaluator, r: float, grid: SphereGrid) -> SilverMullerReport:
    """
    Max over the grid of r |x cross H + E| and of the dual r |x cross E - H|,
    sampled at r x for every grid direction x.
    """
    if not r > 0:
        raise ValidationError(f"Radius must be positive, got {r}")
    directions = grid.directions
    E, H = evaluator(r * directions)
    plain = row_norms(np.cross(directions, H) + E)
    dual = row_norms(np.cross(directions, E) - H)
    return SilverMullerReport(float(r), float(r * plain.max()), float(r * dual.max()), float(plain.max()))


def silver_muller_decay(evaluator: Evaluator, r: float, grid: SphereGrid) -> Tuple[SilverMullerReport, SilverMullerReport, float]:
    """
    Reports at r and 2r and the decay ratio of the unweighted residual
    |x cross H + E|, which falls like r^-2 for an outgoing field (ratio ~4).
    """
    near = silver_muller_residual(evaluator, r, grid)
    far = silver_muller_residual(evaluator, 2.0 * r, grid)
    ratio = near.unweighted / far.unweighted if far.unweighted > 0 else math.inf
    return near, far, float(ratio)


def sommerfeld_residual(u: Callable[[np.ndarray], np.ndarray], points, k: float, h_fd: float) -> np.ndarray:
    """r (du/dr - i k u) per point and component; u maps (n, 3) to (n,) or (n, c)."""
    points, _ = as_points(points)
    r = np.linalg.norm(points, axis=1)
    radial = points / r[:, None]
    derivative = (u(points + h_fd * radial) - u(points - h_fd * radial)) / (2.0 * h_fd)
    values = u(points)
    if values.ndim == 2:
        r = r[:, None]
    return r * (derivative - 1j * k * values)


@dataclass(frozen=True)
class HelmholtzReport:
    vector_helmholtz: float
    divergence: float
    sommerfeld: float


def helmholtz_link_residual(evaluator: Evaluator, points, k: float, h_fd: float,
                            use: str = "E") -> HelmholtzReport:
    """
    Finite-difference residuals of Delta F + k^2 F (over k^2 max|F|), div F
    (over k max|F|) and the largest per-component Sommerfeld residual, for
    F = E or H of the evaluator.
    """
    points, _ = as_points(points)
    index = 0 if use == "E" else 1

    def component(x):
        return evaluator(x)[index]

    values = component(points)
    scale = row_norms(values).max()
    if scale == 0:
        return HelmholtzReport(0.0, 0.0, 0.0)
    helmholtz = row_norms(fd_laplacian(component, points, h_fd) + k ** 2 * values).max() / (k ** 2 * scale)
    divergence = np.abs(fd_divergence(component, points, h_fd)).max() / (k * scale)
    sommerfeld = np.abs(sommerfeld_residual(component, points, k, h_fd)).max()
    return HelmholtzReport(float(helmholtz), float(divergence), float(sommerfeld))


def decay_constant(evaluator: Evaluator, radii: Sequence[float], grid: SphereGrid) -> float:
    """max |x| (|E_s(x)| + |H_s(x)|) over spheres of the given radii."""
    best = 0.0
    for r in radii:
        E, H = evaluator(r * grid.directions)
        best = max(best, float(r * (row_norms(E) + row_norms(H)).max()))
    return best


# -- three spheres and L-infinity / L2 -------------------------------------------------------

def ball_l2_norm(u: Callable[[np.ndarray], np.ndarray], center, radius: float,
                 order: Tuple[int, int, int] = config.BALL_ORDER) -> float:
    ball = ball_grid(center, radius, order)
    values = np.asarray(u(ball.points))
    squared = np.abs(values) ** 2
    if squared.ndim == 2:
        squared = squared.sum(axis=1)
    return float(np.sqrt(np.sum(ball.weights * squared)))


@dataclass(frozen=True)
class ThreeSpheresResult:
    beta: float
    norms: Tuple[float, float, float]
    ordered: bool


def three_spheres_exponent(u, rho1: float, rho: float, rho2: float, center=(0.0, 0.0, 0.0),
                           order: Tuple[int, int, int] = config.BALL_ORDER) -> ThreeSpheresResult:
    """
    beta = (log N2 - log N) / (log N2 - log N1) for the L2 norms N1, N, N2 on
    the balls of radii rho1 < rho < rho2.
    """
    if not 0 < rho1 < rho < rho2:
        raise ValidationError(f"Radii must satisfy 0 < rho1 < rho < rho2, got {rho1}, {rho}, {rho2}")
    n1, n, n2 = (ball_l2_norm(u, center, radius, order) for radius in (rho1, rho, rho2))
    if min(n1, n, n2) <= 0 or n2 == n1:
        raise ValidationError("Three-spheres exponent needs nonzero, distinct ball norms")
    beta = (math.log(n2) - math.log(n)) / (math.log(n2) - math.log(n1))
    ordered = n1 <= n <= n2
    if ordered and not 0.0 <= beta <= 1.0:
        logger.warning(f"Three-spheres exponent {beta:.6g} outside [0, 1]")
    return ThreeSpheresResult(float(beta), (n1, n, n2), ordered)


def sup_ratio(u, rho: float, s: float, center=(0.0, 0.0, 0.0), lattice: int = 21,
              order: Tuple[int, int, int] = config.BALL_ORDER) -> float:
    """
    rho^(3/2) sup_{B_{s rho}} |u| / ||u||_{L2(B_rho)}; the sup is taken over a
    cubic lattice clipped to the ball plus the six axis points on its sphere.
    """
    if not 0 < s < 1:
        raise ValidationError(f"s must lie in (0, 1), got {s}")
    center = np.asarray(center, dtype=float)
    inner = s * rho
    axis = np.linspace(-inner, inner, lattice)
    cube = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    cube = cube[np.linalg.norm(cube, axis=1) <= inner]
    poles = inner * np.vstack([np.eye(3), -np.eye(3)])
    values = np.abs(np.asarray(u(center + np.vstack([cube, poles]))))
    if values.ndim == 2:
        values = np.sqrt(np.sum(values ** 2, axis=1))
    return float(rho ** 1.5 * values.max() / ball_l2_norm(u, center, rho, order))


# -- moduli -----------------------------------------------------------------------------

def eta(s):
    """exp(-sqrt(log(-log s))) for 0 < s < 1/e."""
    values = np.asarray(s, dtype=float)
    if np.any(values <= 0) or np.any(values >= math.exp(-1.0)):
        raise ValidationError("eta is defined for 0 < s < 1/e")
    result = np.exp(-np.sqrt(np.log(-np.log(values))))
    return float(result) if result.ndim == 0 else result


def eta_inverse(y):
    """Inverse of eta: exp(-exp((log y)^2)) for 0 < y < 1."""
    values = np.asarray(y, dtype=float)
    if np.any(values <= 0) or np.any(values >= 1):
        raise ValidationError("eta_inverse is defined for 0 < y < 1")
    result = np.exp(-np.exp(np.log(values) ** 2))
    return float(result) if result.ndim == 0 else result


def eta1(eps0, C1: float):
    """exp(-C1 sqrt(-log eps0)) for 0 < eps0 < 1, C1 > 0."""
    values = np.asarray(eps0, dtype=float)
    if not C1 > 0:
        raise ValidationError(f"C1 must be positive, got {C1}")
    if np.any(values <= 0) or np.any(values >= 1):
        raise ValidationError("eta1 is defined for 0 < eps0 < 1")
    result = np.exp(-C1 * np.sqrt(-np.log(values)))
    return float(result) if result.ndim == 0 else result


def epsilon_hat(h: float, C: float, R0: float) -> float:
    """min{1/(2e), eta^-1((h / (2 e R0))^(1/C))}, the error level below which d <= 2 e R0 eta^C."""
    if not (h > 0 and C > 0 and R0 > 0):
        raise ValidationError(f"epsilon_hat needs positive h, C, R0, got {h}, {C}, {R0}")
    ratio = (h / (2.0 * math.e * R0)) ** (1.0 / C)
    if ratio >= 1.0:
        return 1.0 / (2.0 * math.e)
    return min(1.0 / (2.0 * math.e), eta_inverse(ratio))


def realized_bridge_constant(eps: float, eps0: float) -> float:
    """C1 for which eps = eta1(eps0, C1)."""
    if not (0 < eps < 1 and 0 < eps0 < 1):
        raise ValidationError(f"Errors must lie in (0, 1), got eps={eps}, eps0={eps0}")
    return float(-math.log(eps) / math.sqrt(-math.log(eps0)))


# -- reporting --------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticResult:
    check_name: str
    parameters: Dict[str, float]
    residual: float
    threshold: float
    advisory: bool = False

    @property
    def status(self) -> str:
        if self.advisory:
            return "advisory"
        return "pass" if self.residual <= self.threshold else "fail"


def write_diagnostics_csv(results: Iterable[DiagnosticResult], path) -> Path:
    rows = []
    for result in results:
        parameters = ";".join(f"{key}={value}" for key, value in sorted(result.parameters.items()))
        rows.append((result.check_name, parameters, result.residual, result.threshold, result.status))
    return write_csv(path, ("check_name", "parameters", "residual", "threshold", "status"), rows)
