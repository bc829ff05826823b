"""
Electric field integral equation on triangle meshes.

Unknowns are RWG edge currents. The Galerkin matrix uses the mixed-potential
form with kernel G(R) = exp(i k R) / (4 pi R); triangle pairs closer than
``config.NEAR_FIELD_FACTOR`` diameters have their 1/R part integrated in
closed form and only the smooth remainder handled by Gauss rules. The same
split is used for fields evaluated near the surface.

Scattered fields from a current J with surface divergence div J:

    E = i k int G J + (i / k) grad int G div J
    H = int grad_x G x J
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.linalg import lapack
from scipy.sparse import csr_matrix

from scatter_bench import config
from scatter_bench.geometry import TriangleMesh, point_mesh_distance
from scatter_bench.helpers import (SolverError, ValidationError, as_points,
                                   row_norms, write_csv)
from scatter_bench.incident_fields import EMSample, PlaneWaveSpec, plane_wave_fields
from scatter_bench.quadrature import SphereGrid, triangle_nodes, triangle_rule

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi

# barycentric sample points for the boundary residual, none of them a quadrature node
RESIDUAL_SAMPLES = np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5],
                             [0.7, 0.15, 0.15], [0.15, 0.7, 0.15], [0.15, 0.15, 0.7]])


@dataclass(frozen=True, eq=False)
class RWGBasis:
    """
    One basis function per interior edge. On its plus triangle the function is
    l / (2 A) (r - v_free), on its minus triangle -l / (2 A) (r - v_free).
    """
    mesh: TriangleMesh
    edges: np.ndarray
    lengths: np.ndarray
    plus_slot: np.ndarray
    minus_slot: np.ndarray
    corner_map: csr_matrix = field(repr=False)

    @property
    def n_dof(self) -> int:
        return len(self.edges)

    @property
    def plus_triangle(self) -> np.ndarray:
        return self.plus_slot // 3

    @property
    def minus_triangle(self) -> np.ndarray:
        return self.minus_slot // 3

    def corner_coefficients(self, coefficients: np.ndarray) -> np.ndarray:
        """(m, 3) weights a_ti so that the current on triangle t is sum_i a_ti (r - v_ti)."""
        return (self.corner_map.T @ np.asarray(coefficients)).reshape(-1, 3)


def build_rwg(mesh: TriangleMesh) -> RWGBasis:
    """
    Enumerate interior edges in sorted vertex-pair order.

    :raises ValidationError: if the mesh has no interior edge
    """
    plus_slot, minus_slot = mesh.interior_edge_slots
    if len(plus_slot) == 0:
        raise ValidationError("Mesh has no interior edges; no RWG basis function exists")
    edges = mesh.edges[mesh.edge_count == 2]
    lengths = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
    n_dof = len(edges)
    areas = mesh.areas
    rows = np.concatenate([np.arange(n_dof), np.arange(n_dof)])
    cols = np.concatenate([plus_slot, minus_slot])
    values = np.concatenate([lengths / (2.0 * areas[plus_slot // 3]),
                             -lengths / (2.0 * areas[minus_slot // 3])])
    corner_map = csr_matrix((values, (rows, cols)), shape=(n_dof, 3 * mesh.n_triangles))
    logger.debug(f"RWG basis: {n_dof} functions on {mesh.n_triangles} triangles")
    return RWGBasis(mesh, edges, lengths, plus_slot, minus_slot, corner_map)


# -- closed-form potential integrals ----------------------------------------------------

def potential_integrals(x: np.ndarray, corners: np.ndarray):
    """
    Integrals of 1/R, R = |x - y|, over flat triangles.

    :param x: (P, 3) observation points
    :param corners: (P, 3, 3) triangle per point
    :return: (I1, ivec, grad) where I1 = int 1/R, ivec = int (y - x)/R and
             grad = grad_x int 1/R; shapes (P,), (P, 3), (P, 3)
    """
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    normal = cross / np.linalg.norm(cross, axis=1, keepdims=True)
    height = np.sum((x - corners[:, 0]) * normal, axis=1)
    foot = x - height[:, None] * normal
    abs_height = np.abs(height)

    I1 = np.zeros(len(x))
    irho = np.zeros_like(x)
    grad = np.zeros_like(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(3):
            a, b = corners[:, i], corners[:, (i + 1) % 3]
            edge = b - a
            length = np.linalg.norm(edge, axis=1)
            along = edge / length[:, None]
            outward = np.cross(along, normal)
            t = np.sum((a - foot) * outward, axis=1)
            l_plus = np.sum((b - foot) * along, axis=1)
            l_minus = np.sum((a - foot) * along, axis=1)
            r_plus = np.linalg.norm(b - x, axis=1)
            r_minus = np.linalg.norm(a - x, axis=1)
            r0_sq = t ** 2 + height ** 2
            on_line = r0_sq <= (1e-12 * length) ** 2
            f2 = np.where(l_plus + l_minus >= 0,
                          np.log((r_plus + l_plus) / (r_minus + l_minus)),
                          np.log((r_minus - l_minus) / (r_plus - l_plus)))
            f2 = np.where(on_line, 0.0, f2)
            beta = (np.arctan(t * l_plus / (r0_sq + abs_height * r_plus))
                    - np.arctan(t * l_minus / (r0_sq + abs_height * r_minus)))
            beta = np.where(on_line, 0.0, beta)
            I1 += t * f2 - abs_height * beta
            irho += 0.5 * outward * (r0_sq * f2 + l_plus * r_plus - l_minus * r_minus)[:, None]
            grad -= outward * f2[:, None]

    va, vb, vc = (corners[:, i] - x for i in range(3))
    la, lb, lc = (np.linalg.norm(v, axis=1) for v in (va, vb, vc))
    numerator = np.sum(va * np.cross(vb, vc), axis=1)
    denominator = (la * lb * lc + np.sum(va * vb, 1) * lc
                   + np.sum(vb * vc, 1) * la + np.sum(vc * va, 1) * lb)
    grad += normal * (2.0 * np.arctan2(numerator, denominator))[:, None]
    ivec = irho - (height * I1)[:, None] * normal
    return I1, ivec, grad


def _kernel(k: float, r: np.ndarray, smooth: bool = False) -> np.ndarray:
    if smooth:
        # (exp(ikR) - 1) / (4 pi R), finite at R = 0
        return (1j * k / FOUR_PI) * np.exp(0.5j * k * r) * np.sinc(k * r / (2.0 * np.pi))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.exp(1j * k * r) / (FOUR_PI * r)


# -- assembly -------------------------------------------------------------------------

@dataclass(eq=False)
class EFIESystem:
    basis: RWGBasis
    k: float
    quad_order: int
    matrix: np.ndarray
    _lu: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)
    condition: Optional[float] = None
    extraction_asymmetry: float = 0.0

    def rhs(self, w: PlaneWaveSpec) -> np.ndarray:
        """V_m = -int f_m . E_inc over the support of f_m."""
        if abs(w.k - self.k) > 1e-12 * self.k:
            raise ValidationError(f"Wave has k={w.k} but the system was assembled for k={self.k}")
        mesh = self.basis.mesh
        nodes, weights = triangle_nodes(mesh.corners, self.quad_order)
        E, _ = plane_wave_fields(w, nodes.reshape(-1, 3))
        E = E.reshape(nodes.shape)
        offsets = nodes[:, :, None, :] - mesh.corners[:, None, :, :]
        tested = np.einsum("mq,mqid,mqd->mi", weights, offsets, E)
        return -(self.basis.corner_map @ tested.ravel())

    def factorize(self) -> None:
        if self._lu is not None:
            return
        lu, piv = scipy.linalg.lu_factor(self.matrix, check_finite=True)
        if np.any(np.diag(lu) == 0):
            raise SolverError("EFIE matrix is exactly singular", condition=np.inf)
        anorm = np.linalg.norm(self.matrix, 1)
        rcond, info = lapack.zgecon(lu, anorm, norm="1")
        condition = np.inf if rcond == 0 else 1.0 / rcond
        self.condition = float(condition)
        if condition > config.CONDITION_LIMIT:
            raise SolverError(
                f"EFIE matrix is ill-conditioned (condition estimate {condition:.3e}); "
                f"k={self.k} may be close to an interior resonance", condition=float(condition))
        if condition > 1e-3 * config.CONDITION_LIMIT:
            logger.warning(f"EFIE condition estimate {condition:.3e} is close to the limit")
        self._lu = (lu, piv)

    def solve(self, w: PlaneWaveSpec) -> "SurfaceCurrent":
        self.factorize()
        b = self.rhs(w)
        coefficients = scipy.linalg.lu_solve(self._lu, b)
        norm_b = np.linalg.norm(b)
        residual = 0.0 if norm_b == 0 else float(
            np.linalg.norm(self.matrix @ coefficients - b) / norm_b)
        if residual > config.RESIDUAL_TARGET:
            logger.warning(f"Solve residual {residual:.3e} above target {config.RESIDUAL_TARGET:.0e}")
        logger.info(f"Solved {self.basis.n_dof} unknowns, relative residual {residual:.3e}")
        return SurfaceCurrent(self.basis, self.k, coefficients, w, residual)


def _to_edges(B, slots: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Map (rows, 3, triangles, 3) corner-function blocks of a row chunk to edge unknowns."""
    rows = local.shape[0]
    local = local.transpose(0, 2, 1, 3).reshape(3 * rows, -1)
    return B[:, slots] @ (B @ local.T).T


def _near_pairs(centroids_a, diam_a, centroids_b, diam_b) -> np.ndarray:
    gap = np.linalg.norm(centroids_a[:, None, :] - centroids_b[None, :, :], axis=2)
    return gap < config.NEAR_FIELD_FACTOR * np.maximum(diam_a[:, None], diam_b[None, :])


def assemble_efie(basis: RWGBasis, k: float, quad: int = config.DEFAULT_QUAD_ORDER) -> EFIESystem:
    """
    Build the Galerkin impedance matrix.

    Z_mn = i k <f_m, G f_n> - (i / k) <div f_m, G div f_n>. Work is done per
    triangle pair on the corner functions (r - v_i), whose divergence is 2,
    and mapped to edges with the sparse corner map.
    """
    if not k > 0:
        raise ValidationError(f"Wavenumber must be positive, got k={k}")
    triangle_rule(quad)
    mesh = basis.mesh
    corners = mesh.corners
    m = mesh.n_triangles
    nodes, weights = triangle_nodes(corners, quad)
    q = nodes.shape[1]
    diam = mesh.max_edge_lengths
    centroids = mesh.centroids
    B = basis.corner_map
    Z = np.zeros((basis.n_dof, basis.n_dof), dtype=complex)
    # static part of the near-pair kernel, integrated analytically over the column triangle only
    correction = np.zeros_like(Z)

    rows_per_chunk = max(1, config.ASSEMBLY_CHUNK_ENTRIES // (m * q * q))
    for start in range(0, m, rows_per_chunk):
        rows = np.arange(start, min(m, start + rows_per_chunk))
        X, WX, VX = nodes[rows], weights[rows], corners[rows]
        near = _near_pairs(centroids[rows], diam[rows], centroids, diam)

        R = np.linalg.norm(X[:, :, None, None, :] - nodes[None, None, :, :, :], axis=-1)
        kernel = np.where(near[:, None, :, None], _kernel(k, R, smooth=True), _kernel(k, R))
        WG = WX[:, :, None, None] * weights[None, None, :, :] * kernel

        S0 = WG.sum(axis=(1, 3))
        Sx = np.einsum("taSb,tad->tSd", WG, X, optimize=True)
        Sy = np.einsum("taSb,Sbd->tSd", WG, nodes, optimize=True)
        Sxy = np.einsum("taSb,tad,Sbd->tS", WG, X, nodes, optimize=True)
        vector = (Sxy[:, :, None, None]
                  - np.einsum("tSd,Sjd->tSj", Sx, corners)[:, :, None, :]
                  - np.einsum("tSd,tid->tSi", Sy, VX)[:, :, :, None]
                  + np.einsum("tid,Sjd->tSij", VX, corners) * S0[:, :, None, None])
        scalar = np.broadcast_to(S0[:, :, None, None], vector.shape).copy()
        slots = np.arange(3 * rows[0], 3 * (rows[-1] + 1))
        Z += _to_edges(B, slots, 1j * k * vector - (4.0j / k) * scalar)

        ti, si = np.nonzero(near)
        if len(ti):
            points = X[ti].reshape(-1, 3)
            I1, ivec, _ = potential_integrals(points, np.repeat(corners[si], q, axis=0))
            I1, ivec = I1.reshape(-1, q), ivec.reshape(-1, q, 3)
            w_near = WX[ti] / FOUR_PI
            to_row = X[ti][:, :, None, :] - VX[ti][:, None, :, :]
            to_col = X[ti][:, :, None, :] - corners[si][:, None, :, :]
            static_vector = (np.einsum("nq,nqid,nqd->ni", w_near, to_row, ivec)[:, :, None]
                             + np.einsum("nq,nqid,nqjd->nij", w_near * I1, to_row, to_col))
            static_scalar = np.einsum("nq->n", w_near * I1)[:, None, None]
            local = np.zeros_like(vector)
            local[ti, si] = 1j * k * static_vector - (4.0j / k) * static_scalar
            correction += _to_edges(B, slots, local)

    Z += 0.5 * (correction + correction.T)
    extraction_asymmetry = float(np.abs(correction - correction.T).max()) / max(float(np.abs(Z).max()), 1e-300)
    if extraction_asymmetry > config.EXTRACTION_ASYMMETRY_LIMIT:
        logger.warning(f"One-sided singularity extraction differs from its transpose by "
                       f"{extraction_asymmetry:.3e} relative; the mesh may be too coarse for the {q}-point rule")
    logger.info(f"Assembled EFIE matrix: {basis.n_dof} unknowns, k={k}, {q}-point rule, "
                f"extraction asymmetry {extraction_asymmetry:.3e}")
    return EFIESystem(basis, float(k), int(quad), Z, extraction_asymmetry=extraction_asymmetry)


def solve_current(system: EFIESystem, w: PlaneWaveSpec) -> "SurfaceCurrent":
    return system.solve(w)


# -- currents and fields --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FarFieldPattern:
    grid: SphereGrid
    E_inf: np.ndarray
    H_inf: np.ndarray

    def identity_errors(self) -> Tuple[float, float]:
        """(max |x.E|, max |H - x cross E|), both over max |E|."""
        scale = row_norms(self.E_inf).max()
        if scale == 0:
            return 0.0, 0.0
        directions = self.grid.directions
        radial = np.abs(np.sum(directions * self.E_inf, axis=1)).max()
        relation = row_norms(self.H_inf - np.cross(directions, self.E_inf)).max()
        return float(radial / scale), float(relation / scale)

    def l2_norm(self, field: str = "E") -> float:
        values = self.E_inf if field == "E" else self.H_inf
        return float(np.sqrt(np.sum(self.grid.weights * row_norms(values) ** 2)))

    def scattered_power(self) -> float:
        return self.l2_norm("E") ** 2


@dataclass(frozen=True, eq=False)
class SurfaceCurrent:
    basis: RWGBasis
    k: float
    coefficients: np.ndarray
    wave: Optional[PlaneWaveSpec] = None
    residual: float = 0.0

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        if len(coefficients) != self.basis.n_dof:
            raise ValidationError(
                f"Current has {len(coefficients)} coefficients for {self.basis.n_dof} basis functions")
        if not np.all(np.isfinite(coefficients)):
            raise SolverError("Current coefficients are not finite")
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def linear_parts(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per triangle (alpha, beta) with J(y) = alpha y - beta and div J = 2 alpha."""
        a = self.basis.corner_coefficients(self.coefficients)
        alpha = a.sum(axis=1)
        beta = np.einsum("mi,mid->md", a, self.basis.mesh.corners)
        return alpha, beta


def _scattered_fields(c: SurfaceCurrent, points: np.ndarray, quad: int = config.DEFAULT_QUAD_ORDER):
    """Scattered (E, H) at ``points`` without a clearance check."""
    mesh = c.basis.mesh
    k = c.k
    alpha, beta = c.linear_parts
    corners = mesh.corners
    nodes, weights = triangle_nodes(corners, quad)
    q = nodes.shape[1]
    m = mesh.n_triangles
    current = alpha[:, None, None] * nodes - beta[:, None, :]
    charge = 2.0 * alpha
    diam = mesh.max_edge_lengths
    centroids = mesh.centroids

    E = np.zeros(points.shape, dtype=complex)
    H = np.zeros(points.shape, dtype=complex)
    per_chunk = max(1, config.ASSEMBLY_CHUNK_ENTRIES // (m * q))
    for start in range(0, len(points), per_chunk):
        x = points[start:start + per_chunk]
        diff = x[:, None, None, :] - nodes[None, :, :, :]
        R = np.linalg.norm(diff, axis=-1)
        G = _kernel(k, R)
        dG = G * (1j * k - 1.0 / R) / R
        near = np.linalg.norm(x[:, None, :] - centroids[None, :, :], axis=2) \
            < config.NEAR_FIELD_FACTOR * diam[None, :]
        # static part of near pairs is integrated exactly below
        G = np.where(near[:, :, None], G - 1.0 / (FOUR_PI * R), G)
        dG = np.where(near[:, :, None], dG + 1.0 / (FOUR_PI * R ** 3), dG)

        WG = weights[None] * G
        WdG = (weights[None] * dG)[..., None] * diff
        vector = np.einsum("pmq,mqd->pd", WG, current)
        grad_scalar = np.einsum("pmqd,m->pd", WdG, charge)
        curl = np.einsum("pmqd->pd", np.cross(WdG, current[None]))

        pi, ti = np.nonzero(near)
        if len(pi):
            I1, ivec, grad1 = potential_integrals(x[pi], corners[ti])
            vector_static = (alpha[ti, None] * (ivec + x[pi] * I1[:, None])
                             - beta[ti] * I1[:, None]) / FOUR_PI
            np.add.at(vector, pi, vector_static)
            np.add.at(grad_scalar, pi, charge[ti, None] * grad1 / FOUR_PI)
            np.add.at(curl, pi, np.cross(grad1, alpha[ti, None] * x[pi] - beta[ti]) / FOUR_PI)

        E[start:start + per_chunk] = 1j * k * vector + (1j / k) * grad_scalar
        H[start:start + per_chunk] = curl
    return E, H


def eval_scattered_near(c: SurfaceCurrent, x, quad: int = config.DEFAULT_QUAD_ORDER) -> EMSample:
    """
    Scattered fields at points off the surface.

    :raises ValidationError: if a point is closer than ``config.SURFACE_CLEARANCE``
        local edge lengths to the mesh
    """
    points, single = as_points(x)
    mesh = c.basis.mesh
    distance, index = point_mesh_distance(points, mesh, return_index=True)
    limit = config.SURFACE_CLEARANCE * mesh.max_edge_lengths[index]
    too_close = distance <= limit
    if too_close.any():
        bad = int(np.argmax(too_close))
        raise ValidationError(
            f"Evaluation point {points[bad]} is {distance[bad]:.3e} from the surface "
            f"(minimum {limit[bad]:.3e})")
    E, H = _scattered_fields(c, points, quad)
    if single:
        return EMSample(points[0], E[0], H[0])
    return EMSample(points, E, H)


def eval_total_near(c: SurfaceCurrent, x) -> EMSample:
    if c.wave is None:
        raise ValidationError("Total field needs the incident wave of the current")
    scattered = eval_scattered_near(c, x)
    points, single = as_points(x)
    E, H = plane_wave_fields(c.wave, points)
    if single:
        E, H = E[0], H[0]
    return EMSample(scattered.x, scattered.E + E, scattered.H + H)


def eval_far_field(c: SurfaceCurrent, grid: SphereGrid, quad: int = config.DEFAULT_QUAD_ORDER) -> FarFieldPattern:
    """
    E_inf = (i k / 4 pi) (N - x (x . N)) and H_inf = (i k / 4 pi) x cross N with
    N(x) = int exp(-i k x . y) J(y) dy, so that E_s ~ exp(i k r) / r E_inf.
    """
    alpha, beta = c.linear_parts
    nodes, weights = triangle_nodes(c.basis.mesh.corners, quad)
    current = (alpha[:, None, None] * nodes - beta[:, None, :]).reshape(-1, 3)
    flat_nodes = nodes.reshape(-1, 3)
    flat_weights = weights.reshape(-1)
    directions = grid.directions
    N = np.zeros(directions.shape, dtype=complex)
    per_chunk = max(1, config.ASSEMBLY_CHUNK_ENTRIES // max(1, len(flat_nodes)))
    for start in range(0, len(directions), per_chunk):
        xhat = directions[start:start + per_chunk]
        phase = flat_weights[None, :] * np.exp(-1j * c.k * (xhat @ flat_nodes.T))
        N[start:start + per_chunk] = phase @ current
    factor = 1j * c.k / FOUR_PI
    E_inf = factor * (N - directions * np.sum(directions * N, axis=1)[:, None])
    H_inf = factor * np.cross(directions, N)
    return FarFieldPattern(grid, E_inf, H_inf)


def pec_residual(c: SurfaceCurrent, samples: int = 3) -> float:
    """
    RMS of |nu x (E_inc + E_s)| over off-node surface points, relative to the
    RMS of |nu x E_inc|. A vanishing incident field gives 0.
    """
    if c.wave is None:
        raise ValidationError("Boundary residual needs the incident wave of the current")
    if not 1 <= samples <= len(RESIDUAL_SAMPLES):
        raise ValidationError(f"samples must be in [1, {len(RESIDUAL_SAMPLES)}], got {samples}")
    mesh = c.basis.mesh
    points = np.einsum("si,mid->msd", RESIDUAL_SAMPLES[:samples], mesh.corners).reshape(-1, 3)
    normals = np.repeat(mesh.normals, samples, axis=0)
    E_inc, _ = plane_wave_fields(c.wave, points)
    E_sca, _ = _scattered_fields(c, points)
    incident = row_norms(np.cross(normals, E_inc))
    total = row_norms(np.cross(normals, E_inc + E_sca))
    reference = np.sqrt(np.mean(incident ** 2))
    if reference == 0:
        return 0.0
    return float(np.sqrt(np.mean(total ** 2)) / reference)


@dataclass(eq=False)
class EFIESolution:
    """A solved current with its far field, as consumed by the diagnostics and the harness."""
    current: SurfaceCurrent
    far_field: Optional[FarFieldPattern] = None

    @property
    def k(self) -> float:
        return self.current.k

    def scattered(self, points) -> Tuple[np.ndarray, np.ndarray]:
        sample = eval_scattered_near(self.current, as_points(points)[0])
        return sample.E, sample.H

    def total(self, points) -> Tuple[np.ndarray, np.ndarray]:
        sample = eval_total_near(self.current, as_points(points)[0])
        return sample.E, sample.H


def solve_scatterer(mesh: TriangleMesh, waves, k: float, quad: int = config.DEFAULT_QUAD_ORDER,
                    grid: Optional[SphereGrid] = None):
    """Assemble once, factor once and solve every wave; returns one EFIESolution per wave."""
    system = assemble_efie(build_rwg(mesh), k, quad)
    solutions = []
    for w in waves:
        current = system.solve(w)
        far = eval_far_field(current, grid, quad) if grid is not None else None
        solutions.append(EFIESolution(current, far))
    return system, solutions


# -- persistence ----------------------------------------------------------------------

FAR_FIELD_COLUMNS = ("theta", "phi",
                     "ReEx", "ImEx", "ReEy", "ImEy", "ReEz", "ImEz",
                     "ReHx", "ImHx", "ReHy", "ImHy", "ReHz", "ImHz")


def write_far_field_csv(pattern: FarFieldPattern, path) -> Path:
    rows = []
    for theta, phi, e, h in zip(pattern.grid.theta, pattern.grid.phi, pattern.E_inf, pattern.H_inf):
        row = [theta, phi]
        for value in list(e) + list(h):
            row += [value.real, value.imag]
        rows.append(row)
    return write_csv(path, FAR_FIELD_COLUMNS, rows)


def write_current_csv(c: SurfaceCurrent, path) -> Path:
    basis = c.basis
    rows = [(n, int(edge[0]), int(edge[1]), length, value.real, value.imag)
            for n, (edge, length, value) in enumerate(zip(basis.edges, basis.lengths, c.coefficients))]
    return write_csv(path, ("edge", "v0", "v1", "length", "re", "im"), rows)
