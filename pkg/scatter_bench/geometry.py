"""
Polyhedral scatterers as triangle meshes.

Holds the mesh and scatterer types, the built-in generators, exact
point-to-triangle distances, the generalised winding number, the three
scatterer distances (d, d_hat, d_tilde), reflections, the voxel check of
exterior connectedness and the polyhedral-class report.

Mesh file format (ASCII, UTF-8, one record per line)::

    # comment
    v x y z          vertex
    g NAME           start a facet group (optional)
    f i j k          triangle, 1-based vertex indices
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError

from scatter_bench import config
from scatter_bench.helpers import (MeshParseError, MeshValidationError,
                                   ValidationError, as_points)

logger = logging.getLogger(__name__)

KINDS = ("obstacle", "screen", "mixed")


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle surface; ``facet_group`` labels coplanar cells."""
    vertices: np.ndarray
    triangles: np.ndarray
    facet_group: Optional[np.ndarray] = None

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float).reshape(-1, 3)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        self._check_structure()
        if self.facet_group is None:
            groups = self._cluster_coplanar()
        else:
            groups = np.array(self.facet_group, dtype=np.int64).reshape(-1)
            if len(groups) != len(triangles):
                raise MeshValidationError(
                    f"facet_group has {len(groups)} labels for {len(triangles)} triangles")
        object.__setattr__(self, "facet_group", groups)
        self._check_groups_coplanar()
        for arr in (self.vertices, self.triangles, self.facet_group):
            arr.flags.writeable = False

    # -- structure -----------------------------------------------------------------

    def _check_structure(self) -> None:
        n_vertices = len(self.vertices)
        if len(self.triangles) == 0:
            return
        if self.triangles.min() < 0 or self.triangles.max() >= n_vertices:
            raise MeshValidationError(
                f"Triangle index out of range for {n_vertices} vertices")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshValidationError("Vertex coordinates must be finite")
        limit = config.DEGENERATE_AREA_RATIO * self.diameter ** 2
        degenerate = np.nonzero(self.areas <= limit)[0]
        if len(degenerate):
            raise MeshValidationError(
                f"Degenerate triangle {int(degenerate[0])} (area {self.areas[degenerate[0]]:.3e})")
        if len(self.edge_count) and self.edge_count.max() > 2:
            bad = self.edges[np.argmax(self.edge_count)]
            raise MeshValidationError(
                f"Non-manifold edge {tuple(int(v) for v in bad)} shared by "
                f"{int(self.edge_count.max())} triangles")

    def _cluster_coplanar(self) -> np.ndarray:
        m = len(self.triangles)
        if m == 0:
            return np.zeros(0, dtype=np.int64)
        first, second = self.interior_edge_triangles
        normal_ok = np.abs(np.sum(self.normals[first] * self.normals[second], axis=1)) \
            >= 1.0 - config.COPLANAR_TOLERANCE
        offset = np.abs(np.sum((self.centroids[second] - self.centroids[first])
                               * self.normals[first], axis=1))
        joined = normal_ok & (offset <= config.COPLANAR_TOLERANCE * self.diameter)
        graph = coo_matrix((np.ones(int(joined.sum())), (first[joined], second[joined])),
                           shape=(m, m))
        _, labels = connected_components(graph, directed=False)
        return labels.astype(np.int64)

    def _check_groups_coplanar(self) -> None:
        if len(self.triangles) == 0:
            return
        _, first = np.unique(self.facet_group, return_index=True)
        lookup = dict(zip(self.facet_group[first].tolist(), first.tolist()))
        reference = np.array([lookup[g] for g in self.facet_group.tolist()])
        normals = self.normals[reference]
        origin = self.corners[reference, 0]
        deviation = np.abs(np.einsum("mid,md->mi", self.corners - origin[:, None, :], normals))
        tolerance = config.COPLANAR_TOLERANCE * self.diameter
        if deviation.max() > tolerance:
            bad = int(np.argmax(deviation.max(axis=1)))
            raise MeshValidationError(
                f"Facet group {int(self.facet_group[bad])} is not coplanar "
                f"(deviation {deviation.max():.3e} > {tolerance:.3e})")

    # -- derived quantities --------------------------------------------------------

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    @cached_property
    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    @cached_property
    def _cross(self) -> np.ndarray:
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        return self._cross / (2.0 * self.areas[:, None])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    @cached_property
    def max_edge_lengths(self) -> np.ndarray:
        c = self.corners
        lengths = np.linalg.norm(c[:, [1, 2, 0]] - c, axis=2)
        return lengths.max(axis=1)

    @cached_property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        used = self.vertices[np.unique(self.triangles)] if len(self.triangles) else self.vertices
        if len(used) == 0:
            return np.zeros(3), np.zeros(3)
        return used.min(axis=0), used.max(axis=0)

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def _edge_data(self):
        # local edge i of a triangle is opposite to its vertex i
        t = self.triangles
        directed = np.stack([t[:, [1, 2, 0]], t[:, [2, 0, 1]]], axis=-1).reshape(-1, 2)
        keys = np.sort(directed, axis=1)
        if len(keys) == 0:
            return np.zeros((0, 2), np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64), directed
        edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        return edges, inverse.reshape(-1), counts, directed

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted lexicographically by vertex index pair."""
        return self._edge_data[0]

    @property
    def edge_count(self) -> np.ndarray:
        return self._edge_data[2]

    @property
    def triangle_edges(self) -> np.ndarray:
        """(m, 3) edge index of the edge opposite each local vertex."""
        return self._edge_data[1].reshape(-1, 3)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return self.edges[self.edge_count == 1]

    @cached_property
    def interior_edge_slots(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        For each 2-triangle edge, in edge order, the two flat slots ``3 * t + i``
        (triangle t, opposite local vertex i) that use it; the lower slot comes first.
        """
        inverse = self._edge_data[1]
        if len(inverse) == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        order = np.argsort(inverse, kind="stable")
        starts = np.concatenate([[0], np.cumsum(self.edge_count)[:-1]]).astype(np.int64)
        interior = np.nonzero(self.edge_count == 2)[0]
        return order[starts[interior]], order[starts[interior] + 1]

    @property
    def interior_edge_triangles(self) -> Tuple[np.ndarray, np.ndarray]:
        first, second = self.interior_edge_slots
        return first // 3, second // 3

    @property
    def is_watertight(self) -> bool:
        return not self.is_empty and bool(np.all(self.edge_count == 2))

    @cached_property
    def is_consistently_oriented(self) -> bool:
        directed = self._edge_data[3]
        if len(directed) == 0:
            return True
        _, counts = np.unique(directed, axis=0, return_counts=True)
        return bool(counts.max() == 1)

    @cached_property
    def signed_volume(self) -> float:
        c = self.corners
        return float(np.sum(np.einsum("md,md->m", c[:, 0], np.cross(c[:, 1], c[:, 2]))) / 6.0)

    @cached_property
    def solid_mask(self) -> np.ndarray:
        """True for triangles of watertight connected components."""
        m = len(self.triangles)
        if m == 0:
            return np.zeros(0, dtype=bool)
        inverse = self.triangle_edges
        owner = np.repeat(np.arange(m), 3)
        graph = coo_matrix((np.ones(3 * m), (owner, inverse.ravel())),
                           shape=(m, len(self.edges)))
        adjacency = graph @ graph.T
        n_comp, labels = connected_components(adjacency, directed=False)
        open_edge = (self.edge_count == 1)[inverse].any(axis=1)
        open_component = np.zeros(n_comp, dtype=bool)
        np.logical_or.at(open_component, labels, open_edge)
        return ~open_component[labels]

    def submesh(self, mask: np.ndarray) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.triangles[mask], self.facet_group[mask])

    def same_as(self, other: "TriangleMesh") -> bool:
        return (np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles))


@dataclass(frozen=True)
class ClassParams:
    """A priori constants of the polyhedral scatterer class."""
    r: float = 1.0
    L: float = 1.0
    R0: float = 1.0
    h: float = 0.1


@dataclass(frozen=True, eq=False)
class Scatterer:
    mesh: TriangleMesh
    kind: str = "obstacle"
    class_params: ClassParams = field(default_factory=ClassParams)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"Unknown scatterer kind {self.kind!r}; use one of {KINDS}")
        mesh = self.mesh
        if self.kind == "obstacle" and not mesh.is_empty:
            if not mesh.is_watertight:
                raise MeshValidationError(
                    f"Obstacle mesh is not watertight ({len(mesh.boundary_edges)} open edges)")
            if not mesh.is_consistently_oriented:
                raise MeshValidationError("Obstacle mesh is not consistently oriented")
            if mesh.signed_volume <= 0:
                raise MeshValidationError("Obstacle mesh normals point inward")
        radius = self.bounding_radius
        if radius > self.class_params.R0 * (1.0 + 1e-12):
            raise ValidationError(
                f"Scatterer reaches radius {radius:.6g} outside the ball of radius R0={self.class_params.R0}")

    @property
    def bounding_radius(self) -> float:
        if self.mesh.is_empty:
            return 0.0
        used = self.mesh.vertices[np.unique(self.mesh.triangles)]
        return float(np.linalg.norm(used, axis=1).max())

    @cached_property
    def solid(self) -> Optional[TriangleMesh]:
        mask = self.mesh.solid_mask
        return self.mesh.submesh(mask) if mask.any() else None

    def contains(self, points) -> np.ndarray:
        """Point-in-solid for the watertight components; screens contain nothing."""
        points, _ = as_points(points)
        if self.solid is None:
            return np.zeros(len(points), dtype=bool)
        return winding_number(points, self.solid) > config.WINDING_THRESHOLD


def infer_kind(mesh: TriangleMesh) -> str:
    mask = mesh.solid_mask
    if mask.size and mask.all():
        return "obstacle"
    return "mixed" if mask.any() else "screen"


@dataclass(frozen=True, eq=False)
class Plane:
    """The plane {x : normal . x = offset}."""
    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float).reshape(3)
        if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
            raise ValidationError(f"Plane normal must be a unit vector, got |nu|={np.linalg.norm(normal)}")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def matrix(self) -> np.ndarray:
        """Jacobian of the reflection, I - 2 nu nu^T."""
        return np.eye(3) - 2.0 * np.outer(self.normal, self.normal)

    def reflect(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points - 2.0 * (points @ self.normal - self.offset)[..., None] * self.normal


@dataclass(frozen=True)
class DistanceReport:
    d: float
    d_hat: float
    d_tilde: float
    sampling_resolution: float


@dataclass(frozen=True, eq=False)
class DeltaTable:
    """Tabulated nondecreasing function s -> delta(s)."""
    s: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).reshape(-1)
        delta = np.asarray(self.delta, dtype=float).reshape(-1)
        if len(s) == 0 or len(s) != len(delta):
            raise ValidationError("Delta table must be non-empty with matching columns")
        if np.any(np.diff(s) <= 0):
            raise ValidationError("Delta table abscissae must be strictly increasing")
        if np.any(np.diff(delta) < 0):
            raise ValidationError("Delta table values must be nondecreasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "delta", delta)


# -- mesh I/O ------------------------------------------------------------------------

def load_mesh(path) -> TriangleMesh:
    """
    Read a mesh file.

    :param path: path to the ``v/f/g`` text file
    :return: validated TriangleMesh; facet groups from ``g`` records or by coplanarity clustering
    :raises MeshParseError: for a malformed line
    :raises MeshValidationError: for structural violations
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise MeshParseError(f"Cannot read mesh {path} - {e}") from e

    vertices: List[Tuple[float, float, float]] = []
    triangles: List[Tuple[int, int, int]] = []
    labels: List[int] = []
    group_ids: Dict[str, int] = {}
    current: Optional[int] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "v" and len(parts) == 4:
                vertices.append(tuple(float(p) for p in parts[1:]))
            elif parts[0] == "f" and len(parts) == 4:
                triangles.append(tuple(int(p) - 1 for p in parts[1:]))
                labels.append(current if current is not None else -1)
            elif parts[0] == "g" and len(parts) >= 2:
                name = " ".join(parts[1:])
                current = group_ids.setdefault(name, len(group_ids))
            else:
                raise ValueError("unknown record")
        except ValueError as e:
            raise MeshParseError(f"{path}:{number}: malformed line {raw!r} - {e}") from e

    groups = None
    if group_ids:
        # faces listed before the first "g" form their own group
        groups = np.array([g if g >= 0 else len(group_ids) for g in labels], dtype=np.int64)
    mesh = TriangleMesh(np.array(vertices, dtype=float).reshape(-1, 3),
                        np.array(triangles, dtype=np.int64).reshape(-1, 3), groups)
    logger.info(f"Loaded mesh {path}: {len(mesh.vertices)} vertices, {mesh.n_triangles} triangles, "
                f"{len(np.unique(mesh.facet_group))} facet groups")
    return mesh


def save_mesh(mesh: TriangleMesh, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# scatter_bench mesh"]
    lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    current = None
    for tri, group in zip(mesh.triangles, mesh.facet_group):
        if group != current:
            lines.append(f"g cell{int(group)}")
            current = group
        lines.append(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# -- generators ----------------------------------------------------------------------

def _graded_lines(breaks: Sequence[float], h: Optional[float]) -> np.ndarray:
    breaks = sorted(set(float(b) for b in breaks))
    lines = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = 1 if h is None else max(1, int(math.ceil((b - a) / h - 1e-9)))
        lines.extend(np.linspace(a, b, n + 1)[1:].tolist())
    return np.array(lines)


def _mesh_from_quads(quads: List[np.ndarray], outward: List[np.ndarray]) -> TriangleMesh:
    """Split quads into outward-oriented triangles and weld coincident vertices."""
    corners = []
    for quad, normal in zip(quads, outward):
        for tri in (quad[[0, 1, 2]], quad[[0, 2, 3]]):
            if np.dot(np.cross(tri[1] - tri[0], tri[2] - tri[0]), normal) < 0:
                tri = tri[[0, 2, 1]]
            corners.append(tri)
    corners = np.array(corners)
    scale = max(1.0, float(np.abs(corners).max()))
    keys = np.round(corners.reshape(-1, 3) / scale, 9)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    vertices = corners.reshape(-1, 3)[first]
    return TriangleMesh(vertices, inverse.reshape(-1, 3))


def _grid_quads(u_lines, v_lines, build, normal, skip=None):
    quads, normals = [], []
    for i in range(len(u_lines) - 1):
        for j in range(len(v_lines) - 1):
            u0, u1, v0, v1 = u_lines[i], u_lines[i + 1], v_lines[j], v_lines[j + 1]
            if skip is not None and skip(0.5 * (u0 + u1), 0.5 * (v0 + v1)):
                continue
            quads.append(np.array([build(u0, v0), build(u1, v0), build(u1, v1), build(u0, v1)]))
            normals.append(np.asarray(normal, dtype=float))
    return quads, normals


def _box_mesh(xl, yl, zl, recess=None) -> TriangleMesh:
    """Axis-aligned box on the given grid lines, optionally with a rectangular recess in the top face."""
    x0, x1, y0, y1, z0, z1 = xl[0], xl[-1], yl[0], yl[-1], zl[0], zl[-1]
    quads, normals = [], []

    def add(result):
        quads.extend(result[0])
        normals.extend(result[1])

    in_recess = None
    if recess is not None:
        rx0, rx1, ry0, ry1, depth = recess
        zb = z1 - depth

        def in_recess(u, v):
            return rx0 < u < rx1 and ry0 < v < ry1

    add(_grid_quads(xl, yl, lambda u, v: (u, v, z0), (0, 0, -1)))
    add(_grid_quads(xl, yl, lambda u, v: (u, v, z1), (0, 0, 1), skip=in_recess))
    add(_grid_quads(xl, zl, lambda u, v: (u, y0, v), (0, -1, 0)))
    add(_grid_quads(xl, zl, lambda u, v: (u, y1, v), (0, 1, 0)))
    add(_grid_quads(yl, zl, lambda u, v: (x0, u, v), (-1, 0, 0)))
    add(_grid_quads(yl, zl, lambda u, v: (x1, u, v), (1, 0, 0)))
    if recess is not None:
        xs = xl[(xl >= rx0 - 1e-12) & (xl <= rx1 + 1e-12)]
        ys = yl[(yl >= ry0 - 1e-12) & (yl <= ry1 + 1e-12)]
        walls = [zb, z1]
        add(_grid_quads(xs, ys, lambda u, v: (u, v, zb), (0, 0, 1)))
        add(_grid_quads(ys, walls, lambda u, v: (rx0, u, v), (1, 0, 0)))
        add(_grid_quads(ys, walls, lambda u, v: (rx1, u, v), (-1, 0, 0)))
        add(_grid_quads(xs, walls, lambda u, v: (u, ry0, v), (0, 1, 0)))
        add(_grid_quads(xs, walls, lambda u, v: (u, ry1, v), (0, -1, 0)))
    return _mesh_from_quads(quads, normals)


def make_box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0), h: Optional[float] = None) -> TriangleMesh:
    """Closed box with outward normals; ``h`` is the target cell size (one cell per face if None)."""
    size = np.asarray(size, dtype=float)
    center = np.asarray(center, dtype=float)
    if np.any(size <= 0):
        raise ValidationError(f"Box sizes must be positive, got {size}")
    lines = [_graded_lines([c - s / 2, c + s / 2], h) for c, s in zip(center, size)]
    return _box_mesh(*lines)


def make_cube(side: float = 1.0, center=(0.0, 0.0, 0.0), h: Optional[float] = None) -> TriangleMesh:
    return make_box((side, side, side), center, h)


def make_square_screen(side: float = 1.0, center=(0.0, 0.0, 0.0), h: Optional[float] = None) -> TriangleMesh:
    """Flat square in the plane z = center_z."""
    if side <= 0:
        raise ValidationError(f"Screen side must be positive, got {side}")
    cx, cy, cz = (float(c) for c in center)
    xl = _graded_lines([cx - side / 2, cx + side / 2], h)
    yl = _graded_lines([cy - side / 2, cy + side / 2], h)
    return _mesh_from_quads(*_grid_quads(xl, yl, lambda u, v: (u, v, cz), (0, 0, 1)))


def make_icosphere(radius: float = 1.0, level: int = 2, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Subdivided icosahedron projected on the sphere; 20 * 4**level triangles."""
    if radius <= 0 or level < 0:
        raise ValidationError(f"Icosphere needs radius > 0 and level >= 0, got {radius}, {level}")
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    vertices = np.array([[-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
                         [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
                         [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1]], dtype=float)
    faces = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                      [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                      [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                      [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    vertices /= np.linalg.norm(vertices, axis=1, keepdims=True)
    for _ in range(level):
        midpoint: Dict[Tuple[int, int], int] = {}
        new_vertices = list(vertices)

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                p = vertices[a] + vertices[b]
                new_vertices.append(p / np.linalg.norm(p))
                midpoint[key] = len(new_vertices) - 1
            return midpoint[key]

        new_faces = []
        for a, b, c in faces.tolist():
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        vertices, faces = np.array(new_vertices), np.array(new_faces)
    return TriangleMesh(radius * vertices + np.asarray(center, dtype=float), faces)


def make_dented_cube(depth: float, side: float = 1.0, patch: float = 0.5,
                     h: Optional[float] = None) -> TriangleMesh:
    """Cube whose top face is pushed in by ``depth`` over a central square patch."""
    if not 0 < depth < side or not 0 < patch < side:
        raise ValidationError(f"Dent needs 0 < depth < side and 0 < patch < side, got {depth}, {patch}")
    h = patch / 2 if h is None else h
    s, p = side / 2, patch / 2
    lines = _graded_lines([-s, -p, p, s], h)
    zl = _graded_lines([-s, s], h)
    return _box_mesh(lines, lines, zl, recess=(-p, p, -p, p, depth))


def make_notched_cube(width: float, side: float = 1.0, depth: float = 0.2, length: float = 0.5,
                      h: Optional[float] = None) -> TriangleMesh:
    """Cube with a slot of the given width cut into the top face."""
    if not 0 < width < side or not 0 < depth < side or not 0 < length < side:
        raise ValidationError(f"Notch needs width, depth, length inside (0, side), got {width}, {depth}, {length}")
    h = side / 4 if h is None else h
    s = side / 2
    xl = _graded_lines([-s, -width / 2, width / 2, s], h)
    yl = _graded_lines([-s, -length / 2, length / 2, s], h)
    zl = _graded_lines([-s, s], h)
    return _box_mesh(xl, yl, zl, recess=(-width / 2, width / 2, -length / 2, length / 2, depth))


def translate_mesh(mesh: TriangleMesh, offset) -> TriangleMesh:
    return TriangleMesh(mesh.vertices + np.asarray(offset, dtype=float), mesh.triangles, mesh.facet_group)


def scale_mesh(mesh: TriangleMesh, factor: float, center=None) -> TriangleMesh:
    if factor <= 0:
        raise ValidationError(f"Scale factor must be positive, got {factor}")
    lo, hi = mesh.bounds
    center = 0.5 * (lo + hi) if center is None else np.asarray(center, dtype=float)
    return TriangleMesh(center + factor * (mesh.vertices - center), mesh.triangles, mesh.facet_group)


def combine_meshes(*meshes: TriangleMesh) -> TriangleMesh:
    """Disjoint union; facet groups are relabelled per input mesh."""
    vertices, triangles, groups = [], [], []
    n_vertices, n_groups = 0, 0
    for mesh in meshes:
        vertices.append(mesh.vertices)
        triangles.append(mesh.triangles + n_vertices)
        groups.append(mesh.facet_group + n_groups)
        n_vertices += len(mesh.vertices)
        n_groups += int(mesh.facet_group.max()) + 1 if len(mesh.facet_group) else 0
    return TriangleMesh(np.concatenate(vertices), np.concatenate(triangles), np.concatenate(groups))


def reflect_mesh(mesh: TriangleMesh, plane: Plane) -> TriangleMesh:
    """Mirror the vertices through ``plane`` and flip triangle orientation."""
    return TriangleMesh(plane.reflect(mesh.vertices), mesh.triangles[:, [0, 2, 1]], mesh.facet_group)


# -- point queries -------------------------------------------------------------------

def _closest_on_triangles(a, b, c, p):
    """Closest points on triangles (a, b, c) to p, all broadcast to (..., 3); Ericson's region tests."""
    ab, ac = b - a, c - a
    ap, bp, cp = p - a, p - b, p - c
    d1, d2 = np.sum(ab * ap, -1), np.sum(ac * ap, -1)
    d3, d4 = np.sum(ab * bp, -1), np.sum(ac * bp, -1)
    d5, d6 = np.sum(ab * cp, -1), np.sum(ac * cp, -1)
    va, vb, vc = d3 * d6 - d5 * d4, d5 * d2 - d1 * d6, d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        result = a + ab * (vb / denom)[..., None] + ac * (vc / denom)[..., None]
        is_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        result = np.where(is_bc[..., None], b + w[..., None] * (c - b), result)
        is_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        w = d2 / (d2 - d6)
        result = np.where(is_ac[..., None], a + w[..., None] * ac, result)
        is_c = (d6 >= 0) & (d5 <= d6)
        result = np.where(is_c[..., None], c, result)
        is_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        v = d1 / (d1 - d3)
        result = np.where(is_ab[..., None], a + v[..., None] * ab, result)
        is_b = (d3 >= 0) & (d4 <= d3)
        result = np.where(is_b[..., None], b, result)
        is_a = (d1 <= 0) & (d2 <= 0)
        result = np.where(is_a[..., None], a, result)
    return result


def point_mesh_distance(points, mesh: TriangleMesh, return_index: bool = False):
    """
    Exact distance from each point to the triangle set.

    :param points: (n, 3) query points
    :param mesh: non-empty mesh
    :param return_index: also return the index of a nearest triangle
    """
    points, _ = as_points(points)
    if mesh.is_empty:
        raise ValidationError("Distance to an empty mesh is undefined")
    corners = mesh.corners
    best = np.full(len(points), np.inf)
    index = np.zeros(len(points), dtype=np.int64)
    block = max(1, config.ASSEMBLY_CHUNK_ENTRIES // max(1, len(points)))
    for start in range(0, len(corners), block):
        tri = corners[start:start + block]
        q = _closest_on_triangles(tri[None, :, 0], tri[None, :, 1], tri[None, :, 2], points[:, None, :])
        dist2 = np.sum((q - points[:, None, :]) ** 2, axis=-1)
        local = np.argmin(dist2, axis=1)
        value = dist2[np.arange(len(points)), local]
        better = value < best
        best[better] = value[better]
        index[better] = local[better] + start
    distance = np.sqrt(best)
    return (distance, index) if return_index else distance


def solid_angles(points: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Signed solid angle (n, m) of each triangle seen from each point (Van Oosterom-Strackee)."""
    a = corners[None, :, 0] - points[:, None, :]
    b = corners[None, :, 1] - points[:, None, :]
    c = corners[None, :, 2] - points[:, None, :]
    la, lb, lc = (np.linalg.norm(v, axis=-1) for v in (a, b, c))
    numerator = np.sum(a * np.cross(b, c), axis=-1)
    denominator = (la * lb * lc + np.sum(a * b, -1) * lc
                   + np.sum(b * c, -1) * la + np.sum(c * a, -1) * lb)
    return 2.0 * np.arctan2(numerator, denominator)


def winding_number(points, mesh: TriangleMesh) -> np.ndarray:
    """Generalised winding number; ~1 inside a closed outward mesh, ~0 outside."""
    points, _ = as_points(points)
    total = np.zeros(len(points))
    if mesh.is_empty:
        return total
    block = max(1, config.ASSEMBLY_CHUNK_ENTRIES // max(1, len(points)))
    for start in range(0, mesh.n_triangles, block):
        total += solid_angles(points, mesh.corners[start:start + block]).sum(axis=1)
    return total / (4.0 * np.pi)


def sample_surface(mesh: TriangleMesh, res: float) -> np.ndarray:
    """Barycentric lattice points on every triangle with spacing at most ``res`` (vertices included)."""
    if res <= 0:
        raise ValidationError(f"Sampling resolution must be positive, got {res}")
    counts = np.maximum(1, np.ceil(mesh.max_edge_lengths / res)).astype(int)
    samples = []
    for n in np.unique(counts):
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        keep = (i + j) <= n
        i, j = i[keep] / n, j[keep] / n
        bary = np.stack([1.0 - i - j, i, j], axis=1)
        samples.append(np.einsum("qi,mid->mqd", bary, mesh.corners[counts == n]).reshape(-1, 3))
    return np.concatenate(samples) if samples else np.zeros((0, 3))


# -- distances -----------------------------------------------------------------------

def _require_non_empty(*scatterers: Scatterer) -> None:
    for s in scatterers:
        if s.mesh.is_empty:
            raise ValidationError("Distance between scatterers requires non-empty meshes")


def _in_set(points: np.ndarray, distance: np.ndarray, s: Scatterer, res: float) -> np.ndarray:
    inside = s.contains(points)
    if s.kind != "obstacle":
        inside |= distance <= res
    return inside


def _set_distance(points: np.ndarray, s: Scatterer) -> Tuple[np.ndarray, np.ndarray]:
    """(distance to the set, distance to its boundary)."""
    boundary = point_mesh_distance(points, s.mesh)
    return np.where(s.contains(points), 0.0, boundary), boundary


def _directed_boundary_sup(a: Scatterer, b: Scatterer, res: float, outside_only: bool) -> float:
    points = sample_surface(a.mesh, res)
    distance = point_mesh_distance(points, b.mesh)
    if outside_only:
        distance = distance[~_in_set(points, distance, b, res)]
    return float(distance.max()) if len(distance) else 0.0


def _directed_set_sup(a: Scatterer, b: Scatterer, res: float, max_cells: int = 200_000) -> float:
    """sup over x in Sigma_a of dist(x, Sigma_b): surface samples plus octree bounds on the solid part."""
    best = float(_set_distance(sample_surface(a.mesh, res), b)[0].max())
    if a.solid is None:
        return best
    lo, hi = a.solid.bounds
    half = 0.5 * float((hi - lo).max())
    centers = (0.5 * (lo + hi))[None, :]
    while len(centers):
        reach = half * math.sqrt(3.0)
        to_set, to_boundary = _set_distance(centers, b)
        inside_a = a.contains(centers)
        if inside_a.any():
            best = max(best, float(to_set[inside_a].max()))
        meets_a = inside_a | (point_mesh_distance(centers, a.solid) <= reach)
        inside_b = to_set == 0.0
        bound = np.where(inside_b, np.maximum(0.0, reach - to_boundary), to_set + reach)
        keep = meets_a & (bound > best)
        if reach <= 0.5 * res or not keep.any():
            break
        if 8 * keep.sum() > max_cells:
            logger.warning(f"Interior refinement stopped at cell reach {reach:.3g} ({keep.sum()} cells)")
            break
        half *= 0.5
        offsets = half * np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)])
        centers = (centers[keep][:, None, :] + offsets[None, :, :]).reshape(-1, 3)
    return best


def hausdorff_hat(a: Scatterer, b: Scatterer, res: float) -> float:
    """Hausdorff distance between the boundary surfaces, sampled at spacing ``res``."""
    _require_non_empty(a, b)
    if a.mesh.same_as(b.mesh):
        return 0.0
    return max(_directed_boundary_sup(a, b, res, False), _directed_boundary_sup(b, a, res, False))


def hausdorff_tilde(a: Scatterer, b: Scatterer, res: float) -> float:
    """Hausdorff distance between the scatterers as sets (solid interiors included)."""
    _require_non_empty(a, b)
    if res <= 0:
        raise ValidationError(f"Sampling resolution must be positive, got {res}")
    if a.mesh.same_as(b.mesh):
        return 0.0
    return max(_directed_set_sup(a, b, res), _directed_set_sup(b, a, res))


def distance_d(a: Scatterer, b: Scatterer, res: float) -> float:
    """Max of the directed sups over the boundary parts lying outside the other scatterer."""
    _require_non_empty(a, b)
    if res <= 0:
        raise ValidationError(f"Sampling resolution must be positive, got {res}")
    if a.mesh.same_as(b.mesh):
        return 0.0
    return max(_directed_boundary_sup(a, b, res, True), _directed_boundary_sup(b, a, res, True))


def distance_report(a: Scatterer, b: Scatterer, res: float) -> DistanceReport:
    return DistanceReport(d=distance_d(a, b, res), d_hat=hausdorff_hat(a, b, res),
                          d_tilde=hausdorff_tilde(a, b, res), sampling_resolution=float(res))


def delta_inverse(t: float, table, R0: float) -> float:
    """
    min{sup{s : delta(s) <= t}, 2 R0} on a tabulated delta.

    Between nodes delta is linear; below the first node it is linear from (0, 0);
    past the last node it is taken to stay at its last value.
    """
    if not isinstance(table, DeltaTable):
        if len(table) != 2:
            raise ValidationError("Delta table must be a DeltaTable or a pair (s, delta)")
        table = DeltaTable(*table)
    if t <= 0:
        raise ValidationError(f"delta_inverse needs t > 0, got {t}")
    s, delta = table.s, table.delta
    cap = 2.0 * R0
    count = int(np.searchsorted(delta, t, side="right"))
    if count == len(delta):
        return cap
    if count == 0:
        value = s[0] * t / delta[0] if delta[0] > 0 else s[0]
    else:
        i = count - 1
        value = s[i] + (t - delta[i]) * (s[i + 1] - s[i]) / (delta[i + 1] - delta[i])
    return float(min(value, cap))


# -- exterior connectedness -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConnectednessReport:
    connected: bool
    resolution: float
    n_components: int
    witness: Optional[np.ndarray] = None
    slab: Optional[np.ndarray] = None
    approximate: bool = True


def exterior_connectedness(a: Scatterer, t: float, s: float, res: float) -> ConnectednessReport:
    """
    Voxel check that every exterior ball of radius ``t`` stays in one component
    of the exterior eroded by ``s``. When it fails, ``witness`` is the centre of
    a ball cut off from the unbounded component and ``slab`` holds the centres
    of the eroded voxels (distance <= s) that wall that ball's component off.
    """
    if not 0 < s <= t:
        raise ValidationError(f"Need 0 < s <= t, got s={s}, t={t}")
    if res <= 0 or res > s / 4:
        raise ValidationError(f"Resolution {res} too coarse; need 0 < res <= s/4 = {s / 4}")
    if a.mesh.is_empty:
        return ConnectednessReport(True, float(res), 1)
    lo, hi = a.mesh.bounds
    margin = t + s + 2 * res
    axes = [np.arange(l - margin, h + margin + res, res) for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    shape = grid.shape[:3]
    centers = grid.reshape(-1, 3)
    distance, _ = _set_distance(centers, a)
    distance = distance.reshape(shape)
    labels, n_components = ndimage.label(distance > s)
    outer = labels[0, 0, 0]
    ball_centers = distance >= t
    stray = ball_centers & (labels > 0) & (labels != outer)
    if not stray.any():
        return ConnectednessReport(True, float(res), int(n_components))
    first = tuple(np.argwhere(stray)[0])
    witness = grid[first]
    pocket = labels == labels[first]
    wall = ndimage.binary_dilation(pocket, structure=ndimage.generate_binary_structure(3, 1)) & ~pocket
    slab = grid[wall]
    logger.info(f"Exterior not uniformly connected at t={t}, s={s}: witness {witness}, "
                f"separating slab of {len(slab)} voxels")
    return ConnectednessReport(False, float(res), int(n_components), witness, slab)


# -- class membership -------------------------------------------------------------------

@dataclass(frozen=True)
class CellReport:
    group: int
    planar_deviation: float
    feature_size: float
    min_corner_angle: float
    passed: bool


@dataclass(frozen=True)
class ClassMembershipReport:
    h: float
    cells: Tuple[CellReport, ...]
    warnings: Tuple[str, ...]

    @property
    def passed(self) -> bool:
        return all(cell.passed for cell in self.cells)


def _min_width(points2d: np.ndarray) -> float:
    try:
        hull = ConvexHull(points2d)
    except QhullError:
        return 0.0
    ring = points2d[hull.vertices]
    widths = []
    for p, q in zip(ring, np.roll(ring, -1, axis=0)):
        edge = q - p
        normal = np.array([-edge[1], edge[0]]) / np.linalg.norm(edge)
        widths.append(np.abs((ring - p) @ normal).max())
    return float(min(widths))


def _merged_sides(segments: np.ndarray, scale: float) -> np.ndarray:
    """Join collinear, touching boundary edges into maximal straight sides, shape (k, 2, 2)."""
    a, b = segments[:, 0], segments[:, 1]
    u = (b - a) / np.linalg.norm(b - a, axis=1)[:, None]
    flip = (u[:, 0] < -1e-9) | ((np.abs(u[:, 0]) <= 1e-9) & (u[:, 1] < 0))
    u[flip] *= -1.0
    n = np.stack([-u[:, 1], u[:, 0]], axis=1)
    c = np.sum(n * a, axis=1)
    keys = np.round(np.column_stack([u, c / scale]), 7)
    tol = 1e-9 * scale
    _, line_of = np.unique(keys, axis=0, return_inverse=True)
    sides = []
    for line in np.unique(line_of):
        members = np.nonzero(line_of.ravel() == line)[0]
        direction, offset = u[members[0]], c[members[0]] * n[members[0]]
        lo = np.minimum(a[members] @ direction, b[members] @ direction)
        hi = np.maximum(a[members] @ direction, b[members] @ direction)
        order = np.argsort(lo)
        start, end = lo[order[0]], hi[order[0]]
        for i in order[1:]:
            if lo[i] <= end + tol:
                end = max(end, hi[i])
                continue
            sides.append((offset + start * direction, offset + end * direction))
            start, end = lo[i], hi[i]
        sides.append((offset + start * direction, offset + end * direction))
    return np.array(sides, dtype=float).reshape(-1, 2, 2)


def _inside_triangles(points: np.ndarray, triangles2d: np.ndarray, tol: float) -> np.ndarray:
    a, b, c = triangles2d[:, 0], triangles2d[:, 1], triangles2d[:, 2]
    v0, v1 = b - a, c - a
    det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    rel = points[:, None, :] - a[None, :, :]
    s = (rel[..., 0] * v1[:, 1] - rel[..., 1] * v1[:, 0]) / det
    t = (v0[:, 0] * rel[..., 1] - v0[:, 1] * rel[..., 0]) / det
    return np.any((s >= -tol) & (t >= -tol) & (s + t <= 1.0 + tol), axis=1)


def _perpendicular_width(sides: np.ndarray, triangles2d: np.ndarray, tol: float) -> float:
    """
    Smallest width of material measured from a side corner straight across to
    another side: the foot must fall strictly inside that side and the
    connecting segment must stay in the cell. Catches strips, rims and the arms
    of non-convex cells that the hull width misses.
    """
    if len(sides) < 2:
        return math.inf
    corners = np.unique(np.round(sides.reshape(-1, 2), 12), axis=0)
    a, d = sides[:, 0], sides[:, 1] - sides[:, 0]
    length2 = np.sum(d * d, axis=1)
    s = np.einsum("mkj,kj->mk", corners[:, None, :] - a[None], d) / length2
    feet = a[None] + s[..., None] * d[None]
    gap = np.linalg.norm(corners[:, None, :] - feet, axis=2)
    margin = tol / np.sqrt(length2)
    candidate = (s > margin) & (s < 1.0 - margin) & (gap > tol)
    best = math.inf
    fractions = np.linspace(0.0, 1.0, 7)[1:-1]
    for i, k in zip(*np.nonzero(candidate)):
        if gap[i, k] >= best:
            continue
        samples = corners[i] + fractions[:, None] * (feet[i, k] - corners[i])
        if _inside_triangles(samples, triangles2d, 1e-9).all():
            best = float(gap[i, k])
    return best


def validate_class_membership(a: Scatterer) -> ClassMembershipReport:
    """
    Per-cell planarity and in-plane width against h. Corner angles at cell
    boundaries are compared with the cone angle allowed by L (advisory).
    """
    mesh = a.mesh
    h, L = a.class_params.h, a.class_params.L
    tolerance = config.COPLANAR_TOLERANCE * max(mesh.diameter, 1e-300)
    cone = 2.0 * math.atan(1.0 / L) if L > 0 else math.pi
    cells, warnings = [], []

    corners = mesh.corners
    edge_vectors = [corners[:, (i + 1) % 3] - corners[:, i] for i in range(3)]
    angles = np.empty((mesh.n_triangles, 3))
    for i in range(3):
        u, v = edge_vectors[i], -edge_vectors[(i + 2) % 3]
        cosine = np.sum(u * v, 1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles[:, i] = np.arccos(np.clip(cosine, -1.0, 1.0))

    for group in np.unique(mesh.facet_group):
        mask = mesh.facet_group == group
        tris = mesh.triangles[mask]
        normal = mesh.normals[mask][0]
        origin = corners[mask][0, 0]
        points = mesh.vertices[np.unique(tris)]
        deviation = float(np.abs((points - origin) @ normal).max())
        e1 = np.cross(normal, [1.0, 0.0, 0.0])
        if np.linalg.norm(e1) < 0.5:
            e1 = np.cross(normal, [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(normal, e1)
        plane_xy = (mesh.vertices - origin) @ np.stack([e1, e2], axis=1)
        sub = TriangleMesh(mesh.vertices, tris, np.zeros(len(tris), dtype=np.int64))
        width = _min_width(plane_xy[np.unique(tris)])
        if len(sub.boundary_edges):
            scale = max(sub.diameter, 1e-300)
            sides = _merged_sides(plane_xy[sub.boundary_edges], scale)
            width = min(width, _perpendicular_width(sides, plane_xy[tris], 1e-9 * scale))

        corner_sum = np.zeros(len(mesh.vertices))
        np.add.at(corner_sum, tris.ravel(), angles[mask].ravel())
        rim = np.unique(sub.boundary_edges)
        min_angle = float(corner_sum[rim].min()) if len(rim) else math.pi
        if min_angle < cone:
            warnings.append(f"cell {int(group)}: corner angle {math.degrees(min_angle):.2f} deg "
                            f"below the cone angle {math.degrees(cone):.2f} deg for L={L} (advisory)")
        passed = deviation <= tolerance and width >= h - tolerance
        if not passed:
            warnings.append(f"cell {int(group)}: width {width:.6g} against h={h}, "
                            f"planarity deviation {deviation:.3e}")
        cells.append(CellReport(int(group), deviation, width, min_angle, passed))
    for message in warnings:
        logger.warning(message)
    return ClassMembershipReport(float(h), tuple(cells), tuple(warnings))
