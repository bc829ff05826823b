"""
Stability experiments for the inverse problem.

A scenario fixes the wavenumber, one or two incident waves, the measurement
ball B(x0, rho_tilde), the far-field grid and a pair of scatterers. For each
pair the harness solves both direct problems and records the near-field
error (max over the waves of the L2 norm of the field difference on the
ball), the far-field error (same on the unit sphere) and the three
scatterer distances. Sweeps over a one-parameter family of scatterers give
the empirical stability curves; no theoretical constant is reproduced.
"""

import logging
import math
import threading
import dataclasses
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import stats

from scatter_bench import config
from scatter_bench.dispatcher import SweepDispatcher, SweepJob
from scatter_bench.efie_solver import EFIESolution, FarFieldPattern, build_rwg, solve_scatterer
from scatter_bench.geometry import (ClassParams, Scatterer, TriangleMesh, distance_report,
                                    infer_kind, load_mesh, make_cube, make_dented_cube,
                                    make_icosphere, make_notched_cube, make_square_screen,
                                    scale_mesh, translate_mesh)
from scatter_bench.helpers import SolverError, ValidationError, read_csv, row_norms, write_csv
from scatter_bench.incident_fields import PlaneWaveSpec, independence_constant_b0
from scatter_bench.quadrature import SphereGrid, ball_grid, sphere_grid
from scatter_bench.transforms_diagnostics import eta

logger = logging.getLogger(__name__)

BASE_SHAPES = ("cube", "sphere", "screen")
FAMILIES = ("translate", "dent", "notch", "scale")

SCENARIO_KEYS = frozenset(
    ["k", "x0.x", "x0.y", "x0.z", "rho_tilde", "R0", "R1",
     "mesh.a", "mesh.b", "mesh.a.t", "mesh.b.t", "mesh.h", "mesh.level", "mesh.radius", "mesh.side",
     "quad_order", "seed", "farfield.n_theta", "farfield.n_phi", "distance.res", "near.order",
     "class.h", "field", "workers"]
    + [f"wave{j}.{key}" for j in (1, 2) for key in ("dx", "dy", "dz", "px", "py", "pz")])

RECORD_COLUMNS = ("case_id", "t", "d", "d_hat", "d_tilde", "eps_near", "eps_far", "eta_of_eps",
                  "k", "n_waves", "ndof_a", "ndof_b")


# -- scenario ---------------------------------------------------------------------------

def _valid_mesh_name(name: str) -> bool:
    return name in BASE_SHAPES or name in FAMILIES or name.endswith(".msh")


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """
    Validated scenario.

    ``mesh_a``/``mesh_b`` are a base shape (cube, sphere, screen), a family
    name (translate, dent, notch, scale) applied to the base shape of A with
    parameter ``t_a``/``t_b``, or a path to a ``.msh`` file.
    """
    k: float
    waves: Tuple[PlaneWaveSpec, ...]
    x0: np.ndarray
    rho_tilde: float = 0.5
    R0: float = 1.5
    R1: float = 10.0
    mesh_a: str = "cube"
    mesh_b: str = "cube"
    t_a: float = 0.0
    t_b: float = 0.0
    mesh_h: Optional[float] = 0.25
    mesh_level: int = 2
    mesh_radius: float = 0.5
    mesh_side: float = 1.0
    quad_order: int = config.DEFAULT_QUAD_ORDER
    seed: int = 0
    n_theta: int = config.FARFIELD_N_THETA
    n_phi: int = config.FARFIELD_N_PHI
    distance_res: float = 0.02
    near_order: Tuple[int, int, int] = config.NEAR_ERROR_BALL_ORDER
    class_h: float = 0.1
    field: str = "E"
    workers: int = 1
    b_constant: float = dataclasses.field(init=False, default=math.nan)

    def __post_init__(self):
        object.__setattr__(self, "waves", tuple(self.waves))
        object.__setattr__(self, "x0", np.array(self.x0, dtype=float).reshape(3))
        object.__setattr__(self, "near_order", tuple(int(n) for n in self.near_order))
        if not self.k > 0:
            raise ValidationError(f"Wavenumber must be positive, got k={self.k}")
        if len(self.waves) not in (1, 2):
            raise ValidationError(f"A scenario uses one or two waves, got {len(self.waves)}")
        for j, w in enumerate(self.waves, start=1):
            if abs(w.k - self.k) > 1e-12 * self.k:
                raise ValidationError(f"wave{j} has k={w.k}, scenario has k={self.k}")
            if w.b == 0.0:
                raise ValidationError(f"wave{j} has polarisation parallel to its direction")
        if self.quad_order not in config.SUPPORTED_QUAD_ORDERS:
            raise ValidationError(
                f"quad_order must be one of {config.SUPPORTED_QUAD_ORDERS}, got {self.quad_order}")
        if self.field not in ("E", "H"):
            raise ValidationError(f"field must be 'E' or 'H', got {self.field!r}")
        if not (self.rho_tilde > 0 and self.R0 > 0):
            raise ValidationError(f"rho_tilde and R0 must be positive, got {self.rho_tilde}, {self.R0}")
        distance = float(np.linalg.norm(self.x0))
        if not self.R0 + 1.0 + self.rho_tilde <= distance <= self.R1:
            raise ValidationError(
                f"Measurement point must satisfy R0 + 1 + rho_tilde <= |x0| <= R1, "
                f"got {self.R0 + 1.0 + self.rho_tilde:.6g} <= {distance:.6g} <= {self.R1:.6g}")
        for name in (self.mesh_a, self.mesh_b):
            if not _valid_mesh_name(name):
                raise ValidationError(
                    f"Unknown mesh {name!r}; use {BASE_SHAPES + FAMILIES} or a .msh path")
        if self.mesh_h is not None and not self.mesh_h > 0:
            raise ValidationError(f"mesh.h must be positive, got {self.mesh_h}")
        if self.mesh_level < 0 or not self.mesh_radius > 0 or not self.mesh_side > 0:
            raise ValidationError("mesh.level must be >= 0, mesh.radius and mesh.side positive")
        if self.n_theta < 1 or self.n_phi < 1 or len(self.near_order) != 3 or min(self.near_order) < 1:
            raise ValidationError("Quadrature grid sizes must be positive")
        if not self.distance_res > 0 or not self.class_h > 0:
            raise ValidationError("distance.res and class.h must be positive")
        if self.workers < 1:
            raise ValidationError(f"workers must be at least 1, got {self.workers}")

        if len(self.waves) == 2:
            b0 = independence_constant_b0(*self.waves).b0
            if b0 <= 0.0:
                raise ValidationError("The two waves do not span every tangent direction (b0 = 0)")
            object.__setattr__(self, "b_constant", float(b0))
        else:
            object.__setattr__(self, "b_constant", self.waves[0].b)

    @property
    def base_shape(self) -> str:
        return "cube" if self.mesh_a in FAMILIES else self.mesh_a

    @property
    def grid(self) -> SphereGrid:
        return sphere_grid(self.n_theta, self.n_phi)

    @property
    def class_params(self) -> ClassParams:
        return ClassParams(R0=self.R0, h=self.class_h)

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "ScenarioConfig":
        unknown = sorted(set(values) - SCENARIO_KEYS)
        if unknown:
            raise ValidationError(f"Unknown scenario keys: {', '.join(unknown)}")
        if "k" not in values:
            raise ValidationError("Scenario needs the wavenumber 'k'")
        try:
            k = float(values["k"])
            waves = [PlaneWaveSpec.from_mapping(values, "wave1.", k)]
            if any(key.startswith("wave2.") for key in values):
                waves.append(PlaneWaveSpec.from_mapping(values, "wave2.", k))
            x0 = [float(values.get(f"x0.{axis}", 0.0)) for axis in "xyz"]
            options = {}
            for key, name, kind in (("rho_tilde", "rho_tilde", float), ("R0", "R0", float),
                                    ("R1", "R1", float), ("mesh.a", "mesh_a", str),
                                    ("mesh.b", "mesh_b", str), ("mesh.a.t", "t_a", float),
                                    ("mesh.b.t", "t_b", float), ("mesh.level", "mesh_level", int),
                                    ("mesh.radius", "mesh_radius", float),
                                    ("mesh.side", "mesh_side", float), ("quad_order", "quad_order", int),
                                    ("seed", "seed", int), ("farfield.n_theta", "n_theta", int),
                                    ("farfield.n_phi", "n_phi", int),
                                    ("distance.res", "distance_res", float),
                                    ("class.h", "class_h", float), ("field", "field", str),
                                    ("workers", "workers", int)):
                if key in values:
                    options[name] = kind(values[key])
            if "mesh.h" in values:
                options["mesh_h"] = None if values["mesh.h"].lower() == "none" else float(values["mesh.h"])
            if "near.order" in values:
                options["near_order"] = tuple(int(n) for n in values["near.order"].split(","))
        except ValueError as e:
            raise ValidationError(f"Invalid scenario value - {e}") from e
        return cls(k, tuple(waves), x0, **options)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        return cls.from_mapping(config.read_key_value_file(path))


def _base_mesh(name: str, scenario: ScenarioConfig) -> TriangleMesh:
    if name == "cube":
        return make_cube(scenario.mesh_side, h=scenario.mesh_h)
    if name == "sphere":
        return make_icosphere(scenario.mesh_radius, scenario.mesh_level)
    if name == "screen":
        return make_square_screen(scenario.mesh_side, h=scenario.mesh_h)
    return load_mesh(name)


def build_mesh(name: str, t: float, scenario: ScenarioConfig) -> TriangleMesh:
    """
    Mesh of a scenario member. Families: translate by (t, 0, 0), scale by 1 + t
    about the bounding-box centre, dent the top face by depth t, notch it with
    a slot of width t. Dents and notches apply to the cube; t = 0 gives the
    undeformed base mesh.
    """
    if name not in FAMILIES:
        return _base_mesh(name, scenario)
    if t < 0:
        raise ValidationError(f"Family parameter must be non-negative, got {t}")
    base = scenario.base_shape
    if name == "translate":
        return translate_mesh(_base_mesh(base, scenario), (t, 0.0, 0.0))
    if name == "scale":
        return scale_mesh(_base_mesh(base, scenario), 1.0 + t)
    if t == 0:
        return make_cube(scenario.mesh_side, h=scenario.mesh_h)
    if name == "dent":
        return make_dented_cube(t, scenario.mesh_side, h=scenario.mesh_h)
    return make_notched_cube(t, scenario.mesh_side, h=scenario.mesh_h)


def build_scatterer(mesh: TriangleMesh, scenario: ScenarioConfig) -> Scatterer:
    return Scatterer(mesh, infer_kind(mesh), scenario.class_params)


# -- solutions ----------------------------------------------------------------------------

class SolutionCache:
    """
    Solutions keyed by mesh, wavenumber, quadrature order, waves and far-field
    grid. Concurrent requests for one key solve it once.
    """

    def __init__(self):
        self._solutions: Dict[tuple, Tuple[int, List[EFIESolution]]] = {}
        self._key_locks: Dict[tuple, threading.Lock] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(mesh: TriangleMesh, scenario: ScenarioConfig) -> tuple:
        waves = tuple(tuple(sorted(w.to_mapping().items())) for w in scenario.waves)
        return (mesh.vertices.tobytes(), mesh.triangles.tobytes(), scenario.k,
                scenario.quad_order, waves, scenario.n_theta, scenario.n_phi)

    def __len__(self) -> int:
        return len(self._solutions)

    def solve(self, mesh: TriangleMesh, scenario: ScenarioConfig) -> Tuple[int, List[EFIESolution]]:
        """(number of unknowns, one solution per scenario wave)."""
        key = self._key(mesh, scenario)
        with self._lock:
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            if key not in self._solutions:
                system, solutions = solve_scatterer(mesh, scenario.waves, scenario.k,
                                                    scenario.quad_order, scenario.grid)
                self._solutions[key] = (system.basis.n_dof, solutions)
            return self._solutions[key]


# -- errors -------------------------------------------------------------------------------

def near_field_error(sol_a, sol_b, x0, rho_tilde: float,
                     order: Tuple[int, int, int] = config.NEAR_ERROR_BALL_ORDER,
                     field: str = "E") -> float:
    """
    L2 norm over B(x0, rho_tilde) of the difference of the total fields.

    ``sol_a`` and ``sol_b`` provide ``total(points) -> (E, H)`` for the same
    incident wave; ``field="H"`` measures the magnetic fields instead.
    """
    if field not in ("E", "H"):
        raise ValidationError(f"field must be 'E' or 'H', got {field!r}")
    if sol_a is sol_b:
        return 0.0
    ball = ball_grid(x0, rho_tilde, order)
    index = 0 if field == "E" else 1
    difference = sol_a.total(ball.points)[index] - sol_b.total(ball.points)[index]
    return float(np.sqrt(np.sum(ball.weights * row_norms(difference) ** 2)))


def far_field_error(ff_a: FarFieldPattern, ff_b: FarFieldPattern, field: str = "E") -> float:
    """L2(S2) norm of the difference of two far-field patterns on a shared grid."""
    if not ff_a.grid.same_as(ff_b.grid):
        raise ValidationError("Far-field patterns are sampled on different grids")
    if ff_a is ff_b:
        return 0.0
    a, b = (ff_a.E_inf, ff_b.E_inf) if field == "E" else (ff_a.H_inf, ff_b.H_inf)
    return float(np.sqrt(np.sum(ff_a.grid.weights * row_norms(a - b) ** 2)))


def eta_of_error(eps: float) -> float:
    """eta(eps) for 0 < eps < 1/e, 0 at eps = 0, nan otherwise."""
    if eps == 0.0:
        return 0.0
    if 0.0 < eps < math.exp(-1.0):
        return eta(eps)
    return math.nan


# -- records ------------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityRecord:
    case_id: str
    t: float
    d: float
    d_hat: float
    d_tilde: float
    eps_near: float
    eps_far: float
    eta_of_eps: float
    k: float
    n_waves: int
    ndof_a: int
    ndof_b: int
    # metadata, not persisted
    kind_a: str = ""
    kind_b: str = ""
    b_constant: float = math.nan

    def as_row(self) -> tuple:
        return tuple(getattr(self, name) for name in RECORD_COLUMNS)


def write_records_csv(records: Sequence[StabilityRecord], path) -> Path:
    return write_csv(path, RECORD_COLUMNS, [r.as_row() for r in records],
                     schema_version=config.CSV_SCHEMA_VERSION)


def read_records_csv(path) -> List[StabilityRecord]:
    header, rows = read_csv(path)
    if tuple(header) != RECORD_COLUMNS:
        raise ValidationError(f"{path} is not a stability record file (header {header})")
    records = []
    for number, row in enumerate(rows, start=2):
        try:
            case_id, *floats, n_waves, ndof_a, ndof_b = row
            values = [float(v) for v in floats]
            records.append(StabilityRecord(case_id, *values, int(n_waves), int(ndof_a), int(ndof_b)))
        except ValueError as e:
            raise ValidationError(f"{path}: malformed record on row {number} - {e}") from e
    return records


# -- experiments --------------------------------------------------------------------------

def _case_id(scenario: ScenarioConfig) -> str:
    return f"{Path(scenario.mesh_a).stem}-{Path(scenario.mesh_b).stem}-t{float(scenario.t_b)!r}"


def run_pair(scenario: ScenarioConfig, cache: Optional[SolutionCache] = None,
             case_id: Optional[str] = None) -> StabilityRecord:
    """
    Solve both scatterers of the scenario for every wave and compare them.

    :raises SolverError: tagged with ``case_id`` when a direct solve fails
    """
    cache = SolutionCache() if cache is None else cache
    case_id = _case_id(scenario) if case_id is None else case_id
    mesh_a = build_mesh(scenario.mesh_a, scenario.t_a, scenario)
    mesh_b = build_mesh(scenario.mesh_b, scenario.t_b, scenario)
    scatterer_a = build_scatterer(mesh_a, scenario)
    scatterer_b = scatterer_a if mesh_b.same_as(mesh_a) else build_scatterer(mesh_b, scenario)

    try:
        ndof_a, solutions_a = cache.solve(mesh_a, scenario)
        ndof_b, solutions_b = cache.solve(scatterer_b.mesh, scenario)
    except SolverError as e:
        raise e.with_case(case_id) from e

    eps_near = max(near_field_error(a, b, scenario.x0, scenario.rho_tilde, scenario.near_order, scenario.field)
                   for a, b in zip(solutions_a, solutions_b))
    eps_far = max(far_field_error(a.far_field, b.far_field, scenario.field)
                  for a, b in zip(solutions_a, solutions_b))
    distances = distance_report(scatterer_a, scatterer_b, scenario.distance_res)
    logger.info(f"{case_id}: d={distances.d:.4g} eps_near={eps_near:.4e} eps_far={eps_far:.4e}")
    return StabilityRecord(case_id, float(scenario.t_b), distances.d, distances.d_hat, distances.d_tilde,
                           eps_near, eps_far, eta_of_error(eps_near), scenario.k, len(scenario.waves),
                           ndof_a, ndof_b, scatterer_a.kind, scatterer_b.kind, scenario.b_constant)


def _family_jobs(base: ScenarioConfig, family: str, params: Sequence[float],
                 cache: SolutionCache) -> List[SweepJob]:
    jobs = []
    for t in params:
        member = replace(base, mesh_b=family, t_b=float(t))
        case_id = f"{family}-t{float(t)!r}"
        jobs.append(SweepJob(float(t), case_id, partial(run_pair, member, cache, case_id)))
    return jobs


def run_sweep(base: ScenarioConfig, family: str, params: Sequence[float],
              cache: Optional[SolutionCache] = None, workers: Optional[int] = None,
              output=None) -> List[StabilityRecord]:
    """
    One record per family parameter, ordered by t. Scatterer A is the base
    scenario's; B is the family member at t. Records are written to ``output``
    when given (header only for an empty parameter list).
    """
    if family not in FAMILIES:
        raise ValidationError(f"Unknown family {family!r}; use one of {FAMILIES}")
    params = [float(t) for t in params]
    if any(b <= a for a, b in zip(params[:-1], params[1:])):
        raise ValidationError(f"Sweep parameters must be strictly increasing, got {params}")
    records: List[StabilityRecord] = []
    if params:
        cache = SolutionCache() if cache is None else cache
        dispatcher = SweepDispatcher(base.workers if workers is None else workers)
        records = dispatcher.run(_family_jobs(base, family, params, cache))
    if output is not None:
        write_records_csv(records, output)
    return records


# -- analysis -----------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityFit:
    A: float
    C: float
    residual: float
    n_used: int


def _usable(records: Sequence[StabilityRecord]) -> List[StabilityRecord]:
    return [r for r in records if 0.0 < r.eps_near < math.exp(-1.0) and r.d > 0.0]


def fit_stability_curve(records: Sequence[StabilityRecord]) -> StabilityFit:
    """
    Least-squares fit of log d = log A + C log eta(eps) over the records with
    0 < eps < 1/e and d > 0. Descriptive only.

    :raises ValidationError: fewer than three usable records or a degenerate design
    """
    usable = _usable(records)
    if len(usable) < 3:
        raise ValidationError(f"Stability fit needs at least 3 records with 0 < eps < 1/e and d > 0, "
                              f"got {len(usable)}")
    log_eta = np.log([eta(r.eps_near) for r in usable])
    log_d = np.log([r.d for r in usable])
    design = np.column_stack([np.ones(len(usable)), log_eta])
    coefficients, _, rank, _ = scipy.linalg.lstsq(design, log_d)
    if rank < 2:
        raise ValidationError("Stability fit is degenerate: all records share one error level")
    residual = float(np.linalg.norm(design @ coefficients - log_d))
    return StabilityFit(float(math.exp(coefficients[0])), float(coefficients[1]), residual, len(usable))


def logarithmic_envelope(records: Sequence[StabilityRecord], h: float, R0: float) -> float:
    """
    Largest C with min{d, h} <= 2 e R0 eta(eps)^C on every usable record; a
    positive value means the sweep lies under a logarithmic envelope.
    """
    usable = _usable(records)
    if not usable:
        return math.nan
    exponents = [math.log(min(r.d, h) / (2.0 * math.e * R0)) / math.log(eta(r.eps_near)) for r in usable]
    return float(min(exponents))


def spearman_rank_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y) or len(x) < 2:
        raise ValidationError("Rank correlation needs two sequences of equal length >= 2")
    return float(stats.spearmanr(x, y)[0])


@dataclass(frozen=True)
class MonotonicityReport:
    d_nondecreasing: bool
    eps_nondecreasing: bool
    eps_strictly_increasing: bool
    violations: Tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.d_nondecreasing and self.eps_nondecreasing


def check_sweep_monotonicity(records: Sequence[StabilityRecord], d_tolerance: float = 0.0) -> MonotonicityReport:
    """Records must be ordered by t; d may dip by at most ``d_tolerance``."""
    violations = []
    d_ok = eps_ok = eps_strict = True
    for prev, cur in zip(records[:-1], records[1:]):
        if cur.d < prev.d - d_tolerance:
            d_ok = False
            violations.append(f"d drops from {prev.d:.6g} to {cur.d:.6g} at t={cur.t}")
        if cur.eps_near < prev.eps_near:
            eps_ok = False
            violations.append(f"eps drops from {prev.eps_near:.6g} to {cur.eps_near:.6g} at t={cur.t}")
        if cur.eps_near <= prev.eps_near:
            eps_strict = False
    for message in violations:
        logger.warning(message)
    return MonotonicityReport(d_ok, eps_ok, eps_strict, tuple(violations))


@dataclass(frozen=True)
class SweepSummary:
    monotonicity: MonotonicityReport
    spearman: float
    fit: Optional[StabilityFit]
    envelope_C: float
    min_d_h: Tuple[float, ...]


def summarize_sweep(records: Sequence[StabilityRecord], h: float, R0: float,
                    d_tolerance: float = 0.0) -> SweepSummary:
    """Monotonicity, near/far rank correlation, the log-log fit when possible and min{d, h} per record."""
    monotonicity = check_sweep_monotonicity(records, d_tolerance)
    spearman = (spearman_rank_correlation([r.eps_near for r in records], [r.eps_far for r in records])
                if len(records) >= 2 else math.nan)
    try:
        fit = fit_stability_curve(records)
    except ValidationError as e:
        logger.info(f"No stability fit: {e}")
        fit = None
    return SweepSummary(monotonicity, spearman, fit, logarithmic_envelope(records, h, R0),
                        tuple(min(r.d, h) for r in records))


# -- convergence --------------------------------------------------------------------------

def refined_scenario(scenario: ScenarioConfig) -> ScenarioConfig:
    """Same scatterer A on a finer mesh: one more sphere level or half the cell size."""
    if scenario.mesh_a.endswith(".msh"):
        raise ValidationError("A mesh file cannot be refined; use a built-in generator")
    if scenario.base_shape == "sphere":
        return replace(scenario, mesh_level=scenario.mesh_level + 1)
    h = scenario.mesh_side if scenario.mesh_h is None else scenario.mesh_h
    return replace(scenario, mesh_h=h / 2.0)


def discretization_floor(scenario: ScenarioConfig, cache: Optional[SolutionCache] = None) -> float:
    """Near-field error between scatterer A on the scenario mesh and on its refinement."""
    cache = SolutionCache() if cache is None else cache
    fine = refined_scenario(scenario)
    _, coarse_solutions = cache.solve(build_mesh(scenario.mesh_a, scenario.t_a, scenario), scenario)
    _, fine_solutions = cache.solve(build_mesh(fine.mesh_a, fine.t_a, fine), fine)
    return max(near_field_error(a, b, scenario.x0, scenario.rho_tilde, scenario.near_order, scenario.field)
               for a, b in zip(coarse_solutions, fine_solutions))


@dataclass(frozen=True)
class ConvergenceReport:
    records: Tuple[StabilityRecord, ...]
    floor: float
    decreasing: bool
    reached_floor: bool


def run_convergence_study(base: ScenarioConfig, family: str, params: Sequence[float],
                          cache: Optional[SolutionCache] = None,
                          workers: Optional[int] = None) -> ConvergenceReport:
    """
    Errors along a family with t decreasing to 0. The error must drop strictly
    from member to member until it falls below the discretisation floor.
    A t = 0 member is recorded with zero errors and distances without solving.
    """
    params = [float(t) for t in params]
    if any(t < 0 for t in params) or any(b >= a for a, b in zip(params[:-1], params[1:])):
        raise ValidationError(f"Convergence parameters must be non-negative and strictly decreasing, got {params}")
    cache = SolutionCache() if cache is None else cache
    positive = sorted(t for t in params if t > 0)
    solved = {r.t: r for r in run_sweep(base, family, positive, cache, workers)}

    records = []
    for t in params:
        if t > 0:
            records.append(solved[t])
            continue
        ndof = build_rwg(build_mesh(base.mesh_a, base.t_a, base)).n_dof
        records.append(StabilityRecord(f"{family}-t0.0", 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, base.k,
                                       len(base.waves), ndof, ndof, b_constant=base.b_constant))

    floor = discretization_floor(base, cache)
    decreasing = all(cur.eps_near < prev.eps_near
                     for prev, cur in zip(records[:-1], records[1:]) if prev.eps_near > floor)
    reached = bool(records) and records[-1].eps_near <= floor
    logger.info(f"Convergence along {family}: floor {floor:.4e}, decreasing={decreasing}, reached floor={reached}")
    return ConvergenceReport(tuple(records), float(floor), decreasing, reached)
