"""
Command-line front end of the scattering workbench.

    python -m scatter_bench.cli <subcommand> [options]

Every subcommand writes its CSV output under ``--out`` (default
``config.RESULTS_DIR``) and exits with 0 on success, 1 on invalid input and
2 when the direct solver fails.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy import special

from scatter_bench import config
from scatter_bench.efie_solver import (eval_far_field, pec_residual, solve_scatterer,
                                       write_current_csv, write_far_field_csv)
from scatter_bench.geometry import (ClassParams, Scatterer, distance_report, infer_kind,
                                    load_mesh, make_icosphere)
from scatter_bench.helpers import SolverError, ValidationError, setup_logging, write_csv
from scatter_bench.incident_fields import PlaneWaveSpec, plane_wave_fields
from scatter_bench.mie_oracle import mie_far_field, relative_far_field_error
from scatter_bench.quadrature import sphere_grid
from scatter_bench.stability_harness import (FAMILIES, ScenarioConfig, build_mesh,
                                             run_convergence_study, run_sweep,
                                             summarize_sweep, write_records_csv)
from scatter_bench.transforms_diagnostics import (DiagnosticResult, affine_map,
                                                  curl_transform_check, decay_constant,
                                                  helmholtz_link_residual, rotation_map,
                                                  silver_muller_decay, silver_muller_residual,
                                                  sine_shear_map, sup_ratio,
                                                  three_spheres_exponent, write_diagnostics_csv)

logger = logging.getLogger(__name__)

DEFAULT_SWEEP = "0.05,0.1,0.2,0.4"
DEFAULT_CONVERGENCE = ",".join(repr(0.4 / 2 ** n) for n in range(5))


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValidationError(f"Invalid parameter list {text!r} - {e}") from e


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args) -> ScenarioConfig:
    return ScenarioConfig.from_file(args.config)


def _default_wave(k: float) -> PlaneWaveSpec:
    return PlaneWaveSpec(k, (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))


def _wave_from(args) -> PlaneWaveSpec:
    if getattr(args, "config", None):
        return _scenario(args).waves[0]
    return _default_wave(args.k)


# -- subcommands ------------------------------------------------------------------------

def cmd_solve(args) -> int:
    scenario = _scenario(args)
    mesh = build_mesh(scenario.mesh_a, scenario.t_a, scenario)
    system, solutions = solve_scatterer(mesh, scenario.waves, scenario.k, scenario.quad_order)
    out = _out_dir(args)
    print(f"unknowns: {system.basis.n_dof}  condition estimate: {system.condition:.6e}")
    for j, solution in enumerate(solutions, start=1):
        write_current_csv(solution.current, out / f"current_wave{j}.csv")
        print(f"wave{j}: solve residual {solution.current.residual:.3e}  "
              f"boundary residual {pec_residual(solution.current):.3e}")
    return 0


def cmd_farfield(args) -> int:
    scenario = _scenario(args)
    mesh = build_mesh(scenario.mesh_a, scenario.t_a, scenario)
    _, solutions = solve_scatterer(mesh, scenario.waves, scenario.k, scenario.quad_order, scenario.grid)
    out = _out_dir(args)
    results = []
    for j, solution in enumerate(solutions, start=1):
        pattern = solution.far_field
        write_far_field_csv(pattern, out / f"farfield_wave{j}.csv")
        radial, relation = pattern.identity_errors()
        print(f"wave{j}: |E_inf|_L2 = {pattern.l2_norm():.6e}  transversality {radial:.2e}  "
              f"H = x cross E {relation:.2e}")
        results += [DiagnosticResult(f"farfield_transversality_wave{j}", {}, radial, 1e-3),
                    DiagnosticResult(f"farfield_relation_wave{j}", {}, relation, 1e-3)]
    write_diagnostics_csv(results, out / "farfield_identities.csv")
    return 0


def cmd_mie_validate(args) -> int:
    k = args.ka / args.radius
    wave = _default_wave(k)
    grid = sphere_grid(args.n_theta, args.n_phi)
    mesh = make_icosphere(args.radius, args.mesh_level)
    _, (solution,) = solve_scatterer(mesh, [wave], k, args.quad, grid)
    reference = mie_far_field(args.radius, k, wave, grid)
    error = relative_far_field_error(reference, solution.far_field)
    passed = error < args.threshold
    out = _out_dir(args)
    write_far_field_csv(solution.far_field, out / "mie_validate_farfield.csv")
    write_diagnostics_csv([DiagnosticResult("mie_far_field", {"ka": args.ka, "level": args.mesh_level,
                                                              "triangles": mesh.n_triangles},
                                            error, args.threshold)],
                          out / "mie_validate.csv")
    print(f"relative far-field error: {error:.6e} ({'pass' if passed else 'fail'}, threshold {args.threshold})")
    return 0


def cmd_distance(args) -> int:
    mesh_a, mesh_b = load_mesh(args.a), load_mesh(args.b)
    radius = max(np.linalg.norm(m.vertices, axis=1).max() for m in (mesh_a, mesh_b))
    params = ClassParams(R0=args.R0 if args.R0 is not None else float(radius))
    report = distance_report(Scatterer(mesh_a, infer_kind(mesh_a), params),
                             Scatterer(mesh_b, infer_kind(mesh_b), params), args.res)
    write_csv(_out_dir(args) / "distance.csv", ("d", "d_hat", "d_tilde", "res"),
              [(report.d, report.d_hat, report.d_tilde, report.sampling_resolution)])
    print(f"d = {report.d:.6g}  d_hat = {report.d_hat:.6g}  d_tilde = {report.d_tilde:.6g}  (res {args.res})")
    return 0


def cmd_radiation_check(args) -> int:
    scenario = _scenario(args)
    mesh = build_mesh(scenario.mesh_a, scenario.t_a, scenario)
    _, solutions = solve_scatterer(mesh, scenario.waves[:1], scenario.k, scenario.quad_order)
    solution = solutions[0]
    k, wave, grid = scenario.k, scenario.waves[0], scenario.grid
    r = args.radius if args.radius is not None else 20.0 / k
    near, far, ratio = silver_muller_decay(solution.scattered, r, grid)
    incident = silver_muller_residual(lambda x: plane_wave_fields(wave, x), r, grid)
    sample = scenario.R0 + 1.0
    points = sample * sphere_grid(4, 8).directions
    helmholtz = helmholtz_link_residual(solution.scattered, points, k, args.h_fd)
    e1 = decay_constant(solution.scattered, [sample + 0.5, 2 * sample, 4 * sample], grid)
    results = [
        DiagnosticResult("silver_muller_decay_ratio", {"r": r}, abs(ratio - 4.0), 1.0),
        DiagnosticResult("silver_muller_residual", {"r": r}, near.residual, math.inf, advisory=True),
        DiagnosticResult("silver_muller_dual_residual", {"r": r}, near.dual_residual, math.inf, advisory=True),
        DiagnosticResult("incident_silver_muller", {"r": r}, incident.residual, math.inf, advisory=True),
        DiagnosticResult("helmholtz_vector", {"h_fd": args.h_fd}, helmholtz.vector_helmholtz, 1e-3),
        DiagnosticResult("helmholtz_divergence", {"h_fd": args.h_fd}, helmholtz.divergence, 1e-3),
        DiagnosticResult("sommerfeld", {"h_fd": args.h_fd}, helmholtz.sommerfeld, math.inf, advisory=True),
        DiagnosticResult("decay_constant", {}, e1, math.inf, advisory=True),
    ]
    write_diagnostics_csv(results, _out_dir(args) / "radiation_check.csv")
    print(f"Silver-Muller residual r={r:.4g}: {near.residual:.4e}, r={2 * r:.4g}: {far.residual:.4e}, "
          f"unweighted decay ratio {ratio:.3f}")
    print(f"incident wave alone: {incident.residual:.4e} (not outgoing)")
    return 0


def _multipole(k: float, n: int):
    def u(x):
        r = np.linalg.norm(x, axis=1)
        cos_theta = np.divide(x[:, 2], r, out=np.ones_like(r), where=r > 0)
        return special.spherical_jn(n, k * r) * special.eval_legendre(n, cos_theta)
    return u


def cmd_three_spheres(args) -> int:
    wave = _wave_from(args)
    if args.multipole > 0:
        u = _multipole(wave.k, args.multipole)
    else:
        def u(x):
            return np.exp(1j * wave.k * (x @ wave.d))
    result = three_spheres_exponent(u, args.rho1, args.rho, args.rho2)
    ratio = sup_ratio(u, args.rho, args.s)
    parameters = {"rho1": args.rho1, "rho": args.rho, "rho2": args.rho2, "n": args.multipole}
    write_diagnostics_csv([DiagnosticResult("three_spheres_beta", parameters, result.beta, 1.0, advisory=True),
                           DiagnosticResult("sup_ratio", dict(parameters, s=args.s), ratio, math.inf, advisory=True)],
                          _out_dir(args) / "three_spheres.csv")
    print(f"beta = {result.beta:.8f}  norms = {', '.join(f'{n:.6e}' for n in result.norms)}  "
          f"sup ratio = {ratio:.6f}")
    return 0


def cmd_transform_check(args) -> int:
    wave = _wave_from(args)
    maps = {"affine": lambda: affine_map([[2.0, 0.3, 0.0], [0.0, 1.5, 0.2], [0.1, 0.0, 1.0]], [0.1, -0.2, 0.3]),
            "rotation": lambda: rotation_map([0.3, -0.2, 0.5]),
            "shear": lambda: sine_shear_map(0.1)}
    T = maps[args.map]()

    def u(y):
        return plane_wave_fields(wave, y)[0]

    def curl_u(y):
        return 1j * wave.k * plane_wave_fields(wave, y)[1]

    results, h = [], args.h_fd
    previous = None
    for _ in range(args.halvings + 1):
        residual = curl_transform_check(u, T, h, curl_u=curl_u, seed=args.seed)
        order = math.log2(previous / residual) if previous and residual > 0 else math.nan
        print(f"h_fd = {h:.3e}  residual = {residual:.6e}  observed order = {order:.3f}")
        results.append(DiagnosticResult(f"curl_transform_{args.map}", {"h_fd": h}, residual, math.inf, advisory=True))
        previous, h = residual, h / 2.0
    write_diagnostics_csv(results, _out_dir(args) / f"transform_check_{args.map}.csv")
    return 0


def cmd_stability_sweep(args) -> int:
    scenario = _scenario(args)
    family = args.family or (scenario.mesh_b if scenario.mesh_b in FAMILIES else "translate")
    params = _parse_floats(args.params)
    out = _out_dir(args)
    records = run_sweep(scenario, family, params, workers=args.workers,
                        output=out / f"stability_{family}.csv")
    print(f"{len(records)} records written to {out / f'stability_{family}.csv'}")
    if len(records) >= 2:
        summary = summarize_sweep(records, scenario.class_h, scenario.R0, 2 * scenario.distance_res)
        print(f"monotone: {summary.monotonicity.passed}  spearman(eps, eps0) = {summary.spearman:.4f}  "
              f"envelope C = {summary.envelope_C:.4g}")
        if summary.fit is not None:
            print(f"fit: A = {summary.fit.A:.6g}  C = {summary.fit.C:.6g}  residual = {summary.fit.residual:.3e}")
    return 0


def cmd_convergence_study(args) -> int:
    scenario = _scenario(args)
    family = args.family or "translate"
    report = run_convergence_study(scenario, family, _parse_floats(args.params), workers=args.workers)
    out = _out_dir(args)
    write_records_csv(report.records, out / f"convergence_{family}.csv")
    write_csv(out / f"convergence_{family}_summary.csv", ("floor", "decreasing", "reached_floor"),
              [(report.floor, report.decreasing, report.reached_floor)])
    for record in report.records:
        print(f"t = {record.t:.6g}  eps = {record.eps_near:.6e}")
    print(f"floor = {report.floor:.6e}  decreasing = {report.decreasing}  reached floor = {report.reached_floor}")
    return 0


# -- parser -----------------------------------------------------------------------------

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="scatter_bench", description="Maxwell PEC scattering workbench")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, scenario=False, optional_scenario=False):
        p = sub.add_parser(name, help=help_text)
        if scenario:
            p.add_argument("--config", required=True, help="Scenario file (key = value lines)")
        elif optional_scenario:
            p.add_argument("--config", help="Scenario file; only wave1 is used")
            p.add_argument("--k", type=float, default=1.0, help="Wavenumber when no scenario is given")
        p.add_argument("--out", default=str(config.RESULTS_DIR), help="Output directory")
        p.set_defaults(handler=handler)
        return p

    add("solve", cmd_solve, "Solve scatterer A and write its surface currents", scenario=True)
    add("farfield", cmd_farfield, "Far-field patterns of scatterer A", scenario=True)

    p = add("mie-validate", cmd_mie_validate, "Compare the solver with the sphere series")
    p.add_argument("--ka", type=float, default=1.0)
    p.add_argument("--mesh-level", type=int, default=3)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--quad", type=int, default=config.DEFAULT_QUAD_ORDER)
    p.add_argument("--n-theta", type=int, default=config.FARFIELD_N_THETA)
    p.add_argument("--n-phi", type=int, default=config.FARFIELD_N_PHI)
    p.add_argument("--threshold", type=float, default=config.MIE_THRESHOLD)

    p = add("distance", cmd_distance, "Distances d, d_hat, d_tilde between two mesh files")
    p.add_argument("--a", required=True, help="Mesh file of A")
    p.add_argument("--b", required=True, help="Mesh file of B")
    p.add_argument("--res", type=float, required=True, help="Sampling resolution")
    p.add_argument("--R0", type=float, default=None, help="Enclosing radius (default: smallest valid)")

    p = add("radiation-check", cmd_radiation_check, "Radiation-condition and Helmholtz residuals", scenario=True)
    p.add_argument("--radius", type=float, default=None, help="Inner radius (default 20 / k)")
    p.add_argument("--h-fd", type=float, default=1e-3)

    p = add("three-spheres", cmd_three_spheres, "Three-spheres exponent and sup ratio", optional_scenario=True)
    p.add_argument("--rho1", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--rho2", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--multipole", type=int, default=0, help="Use j_n(kr) P_n(cos theta) instead of the plane wave")

    p = add("transform-check", cmd_transform_check, "Curl change-of-variables residual", optional_scenario=True)
    p.add_argument("--map", choices=("affine", "rotation", "shear"), default="shear")
    p.add_argument("--h-fd", type=float, default=1e-2)
    p.add_argument("--halvings", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)

    for name, handler, default, help_text in (
            ("stability-sweep", cmd_stability_sweep, DEFAULT_SWEEP, "Sweep a scatterer family"),
            ("convergence-study", cmd_convergence_study, DEFAULT_CONVERGENCE, "Family with t decreasing to 0")):
        p = add(name, handler, help_text, scenario=True)
        p.add_argument("--family", choices=FAMILIES, default=None)
        p.add_argument("--params", default=default, help="Comma-separated family parameters")
        p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.handler(args)
    except ValidationError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SolverError as e:
        logger.error(f"{args.command}: solver failure: {e}")
        print(f"solver failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
