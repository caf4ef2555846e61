"""Command line: ``riccilab <command> --config <path>``.

Commands are ``mesh-info``, ``spectrum``, ``flow`` and ``verify``. Exit codes:
0 pass, 1 verification failed, 2 input or config error, 3 inconclusive
(run did not converge), 4 numerical failure (step collapse or eigensolver).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import serialize
from .config import ConfigError, RunConfig, config_dict, load_config
from .flow import StepCollapseError, run_flow
from .geometry import (GeometryError, curvature_state, metric_from_positions, perturb,
                       rescale_to_area)
from .mesh import MeshError, build_flat_torus, build_icosphere, read_off
from .spectral import EigenSolverError, assemble_mass, assemble_stiffness, first_nonzero_eigenpair
from .theorem import semicontinuity_verdict, summarize

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_INCONCLUSIVE = 3
EXIT_NUMERICAL = 4


def initial_metric(cfg: RunConfig):
    """Build, perturb and area-normalize the configured starting metric."""
    p = cfg.mesh_params
    if cfg.mesh_kind == "icosphere":
        metric = metric_from_positions(build_icosphere(p["subdivisions"], p["radius"]))
    elif cfg.mesh_kind == "flat_torus":
        _, metric = build_flat_torus(p["m"], p["n"], p["width"], p["height"])
    else:
        metric = metric_from_positions(read_off(cfg.resolve(p["path"])))
    metric = perturb(metric, cfg.amplitude, cfg.seed)
    if cfg.normalize_area_to is not None:
        metric = rescale_to_area(metric, cfg.normalize_area_to)
    curvature_state(metric)
    return metric


def _require(cfg, path, name):
    if not path:
        raise ConfigError(f"output.{name} is required for this command")
    return cfg.resolve(path)


def cmd_mesh_info(cfg: RunConfig, out=sys.stdout) -> int:
    metric = initial_metric(cfg)
    mesh = metric.mesh
    print(f"V={mesh.n_vertices} E={mesh.n_edges} F={mesh.n_faces} "
          f"chi={mesh.euler_characteristic()}", file=out)
    print(f"total_area={metric.total_area():.12g}", file=out)
    return EXIT_PASS


def cmd_spectrum(cfg: RunConfig, out=sys.stdout) -> int:
    metric = initial_metric(cfg)
    sol = first_nonzero_eigenpair(assemble_stiffness(metric), assemble_mass(metric),
                                  cfg.flow.solver_tol)
    print(f"lambda1={sol.lambda1:.12g} residual={sol.residual:.3e} "
          f"iterations={sol.iterations}", file=out)
    return EXIT_PASS


def _write_trace(cfg, trace):
    path = cfg.trace_csv_path
    if not path:
        return None
    serialize.write_text(cfg.resolve(path), serialize.trace_csv(trace))
    side = serialize.sidecar_path(path)
    serialize.write_text(cfg.resolve(side), serialize.u_snapshots_csv(trace))
    return side


def _flow_summary(trace):
    last = trace.samples[-1]
    return {
        "converged": trace.converged,
        "collapsed": trace.collapsed,
        "message": trace.message,
        "steps": trace.steps,
        "t_final": trace.t_final,
        "n_samples": len(trace.samples),
        "initial_area": trace.samples[0].total_area,
        "final_area": last.total_area,
        "final_max_dev": last.max_dev,
        "final_lambda1": last.lambda1,
    }


def cmd_flow(cfg: RunConfig, out=sys.stdout) -> int:
    _require(cfg, cfg.trace_csv_path, "trace_csv_path")
    trace = run_flow(initial_metric(cfg), cfg.flow)
    _write_trace(cfg, trace)
    s = _flow_summary(trace)
    print(f"converged={s['converged']} steps={s['steps']} t_final={s['t_final']:.12g} "
          f"samples={s['n_samples']} max_dev={s['final_max_dev']:.3e} "
          f"lambda1={s['final_lambda1']:.12g}", file=out)
    if trace.collapsed:
        print(trace.message, file=out)
        return EXIT_NUMERICAL
    return EXIT_PASS if trace.converged else EXIT_INCONCLUSIVE


def cmd_verify(cfg: RunConfig, out=sys.stdout) -> int:
    report_path = _require(cfg, cfg.report_json_path, "report_json_path")
    metric = initial_metric(cfg)
    trace = run_flow(metric, cfg.flow)
    side = _write_trace(cfg, trace)
    report = semicontinuity_verdict(trace, cfg.epsilon_rel, cfg.window_fraction,
                                    check_rayleigh=trace.converged)
    if trace.collapsed:
        report.status = "numerical_failure"
    mesh = metric.mesh
    doc = {
        "format": "riccilab-report/1",
        "config": config_dict(cfg),
        "mesh": {"V": mesh.n_vertices, "E": mesh.n_edges, "F": mesh.n_faces,
                 "chi": mesh.euler_characteristic()},
        "flow": _flow_summary(trace),
        "verdict": report.as_dict(),
        "trace_csv_path": cfg.trace_csv_path,
        "u_snapshots_path": side,
    }
    serialize.write_text(report_path, serialize.dumps_json(doc))
    for line in summarize(report):
        print(line, file=out)
    if trace.collapsed:
        return EXIT_NUMERICAL
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(report.status, EXIT_INCONCLUSIVE)


COMMANDS = {
    "mesh-info": cmd_mesh_info,
    "spectrum": cmd_spectrum,
    "flow": cmd_flow,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="riccilab",
        description="Normalized Ricci flow and first-eigenvalue checks on triangulated surfaces.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to a JSON run configuration")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg)
    except (ConfigError, MeshError, GeometryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StepCollapseError, EigenSolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
