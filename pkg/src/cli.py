"""
Command line entry point: one binary with the subcommands trace, solve, asym,
yamabe and verify.

Exit codes: 0 success, 1 configuration or precondition error, 2 chattering guard,
3 undecided asymptotic verdict. Results go to stdout, diagnostics to stderr.

"""
import argparse
import logging
import os
import sys

from .solver.formal_solver import check_formal_residual, construct_formal_solution
from .tracer.PiecewiseField import centered_field, load_field, load_fields
from .tracer.asymptotics import Undecided, asymptotic_membership, capture_verdict
from .tracer.flow_tracer import TraceOptions, trace_flow, write_trace
from .utils.config import RunConfig, write_json
from .utils.errors import ChatteringGuard, ConfigError, PiecewiseFlowError
from .verify.suites import SUITES, run_suite
from .yamabe.TriangulatedSurface import load_mesh
from .yamabe.meshes import MESHES
from .yamabe.yamabe_flow import ConformalState, run_flow, write_run

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_CHATTERING, EXIT_UNDECIDED = 0, 1, 2, 3


def _trace_options(config):
    return TraceOptions(rtol=config.rtol, atol=config.atol, capture_radius=config.capture,
                        max_switches=config.max_switches, k_max=config.k_max)


def cmd_trace(config):
    config.validate(required=("cover", "fields", "x0"))
    field = load_field(config.cover, config.fields, config.equilibrium)
    try:
        trace = trace_flow(field, config.x0, config.t_end, _trace_options(config))
    except ChatteringGuard as err:
        write_trace(err.trace, config.out)
        print(f"chattering guard: {err}", file=sys.stderr)
        return EXIT_CHATTERING
    write_trace(trace, config.out)
    print(f"switches: {len(trace.switches)}")
    print(f"status: {trace.status}")
    return EXIT_OK


def _cell_field(config):
    '''Field of the configured cell re-centered at the equilibrium'''
    series, equilibrium = load_fields(config.fields, config.equilibrium)
    if equilibrium is None:
        raise ConfigError("solve and asym need an equilibrium block")
    if not 0 <= config.cell < len(series):
        raise ConfigError(f"cell {config.cell} out of range, {len(series)} fields")
    return centered_field(series[config.cell], equilibrium.point), equilibrium


def cmd_solve(config):
    config.validate(required=("fields", "c"))
    W, equilibrium = _cell_field(config)
    sol = construct_formal_solution(W, equilibrium.spectrum, config.c, config.order,
                                    resonance_tol=config.tol)
    path = write_json(sol.to_dict(), os.path.join(config.out, "solution.json"))
    print(f"residual: {check_formal_residual(sol):.3e}")
    print(f"resonances: {[{'J': list(J), 'i': i} for J, i in sol.resonance_log]}")
    print(f"written: {path}")
    return EXIT_OK


def cmd_asym(config):
    config.validate(required=("cover", "fields"))
    field = load_field(config.cover, config.fields, config.equilibrium)
    if field.equilibrium is None:
        raise ConfigError("asym needs an equilibrium block")
    if config.c is not None:
        W = centered_field(field.fields[config.cell], field.equilibrium.point)
        sol = construct_formal_solution(W, field.equilibrium.spectrum, config.c, config.order)
        verdict = asymptotic_membership(field, sol, config.cell, zero_tol=config.tol)
    elif config.x0 is not None:
        trace = trace_flow(field, config.x0, config.t_end, _trace_options(config))
        if trace.status != "captured":
            raise ConfigError(f"trajectory not captured by t={config.t_end}, raise t_end or capture")
        verdict, _ = capture_verdict(field, trace, config.order)
    else:
        raise ConfigError("asym needs either 'c' or 'x0'")
    print(verdict)
    return EXIT_UNDECIDED if isinstance(verdict, Undecided) else EXIT_OK


def cmd_yamabe(config):
    config.validate(required=("mesh",))
    surface = MESHES[config.mesh]() if config.mesh in MESHES else load_mesh(config.mesh)
    state = ConformalState(surface, config.u0)
    result = run_flow(state, config.t_end, rtol=config.rtol, atol=config.atol)
    write_run(result, os.path.join(config.out, "run.csv"))
    print(f"flips: {result.total_flips}")
    print(f"final deviation: {result.final_deviation:.3e}")
    return EXIT_OK


def cmd_verify(suite, seed=0, jobs=1, scale=1.0):
    results = run_suite(suite, seed=seed, scale=scale, jobs=jobs)
    for result in results:
        print(result)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return EXIT_OK if failed == 0 else EXIT_ERROR


COMMANDS = {"trace": cmd_trace, "solve": cmd_solve, "asym": cmd_asym, "yamabe": cmd_yamabe}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--config", required=True, help="run configuration JSON")
    run.add_argument("--t-end", type=float, dest="t_end")
    run.add_argument("--order", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--capture", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")

    parser = argparse.ArgumentParser(prog="piecewise-flow",
                                     description="Piecewise analytic flows, λ-series and Yamabe flips")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("trace", parents=[common, run], help="trace a trajectory across cells")
    sub.add_parser("solve", parents=[common, run], help="formal λ-series solution at the equilibrium")
    sub.add_parser("asym", parents=[common, run], help="eventual cell membership verdict")
    sub.add_parser("yamabe", parents=[common, run], help="discrete Yamabe flow with flips")
    verify = sub.add_parser("verify", parents=[common], help="run a property suite")
    verify.add_argument("suite", nargs="?", choices=sorted(SUITES) + ["all"])
    verify.add_argument("--suite", dest="suite_flag", choices=sorted(SUITES) + ["all"])
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--jobs", type=int, default=1)
    verify.add_argument("--scale", type=float, default=1.0, help="share of the full sample counts")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args.suite_flag or args.suite or "all", args.seed, args.jobs, args.scale)
        config = RunConfig.load(args.config)
        config.override(t_end=args.t_end, order=args.order, tol=args.tol, capture=args.capture,
                        seed=args.seed, out=args.out)
        return COMMANDS[args.command](config)
    except (PiecewiseFlowError, ValueError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR
