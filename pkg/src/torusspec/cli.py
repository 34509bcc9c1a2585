"""Command-line interface: ``sweep``, ``check``, ``spectrum`` and ``witness``.

Exit codes: 0 success, 1 a check or sweep record failed, 2 configuration
error (including tolerance-infeasible checks), 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .checks import FAIL, INFEASIBLE, SUITES, run_checks
from .dirac import DiracOperator, SpinStructure, first_positive_weighted_eigenvalue, kernel_dimension
from .errors import ConfigurationError, ConvergenceError, ResolutionError
from .geometry import CutoffProfile, bump_factor, check_parameter_chain, generalized_volume, make_grid
from .laplace import LaplaceOperator, first_weighted_eigenvalue
from .report import write_outputs
from .sweep import _PARSERS, load_config, run_sweep
from .witness import witness_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 1, 2, 3

log = logging.getLogger("torusspec")


def _typed(key):
    def parse(text):
        try:
            return _PARSERS[key](text)
        except (ValueError, ZeroDivisionError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def _spin(text):
    try:
        return SpinStructure.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="torusspec",
        description="Weighted Laplace and Dirac spectra of bubble-degenerated metrics on the flat torus.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run the (alpha, eps) sweep and write reports")
    s.add_argument("--config", help="key = value file; flags override it")
    s.add_argument("--period", "-L", type=_typed("period"))
    s.add_argument("--n", dest="nodes_per_axis", type=int)
    s.add_argument("--delta", type=_typed("delta"))
    s.add_argument("--alphas", type=_typed("alphas"), help="comma list, fractions allowed")
    s.add_argument("--ratios", dest="epsilon_ratios", type=_typed("epsilon_ratios"),
                   help="eps/alpha values, comma list")
    s.add_argument("--spin", type=_spin, help="phases such as 0,0 or 1/2,0")
    s.add_argument("--laplace-tol", type=float)
    s.add_argument("--dirac-tol", type=float)
    s.add_argument("--kernel-tol", type=float)
    s.add_argument("--cutoff-order", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", dest="output_dir")
    s.add_argument("--formats", type=_typed("formats"), help="subset of csv,json,gnuplot")
    s.add_argument("--no-figures", dest="figures", action="store_const", const=False)

    c = sub.add_parser("check", help="run self-check suites")
    c.add_argument("suites", nargs="*", help=f"subset of: {', '.join(SUITES)}")
    c.add_argument("--tighten", type=float, default=1.0, help="divide every tolerance by this factor")
    c.add_argument("--json", action="store_true")

    for name, helptext in (("spectrum", "first weighted eigenvalues for one (alpha, eps)"),
                           ("witness", "witness integrals and upper bound for one (alpha, eps)")):
        q = sub.add_parser(name, help=helptext)
        q.add_argument("--alpha", type=_typed("delta"), required=True)
        q.add_argument("--epsilon", "--eps", type=_typed("delta"), required=True)
        q.add_argument("--period", "-L", type=_typed("period"), default=1.0)
        q.add_argument("--n", type=int, default=128)
        q.add_argument("--spin", type=_spin, default=SpinStructure())
        q.add_argument("--json", action="store_true")
        if name == "spectrum":
            q.add_argument("--count", type=int, default=4)
            q.add_argument("--tol", type=float, default=1e-10)
        else:
            q.add_argument("--delta", type=_typed("delta"), default=1 / 8)
            q.add_argument("--cutoff-order", type=int, default=5)
    return p


def _emit(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2))
    else:
        for k, v in payload.items():
            print(f"{k} = {v}")


def cmd_sweep(args) -> int:
    keys = ("period", "nodes_per_axis", "delta", "alphas", "epsilon_ratios", "spin", "laplace_tol",
            "dirac_tol", "kernel_tol", "cutoff_order", "workers", "seed", "output_dir", "formats",
            "figures")
    config = load_config(args.config, **{k: getattr(args, k) for k in keys})
    records = run_sweep(config)
    for path in write_outputs(records, config):
        print(path)
    for r in records:
        print(f"alpha={r.alpha:g} eps={r.epsilon:g} {r.status} mu1_vol/8pi={r.mu1_vol / (8 * np.pi):.4f} "
              f"lambda1sq_vol/4pi={r.lambda1sq_vol / (4 * np.pi):.4f} ratio={r.ratio:.4f}",
              file=sys.stderr)
    if any(r.status == "nonconvergence" for r in records):
        return EXIT_NONCONVERGENCE
    return EXIT_FAIL if any(not r.ok for r in records) else EXIT_OK


def cmd_check(args) -> int:
    try:
        results = run_checks(args.suites, args.tighten)
    except KeyError as exc:
        raise ConfigurationError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    if args.json:
        print(json.dumps([r.__dict__ for r in results], indent=2))
    else:
        for r in results:
            print(r.line())
    statuses = {r.status for r in results}
    if FAIL in statuses:
        return EXIT_FAIL
    return EXIT_CONFIG if INFEASIBLE in statuses else EXIT_OK


def _setup(args):
    grid = make_grid(args.period, args.n)
    check_parameter_chain(grid.period, args.alpha, args.epsilon, getattr(args, "delta", None))
    return grid, bump_factor(grid, args.alpha, args.epsilon)


def cmd_spectrum(args) -> int:
    if args.count < 2:
        raise ConfigurationError("count must be >= 2")
    grid, factor = _setup(args)
    lap = first_weighted_eigenvalue(LaplaceOperator(grid), factor, args.tol, method="lanczos",
                                    nev=args.count + 2)
    dop = DiracOperator(grid, args.spin)
    dr = first_positive_weighted_eigenvalue(dop, factor, args.tol, method="lanczos", nev=args.count + 2)
    vol = generalized_volume(factor, grid)
    payload = {
        "alpha": args.alpha,
        "epsilon": args.epsilon,
        "n": grid.nodes_per_axis,
        "spin": str(args.spin),
        "volume": vol,
        "laplace": [0.0] + lap.diagnostics["ritz_values"][: args.count - 1],
        "dirac_positive": [v for v in dr.diagnostics["ritz_values"] if v > 0][: args.count],
        "dirac_kernel_dim": kernel_dimension(dop, factor=factor),
        "mu1_vol_over_8pi": lap.eigenvalue * vol / (8 * np.pi),
        "lambda1sq_vol_over_4pi": dr.eigenvalue**2 * vol / (4 * np.pi),
    }
    _emit(payload, args.json)
    return EXIT_OK


def cmd_witness(args) -> int:
    grid, factor = _setup(args)
    rep = witness_report(grid, CutoffProfile(args.delta, args.cutoff_order), factor, args.epsilon, args.spin)
    payload = {"alpha": args.alpha, "epsilon": args.epsilon, "n": grid.nodes_per_axis, **rep.__dict__,
               "upper_bound_over_4pi": rep.upper_bound / (4 * np.pi)}
    _emit(payload, args.json)
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "check": cmd_check, "spectrum": cmd_spectrum, "witness": cmd_witness}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors, 0 for --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ResolutionError) as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
