"""The ``higherlag`` command.

Subcommands read a problem file and write one CSV table or one report to
stdout or ``--out``. Exit codes: 0 success, 2 schema errors, 3 numeric
failures, 4 failed checks.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from contextlib import contextmanager
from typing import IO, Iterator, List, Optional, Sequence

from ._version import __version__
from .algebroid import check_axioms
from .config import NumericDefaults
from .errors import HigherLagError, IdentityFailure, NumericError, SchemaError
from .expr import base_names
from .mechanics import force_samples, integrate_base, momentum, transversality_check
from .problem import ProblemFile, load_problem
from .reports import Report, VerifyReport
from .solver import solve, verify_solution
from .suites import DEFAULT_SUITES, run_suites, verify_problem

logger = logging.getLogger(__name__)

FORMATS = ("text", "yaml")


# --------------------------------------------------------------------------- #
# Output
# --------------------------------------------------------------------------- #


@contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh
    except OSError as e:
        raise SchemaError(f"cannot write {path}: {e}") from e


def write_csv(
    out: IO[str],
    header: Sequence[str],
    rows: Sequence[Sequence[float]],
    digits: int = 17,
) -> None:
    """Header row and ``digits`` significant digits per value."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{float(v):.{digits}g}" for v in row])


def _emit(report: Report, fmt: str, out: IO[str]) -> None:
    out.write(report.to_yaml() if fmt == "yaml" else report.render_text())


def _load(args: argparse.Namespace) -> ProblemFile:
    problem = load_problem(args.file)
    overrides = {}
    if getattr(args, "tol", None) is not None:
        overrides[args.tol_setting] = args.tol
    return problem.with_settings(overrides)


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #


def cmd_check(args: argparse.Namespace) -> int:
    problem = _load(args)
    s = problem.settings
    report = check_axioms(
        problem.structure,
        tol=s.axiom_tol,
        n_samples=args.samples or s.axiom_samples,
        box=s.axiom_box,
    )
    with _output(args.out) as out:
        _emit(report, args.format, out)
    if not report.passed:
        raise IdentityFailure(
            f"axioms fail for {report.label or 'structure'}: "
            f"skew {report.max_skew:.3e}, compatibility {report.max_compat:.3e}"
        )
    return 0


def cmd_force(args: argparse.Namespace) -> int:
    problem = _load(args)
    A, L, path = problem.structure, problem.require_lagrangian(), problem.require_path()
    times = problem.sample_times(args.samples)
    samples = force_samples(
        A,
        L,
        path,
        times,
        method=args.method,
        external_force=problem.external_force,
        settings=problem.settings,
    )
    header = ["t"] + [f"F{i + 1}" for i in range(A.r)]
    rows = [[s.t, *s.F] for s in samples]
    with _output(args.out) as out:
        write_csv(out, header, rows, problem.settings.csv_digits)
    return 0


def cmd_momentum(args: argparse.Namespace) -> int:
    problem = _load(args)
    A, L, path = problem.structure, problem.require_lagrangian(), problem.require_path()
    trajectory = integrate_base(A, path)
    header = ["t"] + [f"m{i + 1}_{b}" for i in range(A.r) for b in range(L.k)]
    rows = []
    for t in problem.sample_times(args.samples):
        sample = momentum(A, L, path, float(t), trajectory)
        rows.append([sample.t, *sample.m.ravel()])
    with _output(args.out) as out:
        write_csv(out, header, rows, problem.settings.csv_digits)
    report = transversality_check(
        A,
        L,
        path,
        problem.boundary_condition(),
        tol=problem.settings.boundary_tol,
        trajectory=trajectory,
    )
    sys.stderr.write(report.render_text())
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    problem = _load(args)
    p = problem.collocation_problem()
    solution = solve(p, problem.initial_coefficients())
    check = verify_solution(p, solution.coefficients)
    sys.stderr.write(solution.report.render_text())
    sys.stderr.write(check.render_text())

    A, L = p.A, p.L
    path = solution.path()
    trajectory = integrate_base(A, path)
    times = problem.sample_times(args.samples)
    forces = force_samples(
        A,
        L,
        path,
        times,
        external_force=problem.external_force,
        trajectory=trajectory,
    )
    header = (
        ["t"]
        + [f"y{i + 1}" for i in range(A.r)]
        + base_names(A.m)
        + [f"F{i + 1}" for i in range(A.r)]
    )
    rows = []
    for t, f in zip(times, forces):
        y = path.curve.values(float(t))
        x = trajectory.value(float(t))
        rows.append([float(t), *map(float, y), *map(float, x), *f.F])
    with _output(args.out) as out:
        write_csv(out, header, rows, problem.settings.csv_digits)

    if not solution.converged:
        raise NumericError(f"solve: {solution.report.message}")
    if not check.passed:
        raise IdentityFailure(
            f"solution check fails on {check.nodes} nodes: "
            f"sup|F| {check.sup_force:.3e}, boundary {check.boundary_residual:.3e}"
        )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.file is None and not args.all and not args.suite:
        raise SchemaError("verify needs a problem file, --all or --suite")
    settings = NumericDefaults()
    if args.tol is not None:
        settings = settings.merged({"identity_tol": args.tol})
    report = VerifyReport(seed=args.seed)
    if args.all or args.suite:
        names = None if args.all else args.suite
        report.suites.extend(
            run_suites(args.seed, names, settings, args.scale).suites
        )
    if args.file is not None:
        problem = _load(args)
        report.suites.extend(verify_problem(problem, args.seed).suites)
    with _output(args.out) as out:
        _emit(report, args.format, out)
    if not report.passed:
        failed = [s.name for s in report.suites if not s.passed]
        raise IdentityFailure(f"failed suites: {', '.join(failed)}")
    return 0


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="higherlag",
        description="Higher-order variational calculus on almost Lie algebroids",
    )
    parser.add_argument("--version", action="version", version=__version__)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log INFO (-v) or DEBUG (-vv) messages to stderr",
    )
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--tol", type=float, help="override the check tolerance")
    common.add_argument("--samples", type=int, help="number of samples")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="check the algebroid axioms")
    p.add_argument("file")
    p.add_argument("--format", choices=FORMATS, default="text")
    p.set_defaults(func=cmd_check, tol_setting="axiom_tol")

    p = sub.add_parser("force", parents=[common], help="force samples as CSV")
    p.add_argument("file")
    p.add_argument("--method", choices=("taylor", "fd"), default="taylor")
    p.set_defaults(func=cmd_force, tol_setting="fd_tol")

    p = sub.add_parser("momentum", parents=[common], help="momentum samples as CSV")
    p.add_argument("file")
    p.set_defaults(func=cmd_momentum, tol_setting="boundary_tol")

    p = sub.add_parser("solve", parents=[common], help="solve by collocation")
    p.add_argument("file")
    p.set_defaults(func=cmd_solve, tol_setting="force_tol")

    p = sub.add_parser("verify", parents=[common], help="run identity suites")
    p.add_argument("file", nargs="?")
    p.add_argument("--all", action="store_true", help="run every built-in suite")
    p.add_argument(
        "--suite",
        action="append",
        choices=DEFAULT_SUITES.names(),
        help="run one built-in suite (repeatable)",
    )
    p.add_argument(
        "--scale",
        type=float,
        default=1.0,
        help="multiply every suite's case count",
    )
    p.add_argument("--format", choices=FORMATS, default="text")
    p.set_defaults(func=cmd_verify, tol_setting="identity_tol")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except HigherLagError as e:
        print(f"higherlag {args.command}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
