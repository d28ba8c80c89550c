"""Command-line front end.

    ift-rigidity cohomology PRES REP
    ift-rigidity rigidity PRES REP [REP_PRIME]
    ift-rigidity solve-fiber {parabola,circle} --target Y1 Y2
    ift-rigidity demo {parabola,circle,shrinking-radius}

Exit codes: 0 success (rigid), 1 file or parse error / unknown demo,
2 validation failure, 3 rank ambiguity under ``--strict``, 4 not rigid,
5 conjugator recovery failed.  Output depends only on the inputs and the
seed.  ``IFT_RIGIDITY_RANK_TOL`` sets the rank tolerance when ``--rank-tol``
is absent.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .charts import circle_pair, parabola_pair, shrinking_radius_table
from .cohomology import GammaModule, delta1, delta1_scale, h1_dimension, nullity, saturate_relators
from .exceptions import (
    Diverged,
    IftRigidityError,
    MaxIterations,
    NotInNeighborhood,
    ParseError,
    RecoveryFailed,
    WordError,
)
from .ift import certify_neighborhood, solve_fiber
from .liegroup import read_representation
from .rigidity import attach_conjugator, check_local_rigidity, solve_conjugator
from .words import read_presentation

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVALID = 2
EXIT_AMBIGUOUS = 3
EXIT_NOT_RIGID = 4
EXIT_RECOVERY = 5

DEMOS = ("parabola", "circle", "shrinking-radius")
FIBER_PAIRS = {"parabola": parabola_pair, "circle": circle_pair}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12e}"
    if v is None:
        return "none"
    return str(v)


class Report:
    """Ordered ``key = value`` pairs plus optional tables, rendered either for
    people or for line-oriented parsing."""

    def __init__(self, title):
        self.title = title
        self.pairs = []
        self.tables = []

    def add(self, key, value):
        self.pairs.append((key, value))

    def extend(self, items):
        for k, v in items:
            self.add(k, v)

    def table(self, name, columns, rows):
        self.tables.append((name, columns, rows))

    def render(self, style):
        lines = []
        if style == "machine":
            lines.extend(f"{k} = {fmt_value(v)}" for k, v in self.pairs)
            for name, columns, rows in self.tables:
                lines.append(f"{name}_columns = {' '.join(columns)}")
                for i, row in enumerate(rows):
                    lines.append(f"{name}_{i} = {' '.join(fmt_value(x) for x in row)}")
        else:
            lines.append(self.title)
            width = max((len(k) for k, _ in self.pairs), default=0)
            lines.extend(f"  {k.ljust(width)}  {fmt_value(v)}" for k, v in self.pairs)
            for name, columns, rows in self.tables:
                cells = [[fmt_value(x) for x in row] for row in rows]
                widths = [max([len(c)] + [len(r[j]) for r in cells]) for j, c in enumerate(columns)]
                lines.append("")
                lines.append(f"{name}:")
                lines.append("  " + "  ".join(c.rjust(w) for c, w in zip(columns, widths)))
                lines.extend("  " + "  ".join(x.rjust(w) for x, w in zip(r, widths)) for r in cells)
        return "\n".join(lines) + "\n"


def _load(args, with_prime=False):
    try:
        pres = read_presentation(args.presentation)
        rep = read_representation(args.representation, pres)
        rep_prime = None
        if with_prime and args.perturbed is not None:
            rep_prime = read_representation(args.perturbed, pres)
    except (ParseError, WordError) as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    except OSError as exc:
        raise CliError(f"{exc.filename}: {exc.strerror}", EXIT_PARSE) from None
    return pres, rep, rep_prime


def cmd_cohomology(args):
    pres, rep, _ = _load(args)
    module = GammaModule.from_representation(rep)
    subset = saturate_relators(module, pres, args.rank_tol)
    dim, details = h1_dimension(module, pres, subset, args.rank_tol)
    full = nullity(delta1(module, pres), args.rank_tol, delta1_scale(module, pres))
    out = Report("cohomology")
    out.extend([
        ("generators", pres.n_generators),
        ("relators", pres.n_relators),
        ("module_dim", module.dimension),
        ("relator_subset", " ".join(map(str, subset))),
        ("rank_delta0", details.rank_d0),
        ("rank_delta1", details.rank_d1),
        ("nullity_delta1", details.nullity_d1),
        ("nullity_delta1_full", full),
        ("h1_dim", dim),
        ("complex_residual", details.complex_residual),
    ])
    for i, w in enumerate(details.warnings):
        out.add(f"warning_{i}", w)
    code = EXIT_AMBIGUOUS if args.strict and details.warnings else EXIT_OK
    return out, code


def cmd_rigidity(args):
    pres, rep, rep_prime = _load(args, with_prime=True)
    report = check_local_rigidity(rep, args.rank_tol, args.fd_step, seed=args.seed)
    out = Report("rigidity")
    code = EXIT_OK if report.rigid else EXIT_NOT_RIGID
    failure = None
    if rep_prime is not None and report.rigid:
        try:
            sol = solve_conjugator(rep, rep_prime, tol=args.tol, override_radius=args.override_radius,
                                   report=report, fd_step=args.fd_step, rank_tol=args.rank_tol,
                                   seed=args.seed)
            attach_conjugator(report, sol)
        except (RecoveryFailed, NotInNeighborhood, Diverged, MaxIterations) as exc:
            failure = f"{type(exc).__name__}: {exc}"
            code = EXIT_RECOVERY
    out.extend(report.items())
    if failure is not None:
        out.add("recovery_error", failure)
    if code == EXIT_OK and args.strict and report.warnings:
        code = EXIT_AMBIGUOUS
    return out, code


def _fiber_report(name, pair, y, args, force):
    phi, psi = pair
    constants = certify_neighborhood(phi, psi, seed=args.seed)
    inside = float(np.linalg.norm(y)) < constants.w_radius
    x, trace = solve_fiber(phi, psi, y, constants, tol=args.tol,
                           override_radius=force or args.override_radius)
    out = Report(name)
    out.extend([
        ("target", " ".join(fmt_value(v) for v in y)),
        ("C", constants.cmax),
        ("delta", constants.delta),
        ("w_radius", constants.w_radius),
        ("target_norm", float(np.linalg.norm(y))),
        ("inside_w", inside),
        ("converged", trace.converged),
        ("iterations", trace.iterations),
        ("x", " ".join(fmt_value(v) for v in x)),
        ("fiber_residual", float(np.linalg.norm(phi(x) - y))),
    ])
    rows = []
    for n, unorm in enumerate(trace.u_norms):
        ratio = unorm / trace.u_norms[n - 1] if n > 0 and trace.u_norms[n - 1] > 0 else None
        vnorm = trace.v_norms[n] if n < len(trace.v_norms) else None
        rows.append((n, fmt_value(trace.xs[n][0]) if phi.domain_dim else "-", unorm, vnorm, ratio))
    out.table("trace", ("n", "x", "u_norm", "v_norm", "ratio"), rows)
    return out, x


def cmd_solve_fiber(args):
    if len(args.target) != 2:
        raise CliError("--target needs two values", EXIT_INVALID)
    out, _ = _fiber_report(args.chart, FIBER_PAIRS[args.chart](), np.array(args.target), args,
                           force=False)
    return out, EXIT_OK


def cmd_demo(args):
    if args.name not in DEMOS:
        raise CliError(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}", EXIT_PARSE)
    if args.name == "shrinking-radius":
        rows = shrinking_radius_table(args.n_max)
        radii = [r[3] for r in rows]
        out = Report("shrinking-radius")
        out.add("n_max", args.n_max)
        out.add("strictly_decreasing", all(b < a for a, b in zip(radii, radii[1:])))
        out.table("radius", ("N", "C", "delta", "w_radius", "witness_norm"), rows)
        return out, EXIT_OK
    a = args.a
    if args.name == "parabola":
        y = np.array([a, a * a])
    else:
        y = np.array([np.sin(a), np.cos(a) - 1.0])
    out, x = _fiber_report(args.name, FIBER_PAIRS[args.name](), y, args, force=True)
    out.pairs.insert(0, ("a", a))
    out.add("error", abs(float(x[0]) - a))
    return out, EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "machine"), default="human")
    common.add_argument("--tol", type=float, default=None,
                        help="solver / conjugation tolerance")
    common.add_argument("--rank-tol", type=float, default=None,
                        help="relative rank tolerance (default eps*max(shape))")
    common.add_argument("--fd-step", type=float, default=1e-5)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--strict", action="store_true",
                        help="exit 3 on rank-ambiguity warnings")
    common.add_argument("--override-radius", action="store_true",
                        help="solve even when the target is outside the certified ball")

    parser = argparse.ArgumentParser(prog="ift-rigidity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cohomology", parents=[common], help="dimension of H^1 for the adjoint module")
    p.add_argument("presentation")
    p.add_argument("representation")
    p.set_defaults(func=cmd_cohomology)

    p = sub.add_parser("rigidity", parents=[common], help="local rigidity and conjugator recovery")
    p.add_argument("presentation")
    p.add_argument("representation")
    p.add_argument("perturbed", nargs="?")
    p.set_defaults(func=cmd_rigidity)

    p = sub.add_parser("solve-fiber", parents=[common], help="solve phi(x) = y on a built-in chart")
    p.add_argument("chart", choices=sorted(FIBER_PAIRS))
    p.add_argument("--target", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_solve_fiber)

    p = sub.add_parser("demo", parents=[common], help="built-in demonstrations")
    p.add_argument("name")
    p.add_argument("--a", type=float, default=0.01, help="fibre parameter for parabola/circle")
    p.add_argument("--n-max", type=int, default=10, help="largest N for shrinking-radius")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "tol", None) is None and args.command == "rigidity":
        args.tol = 1e-8
    try:
        out, code = args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (IftRigidityError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(out.render(args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
