"""Command-line surface: barycenters, rate experiments, inequality checks.

Measures are CSV files with one row per atom and header ``weight,<coords>``;
the coordinate fields per space are the ones produced by each space's
``coord_fields`` (Gaussian atoms encode the mean then the row-major
covariance).  A flat ``key = value`` config file with one section per
subcommand can predefine any option; explicit flags win.

Exit codes: 0 success, 1 domain error (violations, failed hypotheses,
non-convergence), 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysis import (
    covering_number,
    default_probes,
    extension_limit,
    extension_vi_check,
    fit_variance_inequality,
    greedy_net_profile,
    pc_identity_check,
    BoundInputs,
    bound_theorem1,
    bound_theorem2_rate,
    _PC_SPACES,
)
from .barycenter import BarycenterProblem, DiscreteMeasure, SolverOptions, solve_barycenter
from .errors import GeobaryError
from .functionals import FunctionalSpec
from .gaussian import GaussianBures
from .gridot import GridWasserstein
from .metric_core import check_curvature_sign
from .plotting import svg_loglog
from .rates import RateExperiment, fit_loglog, rates_csv, run_rate_experiment
from .spaces import Euclidean, SpiderTree, Sphere, Wasserstein1D


@dataclass(frozen=True)
class Opt:
    name: str
    type: type
    default: object = None
    help: str = ""
    required: bool = False


_COMMON_SPACE = [
    Opt("space", str, help="euclidean|sphere|spider|wasserstein1d|gaussian|grid"),
    Opt("measure", str, help="CSV file: weight,<coord fields>"),
    Opt("rays", int, help="ray count for the spider tree"),
    Opt("grid-file", str, help="CSV of grid atom coordinates (grid space)"),
]

_SOLVER = [
    Opt("seed", int, 0),
    Opt("tol", float, 1e-10),
    Opt("restarts", int, 8),
    Opt("max-iter", int, 1000),
]

OPTIONS: dict[str, list[Opt]] = {
    "bary": _COMMON_SPACE
    + _SOLVER
    + [
        Opt("functional", str, "sqdist", "sqdist|kl|chi2|tv|interaction:ID|sinkhorn:G"),
        Opt("out", str, help="write the minimizer as CSV"),
    ],
    "rates": _COMMON_SPACE
    + _SOLVER
    + [
        Opt("functional", str, "sqdist"),
        Opt("ns", str, "16,64,256,1024", "comma-separated sample sizes"),
        Opt("reps", int, 100),
        Opt("out", str, help="CSV output path"),
        Opt("svg", str, help="optional log-log plot"),
        Opt("workers", int, help="worker cap (default GEOBARY_THREADS)"),
    ],
    "vi": _COMMON_SPACE
    + _SOLVER
    + [
        Opt("functional", str, "sqdist"),
        Opt("probes", int, 64, "number of random probes"),
        Opt("out", str, help="CSV output path"),
    ],
    "curvature": [
        Opt("space", str),
        Opt("rays", int),
        Opt("grid-file", str),
        Opt("dim", int, 2, "dimension parameter for parametric spaces"),
        Opt("target", str, help="NPC or PC"),
        Opt("samples", int, 1000),
        Opt("seed", int, 0),
    ],
    "cover": [
        Opt("points", str, help="CSV of point coordinates"),
        Opt("eps-min", float, 0.02),
        Opt("eps-max", float, 0.1),
        Opt("num", int, 12, "sweep size"),
        Opt("out", str),
        Opt("svg", str),
    ],
    "bound": [
        Opt("theorem", int, help="1 (doubling) or 2 (polynomial entropy)"),
        Opt("K1", float, 1.0),
        Opt("K2", float, 1.0),
        Opt("K3", float, 1.0),
        Opt("alpha", float, 1.0),
        Opt("beta", float, 1.0),
        Opt("C", float, 1.0),
        Opt("D", float, 1.0),
        Opt("n", int, 100),
        Opt("t", float, 1.0),
    ],
    "extend": _COMMON_SPACE
    + _SOLVER
    + [
        Opt("lam", float, 1.0, "extension factor"),
        Opt("probes", int, 64),
        Opt("out", str),
    ],
}


def _attr(name: str) -> str:
    return name.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geobary",
        description="Barycenters and variance-inequality checks on metric spaces",
    )
    parser.add_argument("--config", help="key = value config file, one section per subcommand")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        p = sub.add_parser(cmd)
        for o in opts:
            p.add_argument(f"--{o.name}", type=o.type, default=None, help=o.help)
    return parser


def _merge_config(args, parser):
    """Fill unset options from the config file, then from hard defaults."""
    section = {}
    if args.config:
        cp = configparser.ConfigParser()
        read = cp.read(args.config)
        if not read:
            parser.error(f"--config: cannot read {args.config}")
        if cp.has_section(args.command):
            section = dict(cp.items(args.command))
    for o in OPTIONS[args.command]:
        attr = _attr(o.name)
        if getattr(args, attr) is None:
            if o.name in section:
                try:
                    setattr(args, attr, o.type(section[o.name]))
                except ValueError:
                    parser.error(f"--{o.name}: bad config value {section[o.name]!r}")
            else:
                setattr(args, attr, o.default)
    return args


# -- measure / point IO ---------------------------------------------------------


def _read_csv(path, parser, flag):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        parser.error(f"{flag}: {exc}")
    if len(rows) < 2:
        parser.error(f"{flag}: need a header plus at least one row in {path}")
    header = [c.strip() for c in rows[0]]
    try:
        data = [[float(c) for c in r] for r in rows[1:]]
    except ValueError as exc:
        parser.error(f"{flag}: non-numeric cell in {path}: {exc}")
    return header, data


def _build_space(args, ncoords, parser):
    name = (args.space or "").lower()
    if name == "euclidean":
        return Euclidean(ncoords)
    if name == "sphere":
        return Sphere(ncoords)
    if name == "spider":
        rays = args.rays
        if rays is None:
            parser.error("--rays is required for the spider space")
        return SpiderTree(rays)
    if name == "wasserstein1d":
        return Wasserstein1D(ncoords)
    if name == "gaussian":
        d = (math.isqrt(1 + 4 * ncoords) - 1) // 2
        if d + d * d != ncoords:
            parser.error(f"--measure: {ncoords} coords is not mean+covariance for any d")
        return GaussianBures(d)
    if name == "grid":
        if args.grid_file is None:
            parser.error("--grid-file is required for the grid space")
        _, atom_rows = _read_csv(args.grid_file, parser, "--grid-file")
        return GridWasserstein(np.asarray(atom_rows))
    parser.error(f"--space: unknown space {args.space!r}")


def _load_measure(args, parser):
    if args.space is None or args.measure is None:
        parser.error("--space and --measure are required")
    header, data = _read_csv(args.measure, parser, "--measure")
    if header[0] != "weight":
        parser.error("--measure: first CSV column must be 'weight'")
    ncoords = len(header) - 1
    space = _build_space(args, ncoords, parser)
    weights = np.array([r[0] for r in data])
    try:
        atoms = tuple(space.point_from_row(r[1:]) for r in data)
        measure = DiscreteMeasure(atoms, weights / weights.sum())
    except (ValueError, GeobaryError) as exc:
        parser.error(f"--measure: {exc}")
    return space, measure


def _parse_functional(text, parser) -> FunctionalSpec:
    t = text.strip().lower()
    if t == "sqdist":
        return FunctionalSpec.squared_distance()
    if t in ("kl", "chi2", "tv"):
        return FunctionalSpec.fdivergence(t)
    if t.startswith("interaction:"):
        return FunctionalSpec.interaction(t.split(":", 1)[1])
    if t.startswith("sinkhorn:"):
        try:
            return FunctionalSpec.sinkhorn(float(t.split(":", 1)[1]))
        except ValueError:
            parser.error(f"--functional: bad gamma in {text!r}")
    parser.error(f"--functional: unknown functional {text!r}")


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        tol=args.tol, max_iter=args.max_iter, restarts=args.restarts, seed=args.seed
    )


def _write(path: Optional[str], text: str):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ------------------------------------------------------------------


def _cmd_bary(args, parser) -> int:
    space, P = _load_measure(args, parser)
    spec = _parse_functional(args.functional, parser)
    res = solve_barycenter(BarycenterProblem(space, spec, P, _solver_options(args)))
    print(f"status {res.status}")
    print(f"objective {res.objective!r}")
    for i, c in enumerate(res.candidates):
        row = ",".join(repr(v) for v in space.point_to_row(c))
        print(f"candidate {i} {row}")
    if args.out:
        lines = ["weight," + ",".join(space.coord_fields())]
        for c in res.candidates:
            lines.append("1.0," + ",".join(repr(v) for v in space.point_to_row(c)))
        _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_rates(args, parser) -> int:
    space, P = _load_measure(args, parser)
    spec = _parse_functional(args.functional, parser)
    try:
        ns = tuple(int(s) for s in args.ns.split(","))
    except ValueError:
        parser.error(f"--ns: bad sample sizes {args.ns!r}")
    problem = BarycenterProblem(space, spec, P, _solver_options(args))
    fit = run_rate_experiment(
        RateExperiment(problem=problem, ns=ns, reps=args.reps, seed=args.seed),
        workers=args.workers,
    )
    _write(args.out, rates_csv(fit))
    if fit.degenerate:
        print("degenerate: all replicate errors vanish; slope undefined")
    else:
        print(f"slope {fit.slope!r}")
        print(f"intercept {fit.intercept!r}")
        print(f"r_squared {fit.r_squared!r}")
    if args.svg and not fit.degenerate:
        pts = [(p.n, p.mean_d2) for p in fit.per_n if p.mean_d2 > 0]
        _write(args.svg, svg_loglog(pts, fit.slope, fit.intercept,
                                    title="mean squared error vs n", ylabel="mean d2"))
    return 0


def _cmd_vi(args, parser) -> int:
    space, P = _load_measure(args, parser)
    spec = _parse_functional(args.functional, parser)
    res = solve_barycenter(BarycenterProblem(space, spec, P, _solver_options(args)))
    if res.status == "multi-minimizer":
        print("multi-minimizer: no variance inequality can hold")
        for i, c in enumerate(res.candidates):
            print(f"candidate {i} " + ",".join(repr(v) for v in space.point_to_row(c)))
        return 1
    probes = default_probes(P, res.minimizer, seed=args.seed, n_random=args.probes)
    fit = fit_variance_inequality(spec, P, res.minimizer, probes)
    k_map = {}
    if (
        spec.kind == "squared_distance"
        and isinstance(space, _PC_SPACES)
        and space.supports_log
    ):
        pc = pc_identity_check(P, res.minimizer, probes)
        k_map = {row.probe_id: row.k_integral for row in pc.rows}
        print(f"pc_identity_max_error {pc.max_abs_error!r}")
    print(f"K3_hat {fit.K3_hat!r}")
    print(f"beta_hat {fit.beta_hat!r}")
    print(f"max_violation {fit.max_violation!r}")
    lines = ["probe_id,d2,excess,k_integral,violation"]
    for row in fit.probes:
        bound = fit.K3_hat * max(row.excess, 0.0) ** fit.beta_hat
        violation = row.d2 - bound if math.isfinite(row.excess) else -math.inf
        k_txt = repr(k_map[row.probe_id]) if row.probe_id in k_map else ""
        lines.append(
            f"{row.probe_id},{row.d2!r},{row.excess!r},{k_txt},{violation!r}"
        )
    if args.out:
        _write(args.out, "\n".join(lines) + "\n")
    return 1 if fit.max_violation > 1e-9 else 0


def _cmd_curvature(args, parser) -> int:
    if args.space in (None, "euclidean", "sphere", "wasserstein1d", "gaussian"):
        dims = {"euclidean": Euclidean, "sphere": Sphere,
                "wasserstein1d": Wasserstein1D, "gaussian": GaussianBures}
        if args.space not in dims:
            parser.error("--space is required")
        space = dims[args.space](args.dim)
    elif args.space == "spider":
        if args.rays is None:
            parser.error("--rays is required for the spider space")
        space = SpiderTree(args.rays)
    elif args.space == "grid":
        if args.grid_file is None:
            parser.error("--grid-file is required for the grid space")
        _, atom_rows = _read_csv(args.grid_file, parser, "--grid-file")
        space = GridWasserstein(np.asarray(atom_rows))
    else:
        parser.error(f"--space: unknown space {args.space!r}")
    if args.target not in ("NPC", "PC"):
        parser.error("--target must be NPC or PC")
    rep = check_curvature_sign(space, args.target, args.samples, args.seed)
    print(f"violations {rep.violations}")
    print(f"worst_margin {rep.worst_margin!r}")
    print(f"geodesic_checks {rep.geodesic_checks}")
    print(f"quadruple_checks {rep.quadruple_checks}")
    return 1 if rep.violations else 0


def _cmd_cover(args, parser) -> int:
    if args.points is None:
        parser.error("--points is required")
    _, rows = _read_csv(args.points, parser, "--points")
    pts = np.asarray(rows)
    if args.eps_min <= 0 or args.eps_min > args.eps_max:
        parser.error("--eps-min must be positive and at most --eps-max")
    profile = greedy_net_profile(pts, stop_radius=args.eps_min * 0.99)
    sweep = np.logspace(math.log10(args.eps_max), math.log10(args.eps_min), args.num)
    reports = [covering_number(pts, float(e), profile=profile) for e in sweep]
    fit = fit_loglog([(1.0 / r.eps, r.cover_size) for r in reports])
    lines = ["eps,cover_size,packing_size"]
    for r in reports:
        lines.append(f"{r.eps!r},{r.cover_size},{r.packing_size}")
    if args.out:
        _write(args.out, "\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    print(f"slope {fit.slope!r}")
    if args.svg:
        _write(args.svg, svg_loglog(
            [(1.0 / r.eps, r.cover_size) for r in reports],
            fit.slope, fit.intercept,
            title="covering number vs 1/eps", xlabel="1/eps", ylabel="N",
        ))
    return 0


def _cmd_bound(args, parser) -> int:
    if args.theorem == 1:
        value = bound_theorem1(BoundInputs(
            K1=args.K1, K2=args.K2, K3=args.K3, alpha=args.alpha, beta=args.beta,
            C=args.C, D=args.D, n=args.n, t=args.t,
        ))
    elif args.theorem == 2:
        value = bound_theorem2_rate(args.D, args.alpha, args.n, beta=args.beta)
    else:
        parser.error("--theorem must be 1 or 2")
    print(repr(value))
    return 0


def _cmd_extend(args, parser) -> int:
    space, P = _load_measure(args, parser)
    res = solve_barycenter(
        BarycenterProblem(space, FunctionalSpec.squared_distance(), P, _solver_options(args))
    )
    if res.status == "multi-minimizer":
        print("multi-minimizer: extension hypothesis cannot single out a barycenter")
        return 1
    limits = [extension_limit(space, res.minimizer, y) for y in P.atoms]
    print(f"min_extension_limit {min(limits)!r}")
    probes = default_probes(P, res.minimizer, seed=args.seed, n_random=args.probes)
    report = extension_vi_check(P, res.minimizer, args.lam, probes,
                                options=_solver_options(args))
    print(f"K3 {report.K3!r}")
    print(f"hypothesis_two_holds {report.hypothesis_two_holds}")
    print(f"violations {report.violations}")
    print(f"worst_violation {report.worst_violation!r}")
    if args.out:
        lines = ["probe_id,d2,excess,violation"]
        for row in report.rows:
            lines.append(
                f"{row.probe_id},{row.d2!r},{row.excess!r},"
                f"{(row.d2 - report.K3 * row.excess)!r}"
            )
        _write(args.out, "\n".join(lines) + "\n")
    return 0 if report.hypothesis_two_holds and report.violations == 0 else 1


_HANDLERS = {
    "bary": _cmd_bary,
    "rates": _cmd_rates,
    "vi": _cmd_vi,
    "curvature": _cmd_curvature,
    "cover": _cmd_cover,
    "bound": _cmd_bound,
    "extend": _cmd_extend,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _merge_config(args, parser)
    try:
        return _HANDLERS[args.command](args, parser)
    except GeobaryError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():  # console entry point
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
