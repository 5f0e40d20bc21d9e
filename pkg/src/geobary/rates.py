"""Reproducible Monte-Carlo rate experiments.

Draws empirical measures of increasing size from a population, re-solves the
barycenter problem per replicate, and fits the log-log decay of the mean
squared estimation error.  Per-cell randomness is derived from the master
seed with a splitmix hash of (n, replicate), so results are independent of
execution order and identical between serial and pooled runs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .barycenter import (
    BarycenterProblem,
    mean_functional,
    sample_empirical,
    solve_barycenter,
)
from .errors import DegenerateInput, GeobaryError, PopulationSolveFailed
from .metric_core import Point, distance
from .rng import derive_seed


@dataclass(frozen=True, eq=False)
class RateExperiment:
    problem: BarycenterProblem
    ns: tuple[int, ...]
    reps: int
    seed: int

    def __post_init__(self):
        ns = tuple(int(n) for n in self.ns)
        if len(ns) < 1 or any(n < 2 for n in ns) or any(
            b <= a for a, b in zip(ns, ns[1:])
        ):
            raise ValueError("ns must be strictly increasing with every n >= 2")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        object.__setattr__(self, "ns", ns)


@dataclass(frozen=True)
class ReplicateRecord:
    n: int
    replicate: int
    d2: float
    excess: float
    flag: str  # "", "multi", or "error:<type>"


@dataclass(frozen=True)
class PerN:
    n: int
    mean_d2: float
    mean_excess: float
    stderr_d2: float
    valid: int


@dataclass(frozen=True, eq=False)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    per_n: tuple[PerN, ...]
    records: tuple[ReplicateRecord, ...]
    degenerate: bool
    population_minimizer: Point


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    r_squared: float


def fit_loglog(pairs: Sequence[tuple[float, float]]) -> LogLogFit:
    """Ordinary least squares of log(value) on log(n) over positive pairs."""
    pts = [(n, v) for n, v in pairs if v > 0 and math.isfinite(v)]
    if len(pts) < 3:
        raise DegenerateInput(f"need >= 3 positive pairs, got {len(pts)}")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot < 1e-300 else 1.0 - ss_res / ss_tot
    return LogLogFit(slope=float(slope), intercept=float(intercept), r_squared=r2)


def worker_count(requested: Optional[int] = None) -> int:
    """Worker cap: explicit argument, then GEOBARY_THREADS, then the host."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("GEOBARY_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_cell(exp: RateExperiment, x_star: Point, n: int, rep: int) -> ReplicateRecord:
    problem = exp.problem
    cell_seed = derive_seed(exp.seed, n, rep)
    sample = sample_empirical(problem.P, n, cell_seed)
    cell_options = replace(problem.options, seed=derive_seed(cell_seed, 1))
    try:
        res = solve_barycenter(
            BarycenterProblem(problem.space, problem.functional, sample, cell_options)
        )
    except GeobaryError as exc:
        return ReplicateRecord(n, rep, math.nan, math.nan, f"error:{type(exc).__name__}")
    flag = ""
    x_n = res.minimizer
    if res.status == "multi-minimizer":
        # the theory presumes a unique minimizer; when the sample has several,
        # score the candidate nearest the population optimum and say so
        x_n = min(res.candidates, key=lambda c: distance(c, x_star))
        flag = "multi"
    d2 = distance(x_n, x_star) ** 2
    excess = mean_functional(problem.functional, problem.P, x_n) - mean_functional(
        problem.functional, problem.P, x_star
    )
    return ReplicateRecord(n, rep, d2, excess, flag)


def run_rate_experiment(exp: RateExperiment, workers: Optional[int] = None) -> RateFit:
    """Execute the experiment grid and fit the error-decay slope.

    The population minimizer is certified first (closed form or first-order
    stationary); replicate cells then run on a thread pool and are reduced in
    (n, replicate) order regardless of completion order.
    """
    problem = exp.problem
    try:
        pop = solve_barycenter(problem)
    except GeobaryError as exc:
        raise PopulationSolveFailed(str(exc)) from exc
    if pop.status == "multi-minimizer":
        raise PopulationSolveFailed("population measure has several barycenters")
    if pop.gradient_norm is not None and pop.gradient_norm > 1e-10:
        raise PopulationSolveFailed(
            f"population gradient norm {pop.gradient_norm} above 1e-10"
        )
    x_star = pop.minimizer

    cells = [(n, rep) for n in exp.ns for rep in range(exp.reps)]
    nworkers = worker_count(workers)
    if nworkers == 1:
        records = [_run_cell(exp, x_star, n, rep) for n, rep in cells]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            records = list(pool.map(lambda c: _run_cell(exp, x_star, *c), cells))
    records.sort(key=lambda r: (r.n, r.replicate))

    per_n = []
    for n in exp.ns:
        vals = [r for r in records if r.n == n and not r.flag.startswith("error")]
        if vals:
            d2 = np.array([r.d2 for r in vals])
            ex = np.array([r.excess for r in vals])
            stderr = float(d2.std(ddof=1) / math.sqrt(len(d2))) if len(d2) > 1 else 0.0
            per_n.append(PerN(n, float(d2.mean()), float(ex.mean()), stderr, len(vals)))
        else:
            per_n.append(PerN(n, math.nan, math.nan, math.nan, 0))

    try:
        fit = fit_loglog([(p.n, p.mean_d2) for p in per_n])
        degenerate = False
    except DegenerateInput:
        fit = LogLogFit(math.nan, math.nan, math.nan)
        degenerate = True
    return RateFit(
        slope=fit.slope,
        intercept=fit.intercept,
        r_squared=fit.r_squared,
        per_n=tuple(per_n),
        records=tuple(records),
        degenerate=degenerate,
        population_minimizer=x_star,
    )


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def rates_csv(fit: RateFit) -> str:
    """Deterministic CSV: one row per replicate plus per-n summary rows."""
    lines = ["n,replicate,d2,excess,flag"]
    for r in fit.records:
        lines.append(f"{r.n},{r.replicate},{_fmt(r.d2)},{_fmt(r.excess)},{r.flag}")
    for p in fit.per_n:
        lines.append(
            f"#summary,{p.n},{_fmt(p.mean_d2)},{_fmt(p.mean_excess)},{_fmt(p.stderr_d2)}"
        )
    return "\n".join(lines) + "\n"
