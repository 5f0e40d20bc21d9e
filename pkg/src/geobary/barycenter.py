"""Solvers for population and empirical generalized barycenters.

Per (space, functional) pair the solver dispatches to:

* Euclidean / 1-D Wasserstein + squared distance: exact weighted means;
* spider tree + squared distance: exact per-ray quadratic minimisation;
* sphere + squared distance: intrinsic gradient descent with multi-start;
* Gaussian location-scatter + squared distance: covariance fixed point;
* grid measures + {f-divergence, interaction, entropic cost}: multiplicative
  mirror descent over the simplex.

Distinct tied minimizers found across restarts are reported, not collapsed,
so measures with several barycenters surface as ``multi-minimizer`` results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CutLocusAmbiguity,
    IncompatibleSpace,
    NoConvergence,
    NonSPD,
    NonSPDIterate,
)
from .functionals import F_DIVERGENCES, FunctionalSpec, eval_functional, potential_matrix, sinkhorn_value
from .gaussian import GaussianBures, spd_sqrt
from .gridot import GridWasserstein
from .metric_core import Point, Space, _readonly, distance, log_map, tangent_inner
from .spaces import Euclidean, SpiderTree, Sphere, Wasserstein1D


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure: atoms plus simplex weights."""

    atoms: tuple[Point, ...]
    weights: np.ndarray

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a measure needs at least one atom")
        space = self.atoms[0].space
        if any(a.space != space for a in self.atoms):
            raise ValueError("all atoms must live in one space")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape != (len(self.atoms),):
            raise ValueError("one weight per atom required")
        if w.min() < -1e-12 or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must lie on the simplex within 1e-12")
        object.__setattr__(self, "weights", _readonly(np.clip(w, 0.0, None) / w.sum()))

    @property
    def space(self) -> Space:
        return self.atoms[0].space

    def __len__(self):
        return len(self.atoms)

    @staticmethod
    def uniform(points: Sequence[Point]) -> "DiscreteMeasure":
        n = len(points)
        return DiscreteMeasure(tuple(points), np.full(n, 1.0 / n))


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 1000
    restarts: int = 8
    seed: int = 0
    mirror_step: float = 0.1
    mirror_max_iter: int = 10_000


@dataclass(frozen=True, eq=False)
class BarycenterProblem:
    space: Space
    functional: FunctionalSpec
    P: DiscreteMeasure
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.P.space != self.space:
            raise IncompatibleSpace("measure atoms do not live in the problem space")

    def objective(self, x: Point) -> float:
        return mean_functional(self.functional, self.P, x)


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    minimizer: Point
    objective: float
    status: str  # converged | iteration-cap | multi-minimizer
    candidates: tuple[Point, ...]
    gradient_norm: Optional[float] = None
    iterations: int = 0
    objective_trace: tuple[float, ...] = ()


def mean_functional(spec: FunctionalSpec, P: DiscreteMeasure, x: Point) -> float:
    """Average of F(x, .) against the measure; ``inf`` propagates."""
    total = 0.0
    for w, y in zip(P.weights, P.atoms):
        if w == 0.0:
            continue
        v = eval_functional(spec, x, y)
        if math.isinf(v):
            return math.inf
        total += w * v
    return float(total)


# -- squared-distance gradients on log-map spaces -----------------------------


def _log_raw(space, p, x):
    """Unnormalised tangent representative of log_p(x) in linear coordinates."""
    if isinstance(space, (Euclidean, Wasserstein1D)):
        return x - p
    if isinstance(space, Sphere):
        direction, mag = space._log(p, x)
        return np.zeros_like(p) if direction is None else mag * direction
    if isinstance(space, GaussianBures):
        (direction, mag) = space._log(p, x)
        if direction is None:
            d = space.d
            return (np.zeros(d), np.zeros((d, d)))
        return (mag * direction[0], mag * direction[1])
    raise IncompatibleSpace(f"{space.kind}: no linear tangent representation")


def _raw_norm(space, p, raw) -> float:
    if isinstance(space, Wasserstein1D):
        return float(np.linalg.norm(raw)) / math.sqrt(space.K)
    if isinstance(space, GaussianBures):
        dm, V = raw
        return math.sqrt(max(float(dm @ dm) + float(np.trace(V @ p.cov @ V)), 0.0))
    return float(np.linalg.norm(raw))


def sqdist_gradient(P: DiscreteMeasure, x: Point):
    """Tangent gradient of the mean squared distance, and its norm."""
    space = P.space
    if isinstance(space, GaussianBures):
        d = space.d
        gm, gv = np.zeros(d), np.zeros((d, d))
        for w, y in zip(P.weights, P.atoms):
            rm, rv = _log_raw(space, x.coords, y.coords)
            gm -= 2.0 * w * rm
            gv -= 2.0 * w * rv
        raw = (gm, gv)
    else:
        raw = np.zeros_like(np.asarray(x.coords, dtype=float))
        for w, y in zip(P.weights, P.atoms):
            raw -= 2.0 * w * _log_raw(space, x.coords, y.coords)
    return raw, _raw_norm(space, x.coords, raw)


# -- closed-form solvers -------------------------------------------------------


def _solve_linear_mean(problem: BarycenterProblem) -> BarycenterResult:
    coords = np.stack([np.asarray(a.coords, dtype=float) for a in problem.P.atoms])
    mean = problem.space.point(problem.P.weights @ coords)
    return BarycenterResult(
        minimizer=mean,
        objective=problem.objective(mean),
        status="converged",
        candidates=(mean,),
        gradient_norm=0.0,
    )


def _solve_spider(problem: BarycenterProblem) -> BarycenterResult:
    space: SpiderTree = problem.space
    rays = np.array([a.coords[0] for a in problem.P.atoms])
    radii = np.array([a.coords[1] for a in problem.P.atoms])
    w = problem.P.weights
    candidates = []
    for r in range(space.rays):
        same = rays == r
        signed = np.where(same, radii, -radii)
        s_star = max(float(w @ signed), 0.0)
        obj = float(w @ (s_star - signed) ** 2)
        candidates.append((obj, r, s_star))
    candidates.sort()
    best_obj = candidates[0][0]
    tied, seen = [], []
    for obj, r, s in candidates:
        if obj > best_obj + 1e-12 * (1.0 + abs(best_obj)):
            break
        pt = space.point(r, s)
        if all(distance(pt, q) > 10 * problem.options.tol for q in seen):
            seen.append(pt)
            tied.append(pt)
    status = "multi-minimizer" if len(tied) > 1 else "converged"
    return BarycenterResult(
        minimizer=tied[0],
        objective=best_obj,
        status=status,
        candidates=tuple(tied),
        gradient_norm=None,
    )


# -- sphere gradient descent ---------------------------------------------------


def _sphere_exp(p, raw):
    n = float(np.linalg.norm(raw))
    if n < 1e-18:
        return p
    return math.cos(n) * p + math.sin(n) * (raw / n)


def _sphere_descent(problem, x0, trace):
    space = problem.space
    P = problem.P
    tol, max_iter = problem.options.tol, problem.options.max_iter
    x = x0
    fx = problem.objective(x)
    gn = math.inf
    for it in range(max_iter):
        raw, gn = sqdist_gradient(P, x)
        if gn <= tol:
            return x, fx, gn, it, True
        step = 0.5
        accepted = False
        for _ in range(30):
            xn = space.point(_sphere_exp(np.asarray(x.coords), -step * raw))
            fn = problem.objective(xn)
            if fn <= fx - 1e-4 * step * gn**2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no descent direction at floating precision: stationary
            return x, fx, gn, it, gn <= max(tol, 1e-8)
        x, fx = xn, fn
        trace.append(fx)
    return x, fx, gn, max_iter, False


def _solve_sphere(problem: BarycenterProblem) -> BarycenterResult:
    opts = problem.options
    rng = np.random.default_rng(opts.seed)
    starts = list(problem.P.atoms) + [
        problem.space.random_point(rng) for _ in range(opts.restarts)
    ]
    runs = []
    for x0 in starts:
        trace: list[float] = []
        x, fx, gn, its, ok = _sphere_descent(problem, x0, trace)
        if ok:
            runs.append((fx, tuple(problem.space.point_to_row(x)), x, gn, its, trace))
    if not runs:
        raise NoConvergence("no sphere descent run reached the gradient tolerance")
    runs.sort(key=lambda r: (r[0], r[1]))
    best_obj = runs[0][0]
    tie_tol = max(1e-9, 1e-9 * abs(best_obj))
    tied: list[Point] = []
    for fx, _, x, gn, its, _tr in runs:
        if fx > best_obj + tie_tol:
            break
        if all(distance(x, q) > max(10 * opts.tol, 1e-6) for q in tied):
            tied.append(x)
    status = "multi-minimizer" if len(tied) > 1 else "converged"
    return BarycenterResult(
        minimizer=tied[0],
        objective=best_obj,
        status=status,
        candidates=tuple(tied),
        gradient_norm=runs[0][3],
        iterations=runs[0][4],
        objective_trace=tuple(runs[0][5]),
    )


# -- Gaussian fixed point -------------------------------------------------------


def solve_gaussian_barycenter(
    P: DiscreteMeasure, tol: float = 1e-12, max_iter: int = 500
) -> BarycenterResult:
    """Barycenter of Gaussians: mean average plus covariance fixed point.

    Iterates ``S <- S^{-1/2} (sum_i w_i (S^{1/2} S_i S^{1/2})^{1/2})^2 S^{-1/2}``
    until the Frobenius movement drops below ``tol``.
    """
    space = P.space
    if not isinstance(space, GaussianBures):
        raise IncompatibleSpace("gaussian barycenter needs location-scatter atoms")
    w = P.weights
    means = np.stack([a.coords.mean for a in P.atoms])
    covs = [a.coords.cov for a in P.atoms]
    mean = w @ means

    sigma = sum(wi * ci for wi, ci in zip(w, covs))
    moved = math.inf
    trace = []
    for it in range(max_iter):
        try:
            root = spd_sqrt(sigma)
            lam, q = np.linalg.eigh(root)
            if lam.min() <= 1e-12:
                raise NonSPD("iterate hit the spectral floor")
            root_inv = (q * (1.0 / lam)) @ q.T
            inner = sum(wi * spd_sqrt(root @ ci @ root) for wi, ci in zip(w, covs))
            new = root_inv @ inner @ inner @ root_inv
            new = 0.5 * (new + new.T)
        except NonSPD as exc:
            raise NonSPDIterate(str(exc)) from exc
        moved = float(np.linalg.norm(new - sigma))
        sigma = new
        trace.append(moved)
        if moved <= tol:
            break
    else:
        raise NoConvergence(
            f"gaussian fixed point moved {moved} after {max_iter} iterations",
            residual=moved,
        )
    bary = space.point(mean, sigma)
    obj = float(sum(wi * distance(bary, a) ** 2 for wi, a in zip(w, P.atoms)))
    return BarycenterResult(
        minimizer=bary,
        objective=obj,
        status="converged",
        candidates=(bary,),
        iterations=it + 1,
    )


# -- mirror descent on the simplex ----------------------------------------------


def _grid_gradient(spec, space, atoms_w, weights, x_w, support):
    if spec.kind == "fdivergence":
        _, fp = F_DIVERGENCES[spec.f_kind]
        grad = np.zeros(space.n_atoms)
        for w, nu in zip(weights, atoms_w):
            grad[support] += w * fp(x_w[support] / nu[support])
        return grad
    if spec.kind == "interaction":
        kernel = potential_matrix(spec.potential, space)
        nu_bar = sum(w * nu for w, nu in zip(weights, atoms_w))
        return kernel @ nu_bar
    # entropic cost: the first-marginal dual potential is the gradient
    grad = np.zeros(space.n_atoms)
    x_pt = space.point(x_w)
    for w, nu in zip(weights, atoms_w):
        res = sinkhorn_value(x_pt, space.point(nu), spec.gamma, tol=1e-9)
        grad += w * res.potential_mu
    return grad


def _solve_mirror(problem: BarycenterProblem) -> BarycenterResult:
    space: GridWasserstein = problem.space
    opts = problem.options
    spec = problem.functional
    atoms_w = [np.asarray(a.coords, dtype=float) for a in problem.P.atoms]
    weights = problem.P.weights

    if spec.kind == "fdivergence":
        support = np.ones(space.n_atoms, dtype=bool)
        for w, nu in zip(weights, atoms_w):
            if w > 0:
                support &= nu > 0
        if not support.any():
            raise IncompatibleSpace("atoms share no common support")
    else:
        support = np.ones(space.n_atoms, dtype=bool)

    x = np.where(support, 1.0, 0.0)
    x /= x.sum()
    fx = mean_functional(spec, problem.P, space.point(x))
    trace = [fx]
    status = "iteration-cap"
    gap = math.inf
    it = 0
    for it in range(opts.mirror_max_iter):
        grad = _grid_gradient(spec, space, atoms_w, weights, x, support)
        g = grad[support]
        gap = float(x[support] @ g - g.min())
        if gap <= opts.tol * (1.0 + abs(fx)):
            status = "converged"
            break
        step = opts.mirror_step
        accepted = False
        for _ in range(30):
            xn = np.zeros_like(x)
            xn[support] = x[support] * np.exp(-step * (g - g.min()))
            xn /= xn.sum()
            fn = mean_functional(spec, problem.P, space.point(xn))
            if fn <= fx + 1e-14 * (1.0 + abs(fx)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "converged" if gap <= 1e-6 * (1.0 + abs(fx)) else "iteration-cap"
            break
        x, fx = xn, fn
        trace.append(fx)
    minimizer = space.point(x)
    return BarycenterResult(
        minimizer=minimizer,
        objective=fx,
        status=status,
        candidates=(minimizer,),
        gradient_norm=gap,
        iterations=it + 1,
        objective_trace=tuple(trace),
    )


# -- dispatch --------------------------------------------------------------------


def solve_barycenter(problem: BarycenterProblem) -> BarycenterResult:
    space = problem.space
    spec = problem.functional
    if spec.kind == "squared_distance":
        if isinstance(space, (Euclidean, Wasserstein1D)):
            return _solve_linear_mean(problem)
        if isinstance(space, SpiderTree):
            return _solve_spider(problem)
        if isinstance(space, Sphere):
            return _solve_sphere(problem)
        if isinstance(space, GaussianBures):
            return solve_gaussian_barycenter(
                problem.P, tol=problem.options.tol, max_iter=problem.options.max_iter
            )
        raise IncompatibleSpace(f"no squared-distance solver for {space.kind}")
    if isinstance(space, GridWasserstein):
        return _solve_mirror(problem)
    raise IncompatibleSpace(f"{spec.kind} requires grid measures, got {space.kind}")


# -- diagnostics ------------------------------------------------------------------


def exp_barycenter_residual(P: DiscreteMeasure, candidate: Point) -> float:
    """Double integral of pairwise tangent inner products at ``candidate``.

    Vanishes at a barycenter of a non-negatively curved space; in Euclidean
    space it equals the squared distance from the candidate to the mean.
    """
    if not P.space.supports_log:
        raise CutLocusAmbiguity(f"{P.space.kind}: no log map at the candidate")
    logs = [log_map(candidate, a) for a in P.atoms]
    total = 0.0
    for wi, ui in zip(P.weights, logs):
        for wj, uj in zip(P.weights, logs):
            if wi == 0.0 or wj == 0.0:
                continue
            total += wi * wj * tangent_inner(ui, uj)
    return float(total)


def sample_empirical(P: DiscreteMeasure, n: int, seed: int) -> DiscreteMeasure:
    """Uniform empirical measure of n i.i.d. draws from P (seeded)."""
    if n < 1:
        raise ValueError("need n >= 1 draws")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(P.atoms), size=n, p=P.weights)
    return DiscreteMeasure.uniform([P.atoms[i] for i in idx])
