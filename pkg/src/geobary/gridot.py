"""Discrete Wasserstein space on a fixed atom grid, with an exact solver.

Measures are weight vectors on a fixed finite set of atoms in R^d.  The
squared distance is the optimal transport cost for the squared Euclidean
ground cost, solved exactly:

* atoms on a line: monotone (north-west corner) coupling, O(N log N);
* general atoms: a linear program on the transport polytope (HiGHS).

Both paths recover dual potentials and certify optimality through dual
feasibility and a vanishing duality gap, so the result can serve as the
zero-regularisation oracle for entropic solvers.

Geodesics of this space are displacement interpolations that leave the fixed
grid, so they are deliberately not constructed; curvature diagnostics use the
quadruple comparison form and probe paths use linear interpolation of the
weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import TooLargeForExact, UnsupportedOperation
from .metric_core import MEMBERSHIP_TOL, Point, Space, _readonly

MARGINAL_TOL = 1e-9
GAP_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class GridW2Result:
    """Exact transport solution: cost, plan and certifying potentials."""

    cost: float
    plan: np.ndarray
    potential_mu: np.ndarray
    potential_nu: np.ndarray
    duality_gap: float


def _monotone_plan(weights_a, weights_b, order):
    """North-west corner coupling of two measures sorted by ``order``."""
    n = len(weights_a)
    plan = np.zeros((n, n))
    idx_a = [i for i in order if weights_a[i] > 0.0]
    idx_b = [j for j in order if weights_b[j] > 0.0]
    ia = ib = 0
    rem_a = weights_a[idx_a[0]] if idx_a else 0.0
    rem_b = weights_b[idx_b[0]] if idx_b else 0.0
    while ia < len(idx_a) and ib < len(idx_b):
        m = min(rem_a, rem_b)
        plan[idx_a[ia], idx_b[ib]] += m
        rem_a -= m
        rem_b -= m
        # x - x == 0 exactly in floating point, so one side always advances
        if rem_a <= 0.0:
            ia += 1
            rem_a = weights_a[idx_a[ia]] if ia < len(idx_a) else 0.0
        if rem_b <= 0.0:
            ib += 1
            rem_b = weights_b[idx_b[ib]] if ib < len(idx_b) else 0.0
    return plan


def _potentials_from_plan(cost_matrix, plan, mu, nu):
    """Complementary-slackness potentials from a plan's support chain.

    Returns (None, None) when the support is not connected (tied partial
    sums can split the monotone walk into components); the caller then
    certifies through the LP instead.
    """
    n = cost_matrix.shape[0]
    u = np.full(n, np.nan)
    v = np.full(n, np.nan)
    support = [(i, j) for i, j in zip(*np.nonzero(plan > 0))]
    if not support:
        return np.zeros(n), np.zeros(n)
    u[support[0][0]] = 0.0
    # propagate along the (staircase-connected) support until stable
    for _ in range(2 * len(support)):
        changed = False
        for i, j in support:
            if not math.isnan(u[i]) and math.isnan(v[j]):
                v[j] = cost_matrix[i, j] - u[i]
                changed = True
            elif math.isnan(u[i]) and not math.isnan(v[j]):
                u[i] = cost_matrix[i, j] - v[j]
                changed = True
        if not changed:
            break
    if any(math.isnan(u[i]) or math.isnan(v[j]) for i, j in support):
        return None, None
    # zero-mass rows/columns: tightest feasible values
    known_v = ~np.isnan(v)
    for i in range(n):
        if math.isnan(u[i]):
            u[i] = np.min(cost_matrix[i, known_v] - v[known_v])
    for j in range(n):
        if math.isnan(v[j]):
            v[j] = np.min(cost_matrix[:, j] - u)
    return u, v


class GridWasserstein(Space):
    """Probability measures on a fixed atom set in R^d, metrised by W2."""

    kind = "grid_wasserstein"
    supports_geodesics = False
    supports_log = False

    def __init__(self, atoms, exact_cap: int = 256):
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        if atoms.ndim != 2 or atoms.shape[0] < 1:
            raise ValueError("atoms must be an (N, d) array")
        diffs = atoms[:, None, :] - atoms[None, :, :]
        sq = np.sum(diffs**2, axis=-1)
        off_diag = sq + np.diag(np.full(len(atoms), np.inf))
        if off_diag.min() <= 0.0:
            raise ValueError("grid atoms must be pairwise distinct")
        self.atoms = _readonly(atoms)
        self.exact_cap = int(exact_cap)
        self._cost = _readonly(sq)
        self._line_order = (
            np.argsort(atoms[:, 0], kind="stable") if atoms.shape[1] == 1 else None
        )

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.n_atoms

    def __eq__(self, other):
        return (
            isinstance(other, GridWasserstein)
            and self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
        )

    def __hash__(self):
        return hash((self.atoms.shape, self.atoms.tobytes()))

    def __repr__(self):
        return f"GridWasserstein({self.n_atoms} atoms in R^{self.atoms.shape[1]})"

    def _validate(self, weights):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != (self.n_atoms,):
            raise ValueError(f"expected {self.n_atoms} weights, got {w.shape}")
        if w.min() < -MEMBERSHIP_TOL:
            raise ValueError("weights must be nonnegative within 1e-12")
        total = float(w.sum())
        if abs(total - 1.0) > MEMBERSHIP_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        return _readonly(np.clip(w, 0.0, None) / total)

    def cost_matrix(self) -> np.ndarray:
        return self._cost

    # -- exact transport ----------------------------------------------------

    def _solve_line(self, mu, nu) -> GridW2Result:
        if np.array_equal(mu, nu):
            plan = np.diag(mu)
            zero = np.zeros(self.n_atoms)
            return GridW2Result(0.0, plan, _readonly(zero), _readonly(zero.copy()), 0.0)
        plan = _monotone_plan(mu, nu, list(self._line_order))
        cost = float(np.sum(plan * self._cost))
        u, v = _potentials_from_plan(self._cost, plan, mu, nu)
        if u is None:
            return self._solve_lp(mu, nu)  # tie degeneracy: fall back
        slack = self._cost - u[:, None] - v[None, :]
        gap = cost - float(u @ mu + v @ nu)
        if slack.min() < -GAP_TOL or abs(gap) > GAP_TOL:
            return self._solve_lp(mu, nu)
        return GridW2Result(cost, plan, _readonly(u), _readonly(v), float(gap))

    def _solve_lp(self, mu, nu) -> GridW2Result:
        n = self.n_atoms
        c = self._cost.ravel()
        var = np.arange(n * n)
        a_eq = sparse.csr_matrix(
            (
                np.ones(2 * n * n),
                (
                    np.concatenate([np.repeat(np.arange(n), n), n + np.tile(np.arange(n), n)]),
                    np.concatenate([var, var]),
                ),
            ),
            shape=(2 * n, n * n),
        )
        b_eq = np.concatenate([mu, nu])
        res = linprog(
            c,
            A_eq=a_eq,
            b_eq=b_eq,
            bounds=(0, None),
            method="highs",
            options={
                "primal_feasibility_tolerance": 1e-10,
                "dual_feasibility_tolerance": 1e-10,
            },
        )
        if not res.success:
            raise RuntimeError(f"exact transport LP failed: {res.message}")
        plan = res.x.reshape(n, n)
        u = np.asarray(res.eqlin.marginals[:n], dtype=float)
        v = np.asarray(res.eqlin.marginals[n:], dtype=float)
        cost = float(res.fun)
        gap = cost - float(u @ mu + v @ nu)
        return GridW2Result(cost, plan, _readonly(u), _readonly(v), float(gap))

    def solve_w2(self, mu: np.ndarray, nu: np.ndarray) -> GridW2Result:
        if self.n_atoms > self.exact_cap:
            raise TooLargeForExact(
                f"{self.n_atoms} atoms exceeds the exact-solver cap {self.exact_cap}"
            )
        mu = self._validate(mu)
        nu = self._validate(nu)
        if self._line_order is not None:
            out = self._solve_line(mu, nu)
        else:
            out = self._solve_lp(mu, nu)
        if (
            np.max(np.abs(out.plan.sum(axis=1) - mu)) > MARGINAL_TOL
            or np.max(np.abs(out.plan.sum(axis=0) - nu)) > MARGINAL_TOL
        ):
            raise RuntimeError("transport plan violates its marginals")
        if abs(out.duality_gap) > GAP_TOL:
            raise RuntimeError(f"duality gap {out.duality_gap} above {GAP_TOL}")
        return out

    # -- Space interface ----------------------------------------------------

    def _distance(self, a, b) -> float:
        return math.sqrt(max(self.solve_w2(a, b).cost, 0.0))

    def _geodesic(self, a, b):
        raise UnsupportedOperation(
            "displacement geodesics leave the fixed grid; use _interpolate"
        )

    def _log(self, p, x):
        raise UnsupportedOperation("no tangent construction for grid measures")

    def _direction_cos(self, p, d1, d2):
        raise UnsupportedOperation("no tangent construction for grid measures")

    def _interpolate(self, a, b, t: float):
        # declared probe path: linear interpolation of the densities
        return self._validate((1.0 - t) * a + t * b)

    def random_point(self, rng) -> Point:
        return self.point(rng.dirichlet(np.ones(self.n_atoms)))

    def coord_fields(self):
        return [f"w{i}" for i in range(self.n_atoms)]

    def point_to_row(self, pt):
        return [float(v) for v in pt.coords]

    def point_from_row(self, row):
        return self.point(row)


def grid_w2(mu: Point, nu: Point) -> GridW2Result:
    """Exact squared-Wasserstein cost and optimal plan between grid measures."""
    if not isinstance(mu.space, GridWasserstein) or mu.space != nu.space:
        raise UnsupportedOperation("grid_w2 needs two measures on one grid")
    return mu.space.solve_w2(mu.coords, nu.coords)
