"""Functionals F(x, y) minimized by generalized barycenters.

Implements the squared distance, f-divergences on a shared atom grid,
interaction energies for registered potentials, and the entropy-regularised
transport cost, together with calculators for the boundedness/regularity
constants (K1, K2, alpha) attached to each family.

f-divergences are evaluated on common-grid densities, which sidesteps
absolute-continuity subtleties; the +infinity case (support of the first
argument not contained in the second) is returned as ``math.inf`` so
minimizers can reject the point instead of catching an exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import (
    IncompatibleSpace,
    InvalidBounds,
    NoConvergence,
    UnknownPotential,
)
from .gridot import GridWasserstein
from .metric_core import Point, distance

# -- f-divergence generators -------------------------------------------------

_SUPPORT_TOL = 1e-15


def _f_kl(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = r[pos] * np.log(r[pos])
    return out


def _f_chi2(r):
    r = np.asarray(r, dtype=float)
    return (r - 1.0) ** 2


def _f_tv(r):
    r = np.asarray(r, dtype=float)
    return 0.5 * np.abs(r - 1.0)


def _fp_kl(r):
    return np.log(r) + 1.0


def _fp_chi2(r):
    return 2.0 * (np.asarray(r, dtype=float) - 1.0)


def _fp_tv(r):
    return 0.5 * np.sign(np.asarray(r, dtype=float) - 1.0)


F_DIVERGENCES: dict[str, tuple[Callable, Callable]] = {
    "kl": (_f_kl, _fp_kl),
    "chi2": (_f_chi2, _fp_chi2),
    "tv": (_f_tv, _fp_tv),
}


def fdiv_value(f_kind: str, mu_w: np.ndarray, nu_w: np.ndarray) -> float:
    """Divergence of densities on a shared grid; ``inf`` off-support."""
    if f_kind not in F_DIVERGENCES:
        raise IncompatibleSpace(f"unknown f-divergence kind {f_kind!r}")
    f, _ = F_DIVERGENCES[f_kind]
    mu_w = np.asarray(mu_w, dtype=float)
    nu_w = np.asarray(nu_w, dtype=float)
    if np.any((nu_w <= _SUPPORT_TOL) & (mu_w > _SUPPORT_TOL)):
        return math.inf
    on = nu_w > _SUPPORT_TOL
    return float(np.sum(f(mu_w[on] / nu_w[on]) * nu_w[on]))


# -- interaction potentials ---------------------------------------------------


@dataclass(frozen=True)
class InteractionPotential:
    """Registered interaction potential with its declared constants.

    ``lipschitz`` is either a constant or a rule evaluated on the grid; the
    convexity constants (k, beta) refer to geodesics of the ground space.
    """

    name: str
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float | Callable[[np.ndarray], float]
    k: float
    beta: float


def _g_sqdist(x, y):
    return np.sum((x - y) ** 2, axis=-1)


def _g_linear(x, y):
    return np.sqrt(np.sum((x - y) ** 2, axis=-1))


def _grid_diameter(atoms: np.ndarray) -> float:
    diffs = atoms[:, None, :] - atoms[None, :, :]
    return float(np.sqrt(np.sum(diffs**2, axis=-1).max()))


_POTENTIALS: dict[str, InteractionPotential] = {}


def register_potential(
    name: str, g, lipschitz, k: float = 0.0, beta: float = 1.0
) -> InteractionPotential:
    pot = InteractionPotential(name=name, g=g, lipschitz=lipschitz, k=k, beta=beta)
    _POTENTIALS[name] = pot
    return pot


register_potential(
    "sqdist", _g_sqdist, lambda atoms: 2.0 * _grid_diameter(atoms), k=1.0, beta=1.0
)
register_potential("linear_attraction", _g_linear, 1.0, k=0.0, beta=1.0)


def get_potential(name: str) -> InteractionPotential:
    try:
        return _POTENTIALS[name]
    except KeyError:
        raise UnknownPotential(f"no interaction potential registered as {name!r}") from None


_kernel_cache: dict[tuple[str, int], np.ndarray] = {}


def potential_matrix(name: str, space: GridWasserstein) -> np.ndarray:
    """Pairwise potential values on the grid atoms (cached per space)."""
    pot = get_potential(name)
    key = (name, hash(space))
    if key not in _kernel_cache:
        a = space.atoms
        _kernel_cache[key] = pot.g(a[:, None, :], a[None, :, :])
    return _kernel_cache[key]


def interaction_value(name: str, space: GridWasserstein, mu_w, nu_w) -> float:
    kernel = potential_matrix(name, space)
    return float(np.asarray(mu_w) @ kernel @ np.asarray(nu_w))


# -- entropic transport --------------------------------------------------------

SINKHORN_CAP = 512


@dataclass(frozen=True, eq=False)
class SinkhornResult:
    """Converged entropic plan with its objective decomposition."""

    value: float
    plan: np.ndarray
    iterations: int
    marginal_residual: float
    transport_term: float
    kl_term: float
    potential_mu: np.ndarray
    potential_nu: np.ndarray
    dual_trace: np.ndarray


def _lse_rows(m):
    mx = m.max(axis=1)
    return np.log(np.exp(m - mx[:, None]).sum(axis=1)) + mx


def _sinkhorn_stage(cost, log_mu, log_nu, gamma, f, g, tol, max_iter, trace=None,
                    check_every=10):
    """Block updates at fixed gamma until the row marginals match.

    The residual (and the optional dual trace) is evaluated every
    ``check_every`` sweeps to keep the inner loop cheap.
    """
    mu = np.exp(log_mu)
    rows = -cost / gamma + log_nu[None, :]
    cols = -cost.T / gamma + log_mu[None, :]
    iterations = 0
    residual = math.inf
    while iterations < max_iter:
        f = -gamma * _lse_rows(rows + g[None, :] / gamma)
        g = -gamma * _lse_rows(cols + f[None, :] / gamma)
        iterations += 1
        if iterations % check_every and iterations < max_iter:
            continue
        # after the g-update column marginals are exact; test the rows
        log_plan = log_mu[:, None] + log_nu[None, :] + (f[:, None] + g[None, :] - cost) / gamma
        row = np.exp(_lse_rows(log_plan))
        residual = float(np.abs(row - mu).sum())
        if trace is not None:
            # minimization form of the dual; exact block updates decrease it
            mass = float(np.exp(logsumexp(log_plan.ravel())))
            trace.append(-(mu @ f + np.exp(log_nu) @ g - gamma * (mass - 1.0)))
        if residual < tol:
            break
    return f, g, iterations, residual


def sinkhorn_value(
    mu: Point,
    nu: Point,
    gamma: float,
    tol: float = 1e-9,
    max_iter: int = 100_000,
) -> SinkhornResult:
    """Entropy-regularised squared transport cost between grid measures.

    Runs log-domain iterations with regularisation scaling (warm starts from
    larger gamma values), declaring convergence on the marginal residual.
    The reported value is ``<cost, plan> + gamma * KL(plan | mu (x) nu)``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    space = _require_grid(mu, nu)
    if space.n_atoms > SINKHORN_CAP:
        raise IncompatibleSpace(f"{space.n_atoms} atoms exceeds the cap {SINKHORN_CAP}")

    sup_mu = mu.coords > 0.0
    sup_nu = nu.coords > 0.0
    idx_mu = np.nonzero(sup_mu)[0]
    idx_nu = np.nonzero(sup_nu)[0]
    cost = space.cost_matrix()[np.ix_(idx_mu, idx_nu)]
    w_mu = mu.coords[idx_mu]
    w_nu = nu.coords[idx_nu]
    log_mu = np.log(w_mu)
    log_nu = np.log(w_nu)

    f = np.zeros(len(idx_mu))
    g = np.zeros(len(idx_nu))
    total_iter = 0
    scale = max(float(cost.max()), gamma)
    if gamma < 0.05 * scale and space.n_atoms <= space.exact_cap:
        # near the unregularised regime the exact dual potentials are the
        # natural warm start; they cut the slow tail of the iteration
        exact = space.solve_w2(mu.coords, nu.coords)
        f = exact.potential_mu[idx_mu].copy()
        g = exact.potential_nu[idx_nu].copy()
    else:
        # otherwise halve the regularisation from the cost scale downwards
        cur = scale
        while cur > gamma * 1.5:
            f, g, its, _ = _sinkhorn_stage(
                cost, log_mu, log_nu, cur, f, g, max(tol, 1e-6), 50
            )
            total_iter += its
            cur /= 2.0
    trace: list[float] = []
    f, g, its, residual = _sinkhorn_stage(
        cost, log_mu, log_nu, gamma, f, g, tol, max_iter - total_iter, trace
    )
    total_iter += its
    if residual >= tol:
        raise NoConvergence(
            f"sinkhorn residual {residual} after {total_iter} iterations",
            residual=residual,
        )

    log_plan = log_mu[:, None] + log_nu[None, :] + (f[:, None] + g[None, :] - cost) / gamma
    plan_small = np.exp(log_plan)
    transport = float(np.sum(plan_small * cost))
    kl = float(np.sum(plan_small * (log_plan - log_mu[:, None] - log_nu[None, :])))
    n = space.n_atoms
    plan = np.zeros((n, n))
    plan[np.ix_(idx_mu, idx_nu)] = plan_small
    pot_f = np.zeros(n)
    pot_g = np.zeros(n)
    pot_f[idx_mu] = f
    pot_g[idx_nu] = g
    return SinkhornResult(
        value=transport + gamma * kl,
        plan=plan,
        iterations=total_iter,
        marginal_residual=residual,
        transport_term=transport,
        kl_term=kl,
        potential_mu=pot_f,
        potential_nu=pot_g,
        dual_trace=np.asarray(trace),
    )


# -- the functional specification ---------------------------------------------


@dataclass(frozen=True)
class FunctionalSpec:
    """Which F(x, y) a barycenter problem minimizes."""

    kind: str
    f_kind: Optional[str] = None
    potential: Optional[str] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("squared_distance", "fdivergence", "interaction", "sinkhorn"):
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind == "fdivergence" and self.f_kind not in F_DIVERGENCES:
            raise ValueError(f"unknown f-divergence {self.f_kind!r}")
        if self.kind == "interaction":
            get_potential(self.potential)
        if self.kind == "sinkhorn" and not (self.gamma and self.gamma > 0):
            raise ValueError("sinkhorn needs gamma > 0")

    @staticmethod
    def squared_distance() -> "FunctionalSpec":
        return FunctionalSpec(kind="squared_distance")

    @staticmethod
    def fdivergence(f_kind: str) -> "FunctionalSpec":
        return FunctionalSpec(kind="fdivergence", f_kind=f_kind)

    @staticmethod
    def interaction(potential: str) -> "FunctionalSpec":
        return FunctionalSpec(kind="interaction", potential=potential)

    @staticmethod
    def sinkhorn(gamma: float) -> "FunctionalSpec":
        return FunctionalSpec(kind="sinkhorn", gamma=gamma)

    @property
    def label(self) -> str:
        return {
            "squared_distance": "squared_distance",
            "fdivergence": f"fdivergence:{self.f_kind}",
            "interaction": f"interaction:{self.potential}",
            "sinkhorn": f"sinkhorn:{self.gamma}",
        }[self.kind]


def _require_grid(x: Point, y: Point) -> GridWasserstein:
    if not isinstance(x.space, GridWasserstein) or x.space != y.space:
        raise IncompatibleSpace("this functional needs two measures on one grid")
    return x.space


def eval_functional(spec: FunctionalSpec, x: Point, y: Point) -> float:
    """Evaluate F(x, y); divergences return ``inf`` off-support."""
    if spec.kind == "squared_distance":
        return distance(x, y) ** 2
    space = _require_grid(x, y)
    if spec.kind == "fdivergence":
        return fdiv_value(spec.f_kind, x.coords, y.coords)
    if spec.kind == "interaction":
        return interaction_value(spec.potential, space, x.coords, y.coords)
    return sinkhorn_value(x, y, spec.gamma).value


# -- regularity constants -------------------------------------------------------


@dataclass(frozen=True)
class RegularityReport:
    """Boundedness constant K1 and Hoelder constants (K2, alpha)."""

    K1: float
    K2: float
    alpha: float
    source: str

    def __post_init__(self):
        if self.K1 <= 0 or self.K2 <= 0 or not 0 < self.alpha <= 1:
            raise InvalidBounds("regularity constants must be positive, alpha in (0,1]")


def fdiv_regularity(
    f_kind: str, c_minus: float, c_plus: float, L: float, Lambda: float
) -> RegularityReport:
    """Lipschitz constant of an f-divergence over bounded Lipschitz densities.

    For densities with values in [c_minus, c_plus] that are Lambda-Lipschitz,
    and f' L-Lipschitz on the realized ratio range, the divergence moves by
    at most ``2 L Lambda c_plus / c_minus^2`` per unit of transport distance.
    """
    if not (0 < c_minus <= c_plus) or L <= 0 or Lambda <= 0:
        raise InvalidBounds("need 0 < c_minus <= c_plus and positive L, Lambda")
    if f_kind not in F_DIVERGENCES:
        raise InvalidBounds(f"unknown f-divergence kind {f_kind!r}")
    f, _ = F_DIVERGENCES[f_kind]
    ratios = np.linspace(c_minus / c_plus, c_plus / c_minus, 20001)
    k1 = float(np.max(np.abs(f(ratios))))
    return RegularityReport(
        K1=max(k1, 1e-300),
        K2=2.0 * L * Lambda * c_plus / c_minus**2,
        alpha=1.0,
        source=f"fdiv:{f_kind}",
    )


def interaction_regularity(
    potential_id: str, atoms: Optional[np.ndarray] = None
) -> RegularityReport:
    """K2 equals the potential's declared first-argument Lipschitz constant."""
    pot = get_potential(potential_id)
    if callable(pot.lipschitz):
        if atoms is None:
            raise InvalidBounds(f"potential {potential_id!r} needs the grid for its constant")
        L = float(pot.lipschitz(np.atleast_2d(np.asarray(atoms, dtype=float))))
    else:
        L = float(pot.lipschitz)
    if atoms is not None:
        a = np.atleast_2d(np.asarray(atoms, dtype=float))
        k1 = float(np.max(pot.g(a[:, None, :], a[None, :, :])))
    else:
        k1 = math.inf
    return RegularityReport(
        K1=max(k1, 1e-300), K2=L, alpha=1.0, source=f"interaction:{potential_id}"
    )


@dataclass(frozen=True)
class SlopeConstant:
    """Largest c with h(u) - h(u + eps) >= c * eps, or None when h fails."""

    c: Optional[float]

    @property
    def applicable(self) -> bool:
        return self.c is not None


def dfA3_constants(f_kind: str, u_range: float = 10.0) -> SlopeConstant:
    """Decay-slope constant of ``h(s) = exp(s) f(exp(-s))`` on a log grid.

    Returns None when h is not convex on the grid or no positive slope
    constant exists.
    """
    if f_kind not in F_DIVERGENCES:
        raise InvalidBounds(f"unknown f-divergence kind {f_kind!r}")
    f, _ = F_DIVERGENCES[f_kind]

    def h(s):
        s = np.asarray(s, dtype=float)
        return np.exp(s) * f(np.exp(-s))

    # convexity on a uniform stencil
    s = np.linspace(-u_range, u_range, 4001)
    hs = h(s)
    second = hs[:-2] - 2.0 * hs[1:-1] + hs[2:]
    if second.min() < -1e-9 * max(1.0, np.abs(hs).max()):
        return SlopeConstant(c=None)

    mags = np.concatenate([-np.logspace(-3, np.log10(u_range), 40)[::-1], [0.0],
                           np.logspace(-3, np.log10(u_range), 40)])
    eps = np.logspace(-4, 1, 30)
    slopes = (h(mags[:, None]) - h(mags[:, None] + eps[None, :])) / eps[None, :]
    c = float(slopes.min())
    if c <= 1e-12:
        return SlopeConstant(c=None)
    return SlopeConstant(c=c)
