"""Exact discrete transport: plans, potentials, certification, oracles."""

import itertools

import numpy as np
import pytest

from geobary import GridWasserstein, distance, grid_w2
from geobary.errors import TooLargeForExact, UnsupportedOperation


def nw_plan(mu, nu, row_order, col_order):
    """Greedy corner rule under the given row/column orders."""
    n = len(mu)
    plan = np.zeros((n, n))
    rows = [i for i in row_order if mu[i] > 0]
    cols = [j for j in col_order if nu[j] > 0]
    ri = ci = 0
    rem_r = mu[rows[0]] if rows else 0.0
    rem_c = nu[cols[0]] if cols else 0.0
    while ri < len(rows) and ci < len(cols):
        m = min(rem_r, rem_c)
        plan[rows[ri], cols[ci]] += m
        rem_r -= m
        rem_c -= m
        if rem_r <= 0:
            ri += 1
            rem_r = mu[rows[ri]] if ri < len(rows) else 0.0
        if rem_c <= 0:
            ci += 1
            rem_c = nu[cols[ci]] if ci < len(cols) else 0.0
    return plan


def vertex_enumeration_cost(space, mu, nu):
    """Minimum cost over all corner-rule vertices of the transport polytope.

    Every extreme point arises from the greedy rule under some pair of
    row/column orders, so for generic weights the minimum over all
    ``(n!)^2`` order pairs is the exact optimum.
    """
    n = space.n_atoms
    cost = space.cost_matrix()
    best = np.inf
    for rp in itertools.permutations(range(n)):
        for cp in itertools.permutations(range(n)):
            best = min(best, float(np.sum(nw_plan(mu, nu, rp, cp) * cost)))
    return best


class TestExamples:
    def test_identical_measures_cost_zero(self, line_grid):
        mu = line_grid.point([0.1, 0.2, 0.3, 0.2, 0.1, 0.1])
        res = grid_w2(mu, mu)
        assert res.cost == 0.0
        off_diag = res.plan - np.diag(np.diag(res.plan))
        assert np.abs(off_diag).max() == 0.0

    def test_point_masses(self, plane_grid):
        n = plane_grid.n_atoms
        e0 = np.eye(n)[0]
        e3 = np.eye(n)[3]
        res = grid_w2(plane_grid.point(e0), plane_grid.point(e3))
        assert res.cost == pytest.approx(plane_grid.cost_matrix()[0, 3], abs=1e-12)

    def test_half_half_vs_quarter_threequarters(self):
        space = GridWasserstein(np.array([[0.0], [1.0]]))
        res = grid_w2(space.point([0.5, 0.5]), space.point([0.25, 0.75]))
        assert res.cost == pytest.approx(0.25, abs=1e-12)


class TestAgainstVertexEnumeration:
    """Implementation vs independent oracle on every instance with N <= 4."""

    @pytest.mark.parametrize("seed", range(12))
    def test_line_atoms(self, seed):
        rng = np.random.default_rng(400 + seed)
        n = int(rng.integers(2, 5))
        space = GridWasserstein(np.sort(rng.uniform(0, 1, n)).reshape(-1, 1))
        mu = space.point(rng.dirichlet(np.ones(n)))
        nu = space.point(rng.dirichlet(np.ones(n)))
        res = grid_w2(mu, nu)
        oracle = vertex_enumeration_cost(space, mu.coords, nu.coords)
        assert res.cost == pytest.approx(oracle, abs=1e-10)

    @pytest.mark.parametrize("seed", range(12))
    def test_plane_atoms(self, seed):
        rng = np.random.default_rng(500 + seed)
        n = int(rng.integers(2, 5))
        space = GridWasserstein(rng.uniform(0, 1, size=(n, 2)))
        mu = space.point(rng.dirichlet(np.ones(n)))
        nu = space.point(rng.dirichlet(np.ones(n)))
        res = grid_w2(mu, nu)
        oracle = vertex_enumeration_cost(space, mu.coords, nu.coords)
        assert res.cost == pytest.approx(oracle, abs=1e-10)


def test_line_fast_path_matches_lp():
    """Dual route: the monotone-coupling path against the LP on one grid."""
    rng = np.random.default_rng(31)
    space = GridWasserstein(np.sort(rng.uniform(0, 1, 8)).reshape(-1, 1))
    for _ in range(50):
        mu = space._validate(rng.dirichlet(np.ones(8)))
        nu = space._validate(rng.dirichlet(np.ones(8)))
        fast = space._solve_line(mu, nu)
        lp = space._solve_lp(mu, nu)
        assert fast.cost == pytest.approx(lp.cost, abs=1e-10)


class TestCertification:
    @pytest.mark.parametrize("grid_name", ["line_grid", "plane_grid"])
    def test_marginals_gap_and_feasibility(self, grid_name, request):
        space = request.getfixturevalue(grid_name)
        rng = np.random.default_rng(37)
        cost = space.cost_matrix()
        for _ in range(40):
            mu = space.random_point(rng)
            nu = space.random_point(rng)
            res = grid_w2(mu, nu)
            assert np.abs(res.plan.sum(axis=1) - mu.coords).max() <= 1e-9
            assert np.abs(res.plan.sum(axis=0) - nu.coords).max() <= 1e-9
            assert abs(res.duality_gap) < 1e-7
            slack = cost - res.potential_mu[:, None] - res.potential_nu[None, :]
            assert slack.min() >= -1e-7
            assert res.plan.min() >= -1e-12

    def test_zero_weight_atoms(self, line_grid):
        mu = line_grid.point([0.5, 0, 0.5, 0, 0, 0])
        nu = line_grid.point([0, 0, 0, 0.25, 0, 0.75])
        res = grid_w2(mu, nu)
        assert np.abs(res.plan.sum(axis=1) - mu.coords).max() <= 1e-12
        assert abs(res.duality_gap) < 1e-7


class TestSpaceBehavior:
    def test_distance_is_sqrt_cost(self, plane_grid):
        rng = np.random.default_rng(41)
        mu, nu = plane_grid.random_point(rng), plane_grid.random_point(rng)
        assert distance(mu, nu) == pytest.approx(np.sqrt(grid_w2(mu, nu).cost))

    def test_exact_cap(self):
        space = GridWasserstein(np.arange(10.0).reshape(-1, 1), exact_cap=8)
        mu = space.point(np.full(10, 0.1))
        with pytest.raises(TooLargeForExact):
            grid_w2(mu, mu)

    def test_geodesics_not_constructed(self, line_grid):
        rng = np.random.default_rng(43)
        a, b = line_grid.random_point(rng), line_grid.random_point(rng)
        with pytest.raises(UnsupportedOperation):
            line_grid._geodesic(a.coords, b.coords)
        mid = line_grid._interpolate(a.coords, b.coords, 0.5)
        np.testing.assert_allclose(mid, 0.5 * (a.coords + b.coords), atol=1e-15)

    def test_validation(self, line_grid):
        with pytest.raises(ValueError):
            line_grid.point([0.5, 0.5, 0, 0, 0, 0.1])  # sums to 1.1
        with pytest.raises(ValueError):
            line_grid.point([0.7, 0.5, 0, 0, 0, -0.2])  # negative weight
        with pytest.raises(ValueError):
            GridWasserstein(np.array([[0.0], [0.0], [1.0]]))  # duplicate atoms

    def test_space_equality_by_atoms(self):
        a = GridWasserstein(np.array([[0.0], [1.0]]))
        b = GridWasserstein(np.array([[0.0], [1.0]]))
        c = GridWasserstein(np.array([[0.0], [2.0]]))
        assert a == b and a != c and hash(a) == hash(b)
