"""Geometric kernel: distances, geodesics, log maps, angles, curvature signs."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geobary import (
    Euclidean,
    GaussianBures,
    SpiderTree,
    Sphere,
    Wasserstein1D,
    check_curvature_sign,
    comparison_angle,
    distance,
    geodesic,
    log_map,
    tangent_inner,
    tangent_norm_diff,
)
from geobary.errors import (
    BaseMismatch,
    DegenerateTriangle,
    NonUniqueGeodesic,
    PerimeterTooLarge,
    SpaceMismatch,
    UnsupportedTarget,
)
from geobary.metric_core import Space, comparison_angle_from_sides


def test_distance_examples(plane, sphere):
    assert distance(plane.point([0, 0]), plane.point([3, 4])) == pytest.approx(5.0)
    north = sphere.point([0, 0, 1])
    assert distance(north, sphere.point([1, 0, 0])) == pytest.approx(math.pi / 2)


def test_distance_space_mismatch(plane, sphere):
    with pytest.raises(SpaceMismatch):
        distance(plane.point([1, 0]), Euclidean(3).point([1, 0, 0]))
    with pytest.raises(SpaceMismatch):
        distance(plane.point([1, 0]), sphere.point([1, 0, 0]))


def test_geodesic_examples(plane, sphere, w1d):
    mid = geodesic(plane.point([0, 0]), plane.point([2, 0])).eval(0.5)
    np.testing.assert_allclose(mid.coords, [1.0, 0.0], atol=1e-12)

    # colatitude pi/4 at longitudes 0 and pi: the law of cosines gives
    # separation pi/2 through the pole, so the midpoint is the pole itself
    t = math.pi / 4
    a = sphere.point([math.sin(t), 0, math.cos(t)])
    b = sphere.point([-math.sin(t), 0, math.cos(t)])
    g = geodesic(a, b)
    assert g.length == pytest.approx(math.pi / 2, abs=1e-12)
    np.testing.assert_allclose(g.eval(0.5).coords, [0, 0, 1], atol=1e-12)

    dirac0 = Wasserstein1D(4).point([0, 0, 0, 0])
    dirac2 = Wasserstein1D(4).point([2, 2, 2, 2])
    np.testing.assert_allclose(
        geodesic(dirac0, dirac2).eval(0.5).coords, [1, 1, 1, 1], atol=1e-15
    )


def test_log_map_examples(plane, sphere, spider):
    lv = log_map(plane.point([0, 0]), plane.point([1, 2]))
    assert lv.magnitude == pytest.approx(math.sqrt(5))
    np.testing.assert_allclose(lv.direction, np.array([1, 2]) / math.sqrt(5))

    north = sphere.point([0, 0, 1])
    tip = log_map(north, north)
    assert tip.magnitude == 0.0 and tip.direction is None

    lv = log_map(spider.point(0, 0), spider.point(2, 1.5))
    assert lv.magnitude == pytest.approx(1.5)
    assert lv.direction == ("ray", 2)


def test_tangent_inner_examples(plane, sphere, spider):
    origin = plane.point([0, 0])
    u = log_map(origin, plane.point([1, 0]))
    v = log_map(origin, plane.point([0, 1]))
    assert tangent_inner(u, v) == pytest.approx(0.0)

    north = sphere.point([0, 0, 1])
    a = log_map(north, sphere.point([math.sin(0.7), 0, math.cos(0.7)]))
    b = log_map(north, sphere.point([0, math.sin(0.4), math.cos(0.4)]))
    assert tangent_inner(a, b) == pytest.approx(0.0, abs=1e-12)

    root = spider.point(0, 0)
    u = log_map(root, spider.point(1, 0.6))
    v = log_map(root, spider.point(3, 2.5))
    assert tangent_inner(u, v) == pytest.approx(-0.6 * 2.5)


def test_spider_branch_angle_matches_comparison_limit(spider):
    """The angle between distinct rays is pi: the flat comparison angle of
    (origin, x_s, y_t) is exactly arccos(-1) for every s, t."""
    for s, t in [(0.5, 0.5), (1e-3, 2.0), (0.7, 1e-4)]:
        ang = comparison_angle(
            0.0, spider.point(0, 0), spider.point(1, s), spider.point(3, t)
        )
        assert ang == pytest.approx(math.pi)


def test_tangent_inner_base_mismatch(plane):
    u = log_map(plane.point([0, 0]), plane.point([1, 0]))
    v = log_map(plane.point([5, 0]), plane.point([6, 0]))
    with pytest.raises(BaseMismatch):
        tangent_inner(u, v)


def test_comparison_angle_examples(plane, sphere):
    p, x, y = plane.point([0, 0]), plane.point([1, 0]), plane.point([0, 1])
    assert comparison_angle(0.0, p, x, y) == pytest.approx(math.pi / 2)

    # collinear with x, y on the same side of p
    assert comparison_angle(
        0.0, plane.point([0, 0]), plane.point([1, 0]), plane.point([2, 0])
    ) == pytest.approx(0.0)

    # spherical right triangle with all sides pi/2
    north = sphere.point([0, 0, 1])
    ex = sphere.point([1, 0, 0])
    ey = sphere.point([0, 1, 0])
    assert comparison_angle(1.0, north, ex, ey) == pytest.approx(math.pi / 2)


def test_comparison_angle_errors(plane, sphere):
    with pytest.raises(DegenerateTriangle):
        comparison_angle(0.0, plane.point([0, 0]), plane.point([0, 0]), plane.point([1, 0]))
    north = sphere.point([0, 0, 1])
    south = sphere.point([0, 0, -1])
    ex = sphere.point([1, 0, 0])
    with pytest.raises(PerimeterTooLarge):
        comparison_angle(1.0, north, south, ex)


@given(
    a=st.floats(0.1, 2.0),
    b=st.floats(0.1, 2.0),
    frac=st.floats(0.05, 0.95),
)
@settings(max_examples=200, deadline=None)
def test_comparison_angle_kappa_limit(a, b, frac):
    """The curved-model formulas converge to the flat one as kappa -> 0.

    Degenerate triangles are excluded: arccos is ill-conditioned at angle 0
    or pi for every kappa, so the comparison is meaningless there.
    """
    lo, hi = abs(a - b), a + b
    c = lo + frac * (hi - lo)
    flat = comparison_angle_from_sides(0.0, a, b, c)
    for kappa in (1e-6, -1e-6):
        assert comparison_angle_from_sides(kappa, a, b, c) == pytest.approx(
            flat, abs=1e-4
        )


def test_flat_angle_constant_along_geodesics(plane):
    """In flat space the comparison angle at p is invariant when the other
    two vertices slide along their geodesics from p."""
    rng = np.random.default_rng(4)
    for _ in range(50):
        p, x, y = (plane.random_point(rng) for _ in range(3))
        if min(distance(p, x), distance(p, y)) < 1e-3:
            continue
        base = comparison_angle(0.0, p, x, y)
        gx, gy = geodesic(p, x), geodesic(p, y)
        for s, t in [(0.3, 0.9), (0.7, 0.2), (1.0, 0.5)]:
            ang = comparison_angle(0.0, p, gx.eval(s), gy.eval(t))
            assert ang == pytest.approx(base, abs=1e-9)


def _spaces_for_metric_invariants(line_grid):
    rng_pool = np.random.default_rng(17)
    pool = [line_grid.random_point(rng_pool) for _ in range(60)]
    return [
        (Euclidean(3), None),
        (Sphere(3), None),
        (SpiderTree(4), None),
        (Wasserstein1D(5), None),
        (GaussianBures(2), None),
        (line_grid, pool),
    ]


@pytest.mark.parametrize("case", range(6))
def test_metric_axioms_on_random_triples(case, line_grid):
    """Symmetry and the triangle inequality on 1e4 seeded triples per space.

    Grid measures are drawn from a fixed pool so the exact-transport solver
    runs on cached pairs rather than 3e4 fresh instances.
    """
    space, pool = _spaces_for_metric_invariants(line_grid)[case]
    rng = np.random.default_rng(100 + case)
    if pool is not None:
        dcache = {}

        def dist(i, j):
            key = (min(i, j), max(i, j))
            if key not in dcache:
                dcache[key] = distance(pool[key[0]], pool[key[1]])
            return dcache[key]

        for _ in range(10_000):
            i, j, k = rng.integers(len(pool), size=3)
            assert abs(dist(i, j) - dist(j, i)) <= 1e-9
            assert dist(i, k) <= dist(i, j) + dist(j, k) + 1e-9
        return
    for _ in range(10_000):
        a, b, c = (space.random_point(rng) for _ in range(3))
        dab = distance(a, b)
        assert abs(dab - distance(b, a)) <= 1e-9
        assert distance(a, c) <= dab + distance(b, c) + 1e-9
        assert distance(a, a) <= 1e-9


@pytest.mark.parametrize("space_name", ["plane", "sphere", "spider", "w1d", "bures2"])
def test_geodesics_have_constant_speed(space_name, request):
    space = request.getfixturevalue(space_name)
    rng = np.random.default_rng(7)
    ts = np.linspace(0.0, 1.0, 11)
    for _ in range(40):
        a, b = space.random_point(rng), space.random_point(rng)
        g = geodesic(a, b)
        pts = [g.eval(t) for t in ts]
        assert distance(pts[0], a) <= 1e-9
        assert distance(pts[-1], b) <= 1e-9
        for i in range(len(ts)):
            for j in range(i + 1, len(ts)):
                expected = (ts[j] - ts[i]) * g.length
                assert distance(pts[i], pts[j]) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("space_name", ["plane", "sphere", "w1d", "bures2"])
def test_log_map_contracts_distances_on_pc_spaces(space_name, request):
    """d(x, y) <= |log_p x - log_p y| on non-negatively curved spaces, with
    equality (within 1e-9) whenever one argument is the base point."""
    space = request.getfixturevalue(space_name)
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        p, x, y = (space.random_point(rng) for _ in range(3))
        lx, ly = log_map(p, x), log_map(p, y)
        assert distance(x, y) <= tangent_norm_diff(lx, ly) + 1e-9
    for _ in range(100):
        p, x = space.random_point(rng), space.random_point(rng)
        lx, lp = log_map(p, x), log_map(p, p)
        assert tangent_norm_diff(lx, lp) == pytest.approx(distance(p, x), abs=1e-9)
        assert tangent_inner(lx, lx) == pytest.approx(lx.magnitude**2, abs=1e-9)


def test_log_along_geodesic_scales_linearly(sphere):
    rng = np.random.default_rng(21)
    for _ in range(50):
        p, x = sphere.random_point(rng), sphere.random_point(rng)
        g = geodesic(p, x)
        full = log_map(p, x)
        for t in (0.25, 0.5, 0.75):
            part = log_map(p, g.eval(t))
            assert part.magnitude == pytest.approx(t * full.magnitude, abs=1e-9)
            cos = np.dot(part.direction, full.direction)
            assert cos == pytest.approx(1.0, abs=1e-9)


class TestCurvatureSign:
    """Each concrete space shows its known curvature sign on 1e4 samples."""

    def test_euclidean_npc(self):
        rep = check_curvature_sign(Euclidean(3), "NPC", 10_000, seed=2)
        assert rep.violations == 0
        # flat space sits exactly on the comparison identity
        assert rep.worst_margin <= 1e-10

    def test_spider_npc(self):
        rep = check_curvature_sign(SpiderTree(5), "NPC", 10_000, seed=3)
        assert rep.violations == 0

    def test_sphere_pc(self):
        rep = check_curvature_sign(Sphere(3), "PC", 10_000, seed=4)
        assert rep.violations == 0
        assert rep.quadruple_checks > 9000

    def test_wasserstein1d_pc(self):
        rep = check_curvature_sign(Wasserstein1D(4), "PC", 10_000, seed=5)
        assert rep.violations == 0

    def test_gaussian_pc(self, bures2):
        rep = check_curvature_sign(bures2, "PC", 10_000, seed=6)
        assert rep.violations == 0

    def test_grid_line_pc_quadruples_only(self, line_grid):
        rep = check_curvature_sign(line_grid, "PC", 10_000, seed=7)
        assert rep.violations == 0
        assert rep.geodesic_checks == 0 and rep.quadruple_checks > 9000

    def test_grid_plane_pc(self, plane_grid):
        rep = check_curvature_sign(plane_grid, "PC", 300, seed=8)
        assert rep.violations == 0

    def test_bad_target(self, plane):
        with pytest.raises(UnsupportedTarget):
            check_curvature_sign(plane, "flat", 10, seed=0)

    def test_space_without_sampler(self):
        class Bare(Space):
            kind = "bare"

        with pytest.raises(UnsupportedTarget):
            check_curvature_sign(Bare(), "NPC", 10, seed=0)


def test_sphere_antipodal_selection_is_deterministic():
    sphere = Sphere(3)
    north = sphere.point([0, 0, 1])
    south = sphere.point([0, 0, -1])
    mid1 = geodesic(north, south).eval(0.5)
    mid2 = geodesic(north, south).eval(0.5)
    np.testing.assert_allclose(mid1.coords, mid2.coords)
    np.testing.assert_allclose(mid1.coords, [1, 0, 0], atol=1e-12)

    bare = Sphere(3, antipodal_rule=None)
    with pytest.raises(NonUniqueGeodesic):
        geodesic(bare.point([0, 0, 1]), bare.point([0, 0, -1]))
