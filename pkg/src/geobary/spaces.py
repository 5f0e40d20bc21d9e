"""Concrete metric spaces with closed-form distances, geodesics and log maps.

This module holds the spaces whose geometry needs no solver: Euclidean space,
the unit sphere with the angle metric, the spider tree (rays glued at an
origin) and the 1-D Wasserstein space represented by quantile grids.  The
Gaussian location-scatter space and the discrete transport space live in
``gaussian`` and ``gridot``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CutLocusAmbiguity, GridMismatch, NonUniqueGeodesic
from .metric_core import MEMBERSHIP_TOL, Point, Space, _readonly


@dataclass(frozen=True)
class Euclidean(Space):
    """R^d with the Euclidean metric; geodesics are line segments."""

    d: int
    kind: str = "euclidean"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.d

    def _validate(self, coords):
        v = np.asarray(coords, dtype=float).reshape(-1)
        if v.shape != (self.d,):
            raise ValueError(f"expected {self.d} coordinates, got {v.shape}")
        return _readonly(v)

    def _distance(self, a, b) -> float:
        return float(np.linalg.norm(a - b))

    def _geodesic(self, a, b):
        return lambda t: _readonly((1.0 - t) * a + t * b)

    def _log(self, p, x):
        v = x - p
        n = float(np.linalg.norm(v))
        if n == 0.0:
            return None, 0.0
        return _readonly(v / n), n

    def _direction_cos(self, p, d1, d2) -> float:
        return float(np.dot(d1, d2))

    def random_point(self, rng) -> Point:
        return self.point(rng.normal(size=self.d))

    def extension_limit(self, a, b) -> float:
        return math.inf

    def extend_point(self, a, b, lam: float):
        return _readonly(a + (1.0 + lam) * (b - a))

    def coord_fields(self):
        return [f"x{i}" for i in range(self.d)]

    def point_to_row(self, pt):
        return [float(v) for v in pt.coords]

    def point_from_row(self, row):
        return self.point(row)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Sphere(Space):
    """Unit sphere S^{d-1} in R^d with the angle metric.

    Antipodal pairs admit a continuum of geodesics; by default they are
    resolved deterministically through the first canonical basis direction
    orthogonal to the starting point.  Pass ``antipodal_rule=None`` to get
    NonUniqueGeodesic / CutLocusAmbiguity errors instead.
    """

    d: int
    antipodal_rule: str | None = "canonical"
    kind: str = "sphere"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("ambient dimension must be >= 2")

    @property
    def dim(self) -> int:
        return self.d

    def _validate(self, coords):
        v = np.asarray(coords, dtype=float).reshape(-1)
        if v.shape != (self.d,):
            raise ValueError(f"expected {self.d} coordinates, got {v.shape}")
        if abs(np.linalg.norm(v) - 1.0) > MEMBERSHIP_TOL:
            raise ValueError("sphere points must have unit norm within 1e-12")
        return _readonly(_unit(v))

    def _distance(self, a, b) -> float:
        # atan2 form is stable at both ends of [0, pi], unlike arccos
        c = float(np.dot(a, b))
        s = float(np.linalg.norm(b - c * a))
        return math.atan2(s, c)

    def _canonical_orthogonal(self, p) -> np.ndarray:
        for j in range(self.d):
            e = np.zeros(self.d)
            e[j] = 1.0
            u = e - np.dot(e, p) * p
            n = float(np.linalg.norm(u))
            if n > 1e-9:
                return u / n
        raise AssertionError("unreachable: p is unit norm")

    def _is_antipodal(self, a, b) -> bool:
        return float(np.dot(a, b)) < -1.0 + MEMBERSHIP_TOL

    def _initial_direction(self, a, b, context: str) -> np.ndarray:
        """Unit tangent at ``a`` of the selected geodesic towards ``b``."""
        if self._is_antipodal(a, b):
            if self.antipodal_rule is None:
                if context == "log":
                    raise CutLocusAmbiguity("antipodal log without a selection rule")
                raise NonUniqueGeodesic("antipodal endpoints admit many geodesics")
            return self._canonical_orthogonal(a)
        return _unit(b - float(np.dot(a, b)) * a)

    def _geodesic(self, a, b):
        theta = self._distance(a, b)
        if theta < 1e-15:
            return lambda t: a
        u = self._initial_direction(a, b, "geodesic")

        def path(t):
            return _readonly(math.cos(t * theta) * a + math.sin(t * theta) * u)

        return path

    def _log(self, p, x):
        theta = self._distance(p, x)
        if theta < 1e-15:
            return None, 0.0
        return _readonly(self._initial_direction(p, x, "log")), theta

    def _direction_cos(self, p, d1, d2) -> float:
        return float(np.dot(d1, d2))

    def random_point(self, rng) -> Point:
        return self.point(_unit(rng.normal(size=self.d)))

    def extension_limit(self, a, b) -> float:
        # great-circle arcs are shortest paths iff their length is <= pi
        theta = self._distance(a, b)
        if theta < 1e-15:
            return math.inf
        return math.pi / theta - 1.0

    def extend_point(self, a, b, lam: float):
        theta = self._distance(a, b)
        if theta == 0.0:
            return a
        if (1.0 + lam) * theta > math.pi + 1e-12:
            raise ValueError(f"extension by {lam} leaves the shortest-path regime")
        u = self._initial_direction(a, b, "geodesic")
        phi = (1.0 + lam) * theta
        return _readonly(math.cos(phi) * a + math.sin(phi) * u)

    def coord_fields(self):
        return [f"x{i}" for i in range(self.d)]

    def point_to_row(self, pt):
        return [float(v) for v in pt.coords]

    def point_from_row(self, row):
        return self.point(row)


@dataclass(frozen=True)
class SpiderTree(Space):
    """R rays glued at a common origin; the canonical NPC non-manifold.

    A point is (ray, radius); the origin is canonicalised to ray 0.  Rays are
    unbounded.  When a geodesic is prolonged through the origin the
    continuation follows the lowest-index ray different from the incoming
    one (a fixed, documented selection).
    """

    rays: int
    kind: str = "spider"

    def __post_init__(self):
        if self.rays < 2:
            raise ValueError("a spider tree needs at least 2 rays")

    @property
    def dim(self) -> int:
        return 1

    def _validate(self, ray, radius):
        ray = int(ray)
        radius = float(radius)
        if not 0 <= ray < self.rays:
            raise ValueError(f"ray {ray} outside [0, {self.rays})")
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        if radius == 0.0:
            ray = 0
        return (ray, radius)

    def _distance(self, a, b) -> float:
        (ra, sa), (rb, sb) = a, b
        # the origin is canonicalised to ray 0, so ray equality is enough
        return abs(sa - sb) if ra == rb else sa + sb

    def _geodesic(self, a, b):
        (ra, sa), (rb, sb) = a, b
        length = self._distance(a, b)

        def path(t):
            if length == 0.0:
                return a
            if ra == rb:
                return self._validate(ra, sa + t * (sb - sa))
            s = t * length
            if s <= sa:
                return self._validate(ra, sa - s)
            return self._validate(rb, s - sa)

        return path

    def _log(self, p, x):
        (rp, sp), (rx, sx) = p, x
        mag = self._distance(p, x)
        if mag == 0.0:
            return None, 0.0
        if sp == 0.0:
            return ("ray", rx), mag
        if rx == rp and sx > sp:
            return ("axis", +1), mag
        return ("axis", -1), mag

    def _direction_cos(self, p, d1, d2) -> float:
        # distinct rays (or opposite axis senses) meet at angle pi
        return 1.0 if d1 == d2 else -1.0

    def random_point(self, rng) -> Point:
        return self.point(int(rng.integers(self.rays)), abs(float(rng.normal())))

    def _continuation_ray(self, incoming: int) -> int:
        return 0 if incoming != 0 else 1

    def extension_limit(self, a, b) -> float:
        # rays are unbounded, so any geodesic extends without backtracking
        return math.inf

    def extend_point(self, a, b, lam: float):
        (ra, sa), (rb, sb) = a, b
        length = self._distance(a, b)
        if length == 0.0:
            return a
        s = (1.0 + lam) * length
        if ra == rb:
            if sb > sa:
                return self._validate(ra, sa + s)
            end = sa - s
            if end >= 0.0:
                return self._validate(ra, end)
            return self._validate(self._continuation_ray(ra), -end)
        if s <= sa:
            return self._validate(ra, sa - s)
        return self._validate(rb, s - sa)

    def coord_fields(self):
        return ["ray", "radius"]

    def point_to_row(self, pt):
        ray, radius = pt.coords
        return [float(ray), radius]

    def point_from_row(self, row):
        return self.point(int(round(row[0])), row[1])


@dataclass(frozen=True)
class Wasserstein1D(Space):
    """1-D Wasserstein space on a K-point quantile grid.

    A measure is stored as the values of its quantile function at the
    midpoint levels (i + 1/2)/K, which embeds the space isometrically onto a
    convex cone of R^K with the norm ``sqrt(sum(v^2)/K)``.  Barycenters for
    the squared distance are exact quantile averages.
    """

    K: int
    kind: str = "wasserstein1d"

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("quantile grid needs K >= 1")

    @property
    def dim(self) -> int:
        return self.K

    def _validate(self, grid):
        g = np.asarray(grid, dtype=float).reshape(-1)
        if g.shape != (self.K,):
            raise GridMismatch(f"expected {self.K} quantile values, got {g.shape}")
        if np.any(np.diff(g) < -MEMBERSHIP_TOL):
            raise ValueError("quantile grid must be nondecreasing")
        return _readonly(np.maximum.accumulate(g))

    def _norm(self, v) -> float:
        return float(np.linalg.norm(v)) / math.sqrt(self.K)

    def _distance(self, a, b) -> float:
        return self._norm(a - b)

    def _geodesic(self, a, b):
        return lambda t: _readonly((1.0 - t) * a + t * b)

    def _log(self, p, x):
        v = x - p
        n = self._norm(v)
        if n == 0.0:
            return None, 0.0
        return _readonly(v / n), n

    def _direction_cos(self, p, d1, d2) -> float:
        return float(np.dot(d1, d2)) / self.K

    def random_point(self, rng) -> Point:
        return self.point(np.sort(rng.normal(size=self.K)))

    def extension_limit(self, a, b) -> float:
        # extension stays a geodesic while the extended grid is nondecreasing
        u = np.diff(a)
        v = np.diff(b)
        shrink = u > v  # gaps that close as the extension grows
        if not np.any(shrink):
            return math.inf
        return float(np.min(v[shrink] / (u[shrink] - v[shrink])))

    def extend_point(self, a, b, lam: float):
        return self._validate(a + (1.0 + lam) * (b - a))

    def coord_fields(self):
        return [f"q{i}" for i in range(self.K)]

    def point_to_row(self, pt):
        return [float(v) for v in pt.coords]

    def point_from_row(self, row):
        return self.point(row)
