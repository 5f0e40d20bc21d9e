"""Space-agnostic geometric kernel.

Defines the point/geodesic/tangent-vector records, the abstract space
interface implemented by the concrete spaces, comparison angles against the
constant-curvature model surfaces, and randomized curvature-sign diagnostics.

All records are immutable after construction and all operations are pure, so
everything here is safe for concurrent read access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .errors import (
    BaseMismatch,
    DegenerateTriangle,
    PerimeterTooLarge,
    SpaceMismatch,
    UnsupportedOperation,
    UnsupportedTarget,
)
from .rng import rng_from

# Geometric identities are asserted at 1e-9 absolute; SPD and simplex
# membership at 1e-12 (double precision, desk-scale condition numbers).
GEOM_TOL = 1e-9
MEMBERSHIP_TOL = 1e-12


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Point:
    """A point of a concrete space, with space-specific coordinates."""

    space: "Space"
    coords: Any

    def __repr__(self):
        return f"Point({self.space.kind}, {self.coords!r})"


@dataclass(frozen=True, eq=False)
class GeodesicView:
    """Constant-speed geodesic ``[0, 1] -> M`` between two points."""

    endpoints: tuple[Point, Point]
    length: float
    _eval: Callable[[float], Point]

    def eval(self, t: float) -> Point:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"geodesic parameter {t} outside [0, 1]")
        return self._eval(float(t))


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Element of the tangent cone at ``base``: direction class + magnitude.

    ``direction`` is a space-specific unit record and is None exactly at the
    cone tip (magnitude 0).
    """

    base: Point
    direction: Optional[Any]
    magnitude: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("tangent magnitude must be nonnegative")


class Space:
    """Abstract metric space with geodesics, log maps and a point sampler.

    Concrete subclasses implement the underscore hooks on raw coordinate
    records; the module-level wrappers add the cross-space validation.
    """

    kind: str = "abstract"

    # capability flags consumed by the diagnostics below
    supports_geodesics: bool = True
    supports_log: bool = True

    @property
    def dim(self) -> int:
        raise NotImplementedError

    # -- construction -----------------------------------------------------
    def point(self, *args, **kwargs) -> Point:
        return Point(self, self._validate(*args, **kwargs))

    def _validate(self, *args, **kwargs):
        raise NotImplementedError

    # -- geometry hooks ----------------------------------------------------
    def _distance(self, a, b) -> float:
        raise NotImplementedError

    def _geodesic(self, a, b) -> Callable[[float], Any]:
        """Map t -> coords along the (selected) geodesic from a to b."""
        raise NotImplementedError

    def _log(self, p, x) -> tuple[Optional[Any], float]:
        """Direction record and magnitude of the geodesic from p to x."""
        raise NotImplementedError

    def _direction_cos(self, p, d1, d2) -> float:
        """Cosine of the angle between two unit direction records at p."""
        raise NotImplementedError

    def _interpolate(self, a, b, t: float):
        """Default probe path: the geodesic.  Grid measures override this
        with linear interpolation because their cone geodesics are not
        constructed."""
        return self._geodesic(a, b)(t)

    def random_point(self, rng: np.random.Generator) -> Point:
        raise NotImplementedError

    # -- geodesic extension (used by the variance-inequality analysis) ----
    def extension_limit(self, a, b) -> float:
        """Largest lam such that the geodesic a->b extended to parameter
        1+lam remains a shortest path; ``math.inf`` when unconstrained."""
        raise UnsupportedOperation(f"{self.kind}: no geodesic extension rule")

    def extend_point(self, a, b, lam: float):
        """Coordinates of the extended endpoint at parameter 1+lam."""
        raise UnsupportedOperation(f"{self.kind}: no geodesic extension rule")

    # -- CSV encoding (one row per atom; used by the CLI) ------------------
    def coord_fields(self) -> list[str]:
        raise NotImplementedError

    def point_to_row(self, pt: Point) -> list[float]:
        raise NotImplementedError

    def point_from_row(self, row) -> Point:
        raise NotImplementedError


def _require_same_space(a: Point, b: Point):
    if a.space != b.space:
        raise SpaceMismatch(f"{a.space.kind} vs {b.space.kind}")


def distance(a: Point, b: Point) -> float:
    """Metric distance; dispatches to the shared space of the two points."""
    _require_same_space(a, b)
    return float(a.space._distance(a.coords, b.coords))


def geodesic(a: Point, b: Point) -> GeodesicView:
    """Constant-speed geodesic from ``a`` to ``b``.

    Raises NonUniqueGeodesic when the endpoints admit several geodesics and
    the space has no selection rule configured.
    """
    _require_same_space(a, b)
    space = a.space
    length = distance(a, b)
    path = space._geodesic(a.coords, b.coords)
    return GeodesicView(
        endpoints=(a, b),
        length=length,
        _eval=lambda t: Point(space, path(t)),
    )


def log_map(p: Point, x: Point) -> TangentVector:
    """Tangent-cone image of ``x`` at ``p``: geodesic direction + distance."""
    _require_same_space(p, x)
    direction, magnitude = p.space._log(p.coords, x.coords)
    return TangentVector(base=p, direction=direction, magnitude=float(magnitude))


def tangent_inner(u: TangentVector, v: TangentVector) -> float:
    """Cone inner product ``|u||v| cos(angle)`` of two vectors at one base."""
    bu, bv = u.base, v.base
    # identity shortcut first: d(p, p) can carry sqrt-of-cancellation noise
    if bu is not bv and (
        bu.space != bv.space or bu.space._distance(bu.coords, bv.coords) > 1e-8
    ):
        raise BaseMismatch("tangent vectors live at different base points")
    if u.magnitude == 0.0 or v.magnitude == 0.0:
        return 0.0
    cos = bu.space._direction_cos(bu.coords, u.direction, v.direction)
    return u.magnitude * v.magnitude * float(np.clip(cos, -1.0, 1.0))


def tangent_norm_diff(u: TangentVector, v: TangentVector) -> float:
    """Cone distance ``|u - v|`` at the common base point."""
    return math.sqrt(
        max(
            u.magnitude**2 + v.magnitude**2 - 2.0 * tangent_inner(u, v),
            0.0,
        )
    )


# -- comparison angles ------------------------------------------------------


def model_diameter(kappa: float) -> float:
    """Diameter of the model surface of constant curvature ``kappa``."""
    return math.pi / math.sqrt(kappa) if kappa > 0 else math.inf


def _sk(kappa: float, r: float) -> float:
    if kappa > 0:
        return math.sin(r * math.sqrt(kappa)) / math.sqrt(kappa)
    return math.sinh(r * math.sqrt(-kappa)) / math.sqrt(-kappa)


def _ck(kappa: float, r: float) -> float:
    if kappa > 0:
        return math.cos(r * math.sqrt(kappa))
    return math.cosh(r * math.sqrt(-kappa))


def comparison_angle_from_sides(kappa: float, a: float, b: float, c: float) -> float:
    """Angle at the apex of the model-surface triangle with side lengths
    (a, b) adjacent and c opposite."""
    if a <= 0 or b <= 0:
        raise DegenerateTriangle("apex coincides with a vertex")
    if a + b + c >= 2.0 * model_diameter(kappa):
        raise PerimeterTooLarge(f"perimeter {a + b + c} >= {2 * model_diameter(kappa)}")
    if kappa == 0.0:
        cos = (a * a + b * b - c * c) / (2.0 * a * b)
    else:
        cos = (_ck(kappa, c) - _ck(kappa, a) * _ck(kappa, b)) / (
            kappa * _sk(kappa, a) * _sk(kappa, b)
        )
    return math.acos(min(1.0, max(-1.0, cos)))


def comparison_angle(kappa: float, p: Point, x: Point, y: Point) -> float:
    """Comparison angle at ``p`` of the triangle {p, x, y} in the model
    surface of curvature ``kappa``."""
    a = distance(p, x)
    b = distance(p, y)
    c = distance(x, y)
    return comparison_angle_from_sides(kappa, a, b, c)


# -- curvature-sign diagnostics ---------------------------------------------


@dataclass(frozen=True)
class CurvatureReport:
    """Outcome of a randomized curvature-sign check.

    ``worst_margin`` is the largest signed violation observed: positive means
    some sample breached the comparison inequality by that amount, negative
    means every sample had at least ``-worst_margin`` of slack.
    """

    target: str
    samples: int
    violations: int
    worst_margin: float
    geodesic_checks: int = 0
    quadruple_checks: int = 0


_MARGIN_TOL = 1e-8


def check_curvature_sign(
    space: Space, target: str, samples: int, seed: int
) -> CurvatureReport:
    """Test the curvature sign of ``space`` on seeded random configurations.

    For each sampled (p, x, y, t) the squared distance to a geodesic point is
    compared against the flat-space value
    ``(1-t) d(p,x)^2 + t d(p,y)^2 - t(1-t) d(x,y)^2``; NPC requires <=, PC
    requires >=.  For PC the quadruple test (three comparison angles at a
    common vertex summing to at most 2*pi) runs as well, and is the only test
    for spaces whose geodesics are not constructed.
    """
    if target not in ("NPC", "PC"):
        raise UnsupportedTarget(f"unknown curvature target {target!r}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    try:
        probe = space.random_point(np.random.default_rng(0))
    except NotImplementedError:
        raise UnsupportedTarget(f"{space.kind}: no random point sampler") from None
    del probe

    rng = rng_from(seed, 0xC0)
    violations = 0
    worst = -math.inf
    geo_checks = 0
    quad_checks = 0

    def margin_update(m: float):
        nonlocal violations, worst
        worst = max(worst, m)
        if m > _MARGIN_TOL:
            violations += 1

    for _ in range(samples):
        if space.supports_geodesics:
            p, x, y = (space.random_point(rng) for _ in range(3))
            dxy = distance(x, y)
            if dxy < 1e-9:
                continue
            t = float(rng.uniform(0.05, 0.95))
            gt = geodesic(x, y).eval(t)
            flat = (
                (1.0 - t) * distance(p, x) ** 2
                + t * distance(p, y) ** 2
                - t * (1.0 - t) * dxy**2
            )
            delta = distance(p, gt) ** 2 - flat
            margin_update(delta if target == "NPC" else -delta)
            geo_checks += 1
        if target == "PC":
            pts = [space.random_point(rng) for _ in range(4)]
            dists = [
                [distance(pts[i], pts[j]) if i != j else 0.0 for j in range(4)]
                for i in range(4)
            ]
            if min(dists[i][j] for i in range(4) for j in range(4) if i != j) < 1e-9:
                continue
            p, x, y, z = range(4)
            try:
                s = (
                    comparison_angle_from_sides(0.0, dists[p][x], dists[p][y], dists[x][y])
                    + comparison_angle_from_sides(0.0, dists[p][y], dists[p][z], dists[y][z])
                    + comparison_angle_from_sides(0.0, dists[p][z], dists[p][x], dists[z][x])
                )
            except DegenerateTriangle:
                continue
            margin_update(s - 2.0 * math.pi)
            quad_checks += 1

    return CurvatureReport(
        target=target,
        samples=samples,
        violations=violations,
        worst_margin=worst,
        geodesic_checks=geo_checks,
        quadruple_checks=quad_checks,
    )
