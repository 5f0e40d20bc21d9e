"""Gaussian location-scatter space under the 2-Wasserstein metric.

Points are (mean, covariance) pairs of nondegenerate Gaussians.  The squared
distance is

    W2^2 = |m0 - m1|^2 + tr(S0 + S1 - 2 (S0^{1/2} S1 S0^{1/2})^{1/2}),

the optimal map is x -> m1 + A (x - m0) with the SPD matrix

    A = S0^{-1/2} (S0^{1/2} S1 S0^{1/2})^{1/2} S0^{-1/2},

and geodesics follow ((1-t) I + t A) pushforwards, which stay inside the
family.  Matrix square roots go through symmetric eigendecompositions with a
spectral floor of 1e-12; near-singular covariances are an error rather than a
guessed limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonSPD
from .metric_core import MEMBERSHIP_TOL, Point, Space, _readonly

SPD_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class GaussianPoint:
    """Coordinate record: mean vector and SPD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __repr__(self):
        return f"GaussianPoint(mean={self.mean!r}, cov={self.cov!r})"


@dataclass(frozen=True, eq=False)
class BuresMap:
    """Affine optimal map ``x -> shift + matrix @ x`` between two Gaussians."""

    matrix: np.ndarray
    shift: np.ndarray

    def __call__(self, x):
        return self.shift + self.matrix @ np.asarray(x, dtype=float)


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def spd_sqrt(m: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Symmetric square root via eigendecomposition.

    Eigenvalues below ``-1e-10`` raise NonSPD; small negative values from
    rounding are clipped to ``floor``.  2x2 blocks use the closed form
    ``(M + sqrt(det) I) / sqrt(tr + 2 sqrt(det))``.
    """
    m = _sym(m)
    if m.shape == (2, 2) and floor == 0.0:
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        tr = m[0, 0] + m[1, 1]
        lam_min = 0.5 * tr - math.sqrt(max(0.25 * tr * tr - det, 0.0))
        if lam_min < -1e-10:
            raise NonSPD(f"matrix has eigenvalue {lam_min} below the spectral floor")
        s = math.sqrt(max(det, 0.0))
        denom = math.sqrt(max(tr + 2.0 * s, 0.0))
        if denom < 1e-150:
            return np.zeros((2, 2))
        return (m + s * np.eye(2)) / denom
    lam, q = np.linalg.eigh(m)
    if lam.min() < -1e-10:
        raise NonSPD(f"matrix has eigenvalue {lam.min()} below the spectral floor")
    lam = np.clip(lam, floor, None)
    return _sym((q * np.sqrt(lam)) @ q.T)


def _check_spd(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if np.max(np.abs(cov - cov.T)) > MEMBERSHIP_TOL:
        raise NonSPD("covariance must be symmetric within 1e-12")
    cov = _sym(cov)
    lam = np.linalg.eigvalsh(cov)
    if lam.min() <= SPD_FLOOR:
        raise NonSPD(f"smallest eigenvalue {lam.min()} at or below {SPD_FLOOR}")
    return cov


def bures_distance(a: GaussianPoint, b: GaussianPoint) -> float:
    """Wasserstein distance between two Gaussians (trace formula)."""
    s0h = spd_sqrt(a.cov)
    cross = spd_sqrt(s0h @ b.cov @ s0h)
    gap = float(np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    scale = float(np.trace(a.cov) + np.trace(b.cov))
    if gap < 1e-12 * scale:
        # near-identical covariances lose the gap to trace cancellation;
        # tr(V S0 V) with V = map - id is the same quantity as a positive
        # quadratic form, accurate down to zero
        V = bures_map(a, b).matrix - np.eye(len(a.mean))
        gap = float(np.trace(V @ a.cov @ V))
    d2 = float(np.sum((a.mean - b.mean) ** 2)) + max(gap, 0.0)
    return math.sqrt(max(d2, 0.0))


def bures_map(a: GaussianPoint, b: GaussianPoint) -> BuresMap:
    """Optimal (monotone) affine map pushing ``a`` forward to ``b``."""
    s0h = spd_sqrt(a.cov)
    if np.linalg.det(s0h) <= SPD_FLOOR:
        raise NonSPD("source covariance too close to singular for the map")
    s0h_inv = np.linalg.inv(s0h)
    matrix = _sym(s0h_inv @ spd_sqrt(s0h @ b.cov @ s0h) @ s0h_inv)
    shift = b.mean - matrix @ a.mean
    return BuresMap(matrix=_readonly(matrix), shift=_readonly(shift))


@dataclass(frozen=True)
class GaussianBures(Space):
    """Location-scatter family of d-dimensional Gaussians under W2."""

    d: int
    kind: str = "gaussian_bures"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.d

    def _validate(self, mean, cov):
        mean = np.asarray(mean, dtype=float).reshape(-1)
        if mean.shape != (self.d,):
            raise ValueError(f"expected mean of length {self.d}")
        cov = _check_spd(cov)
        if cov.shape != (self.d, self.d):
            raise ValueError(f"expected {self.d}x{self.d} covariance")
        return GaussianPoint(mean=_readonly(mean), cov=_readonly(cov))

    def _distance(self, a, b) -> float:
        return bures_distance(a, b)

    def _geodesic(self, a, b):
        A = bures_map(a, b).matrix
        eye = np.eye(self.d)

        def path(t):
            at = (1.0 - t) * eye + t * A
            return self._validate((1.0 - t) * a.mean + t * b.mean, at @ a.cov @ at)

        return path

    def _log(self, p, x):
        """Tangent record of the map ``x -> T(x) - x`` in L2 of the base.

        The record is the pair (mean shift, matrix part) scaled to unit norm
        under ``<(m,V),(m',V')> = m.m' + tr(V cov V')``.
        """
        dm = x.mean - p.mean
        V = bures_map(p, x).matrix - np.eye(self.d)
        norm2 = float(dm @ dm) + float(np.trace(V @ p.cov @ V))
        norm = math.sqrt(max(norm2, 0.0))
        if norm < 1e-15:
            return None, 0.0
        return (_readonly(dm / norm), _readonly(V / norm)), norm

    def _direction_cos(self, p, d1, d2) -> float:
        (m1, v1), (m2, v2) = d1, d2
        return float(m1 @ m2) + float(np.trace(v1 @ p.cov @ v2))

    def random_point(self, rng) -> Point:
        mean = rng.normal(size=self.d)
        g = rng.normal(size=(self.d, self.d))
        lam, q = np.linalg.eigh(_sym(g))
        lam = np.clip(lam, 0.25, None)  # sampler floor keeps conditioning mild
        return self.point(mean, (q * lam) @ q.T)

    def extension_limit(self, a, b) -> float:
        # the extended endpoint map (1+lam) A - lam I stays monotone iff
        # (1+lam) s - lam >= 0 for the smallest map eigenvalue s
        s = float(np.linalg.eigvalsh(bures_map(a, b).matrix).min())
        if s >= 1.0:
            return math.inf
        return s / (1.0 - s)

    def extend_point(self, a, b, lam: float):
        A = bures_map(a, b).matrix
        alam = _sym((1.0 + lam) * A - lam * np.eye(self.d))
        return self._validate(a.mean + (1.0 + lam) * (b.mean - a.mean), alam @ a.cov @ alam)

    def coord_fields(self):
        means = [f"m{i}" for i in range(self.d)]
        covs = [f"c{i}{j}" for i in range(self.d) for j in range(self.d)]
        return means + covs

    def point_to_row(self, pt):
        g = pt.coords
        return [float(v) for v in g.mean] + [float(v) for v in g.cov.ravel()]

    def point_from_row(self, row):
        row = np.asarray(row, dtype=float)
        if row.size != self.d + self.d * self.d:
            raise ValueError(f"expected {self.d + self.d**2} values per Gaussian atom")
        return self.point(row[: self.d], row[self.d :].reshape(self.d, self.d))
