"""Domain geometry: intervals, polygons, disks, analytic balls.

Domains carry the exact geometry (the mesh is built separately).  Star-shape
queries are closed-form: per-facet for polygons, radial for disks/balls,
endpoint for intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, NotStarShaped

_GEOM_TOL = 1e-10


@dataclass
class StarShapeReport:
    """Result of a star-shape query with respect to a chosen origin.

    min_xdotnu is the minimum of (x - origin) . nu over the boundary;
    nonnegative means star-shaped, strictly positive means strictly so.
    """

    origin: np.ndarray
    min_xdotnu: float
    is_star: bool
    strict_rho: float


class Domain:
    """A bounded domain of one of four kinds.

    kinds: "interval" (a, b); "polygon" (simple, vertices CCW);
    "disk" (center, radius, dim 2); "ball" (center, radius, any dim,
    analytic only, not meshable).
    """

    def __init__(self, kind, **geom):
        self.kind = kind
        if kind == "interval":
            a, b = float(geom["a"]), float(geom["b"])
            if not b > a:
                raise ConfigError(f"interval needs b > a, got ({a}, {b})")
            self.a, self.b = a, b
            self.dim = 1
        elif kind == "polygon":
            verts = np.asarray(geom["vertices"], dtype=float)
            if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
                raise ConfigError("polygon needs >= 3 two-dimensional vertices")
            if _shoelace(verts) < 0:
                verts = verts[::-1].copy()
            if abs(_shoelace(verts)) < _GEOM_TOL:
                raise ConfigError("polygon has (numerically) zero area")
            self.vertices = verts
            self.dim = 2
        elif kind in ("disk", "ball"):
            self.center = np.atleast_1d(np.asarray(geom["center"], dtype=float))
            self.radius = float(geom["radius"])
            if self.radius <= 0:
                raise ConfigError("radius must be positive")
            self.dim = len(self.center)
            if kind == "disk" and self.dim != 2:
                raise ConfigError("disk center must be 2-dimensional")
        else:
            raise ConfigError(f"unknown domain kind {kind!r}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def interval(cls, a, b):
        return cls("interval", a=a, b=b)

    @classmethod
    def polygon(cls, vertices):
        return cls("polygon", vertices=vertices)

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0):
        return cls("disk", center=center, radius=radius)

    @classmethod
    def ball(cls, center, radius=1.0):
        return cls("ball", center=center, radius=radius)

    @classmethod
    def from_spec(cls, spec):
        """Build from a JSON-style dict, e.g. {"kind": "interval", "a": 0, "b": 1}."""
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError("domain spec must be a dict with a 'kind' key")
        spec = dict(spec)
        kind = spec.pop("kind")
        if kind == "ball_analytic":
            kind = "ball"
        try:
            return cls(kind, **spec)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad domain spec for kind {kind!r}: {exc}") from exc

    # -- basic geometry ----------------------------------------------------

    def volume(self):
        """Analytic volume (length / area / N-volume) of the domain."""
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "polygon":
            return _shoelace(self.vertices)
        # disk or ball
        n = self.dim
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius**n

    def bounding_box(self):
        if self.kind == "interval":
            return np.array([self.a]), np.array([self.b])
        if self.kind == "polygon":
            return self.vertices.min(axis=0), self.vertices.max(axis=0)
        return self.center - self.radius, self.center + self.radius

    def diameter(self):
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "polygon":
            d = self.vertices[:, None, :] - self.vertices[None, :, :]
            return float(np.linalg.norm(d, axis=2).max())
        return 2.0 * self.radius

    def contains(self, points, tol=1e-12):
        """Boolean mask: which points lie in the closed domain."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "interval":
            x = pts[:, 0]
            return (x >= self.a - tol) & (x <= self.b + tol)
        if self.kind == "polygon":
            return _points_in_polygon(pts, self.vertices, tol)
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + tol

    # -- closed-form ranges used for exponent bounds -----------------------

    def range_of_linear(self, b):
        """(min, max) of x . b over the closed domain."""
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if self.kind == "interval":
            vals = np.array([self.a * b[0], self.b * b[0]])
            return float(vals.min()), float(vals.max())
        if self.kind == "polygon":
            vals = self.vertices @ b
            return float(vals.min()), float(vals.max())
        mid = float(self.center @ b)
        spread = float(np.linalg.norm(b)) * self.radius
        return mid - spread, mid + spread

    def range_of_radius(self, center):
        """(min, max) of |x - center| over the closed domain."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if self.kind == "interval":
            d0, d1 = abs(self.a - c[0]), abs(self.b - c[0])
            rmin = 0.0 if self.a <= c[0] <= self.b else min(d0, d1)
            return rmin, max(d0, d1)
        if self.kind == "polygon":
            rmax = float(np.linalg.norm(self.vertices - c, axis=1).max())
            if bool(self.contains(c[None, :])[0]):
                return 0.0, rmax
            edges = _polygon_edges(self.vertices)
            rmin = min(_point_segment_distance(c, a, b) for a, b in edges)
            return float(rmin), rmax
        d = float(np.linalg.norm(c - self.center))
        return max(0.0, d - self.radius), d + self.radius

    # -- star shape --------------------------------------------------------

    def _min_xdotnu(self, origin):
        """min over the boundary of (x - origin) . nu (exact per kind)."""
        o = np.atleast_1d(np.asarray(origin, dtype=float))
        if self.kind == "interval":
            return min(o[0] - self.a, self.b - o[0])
        if self.kind == "polygon":
            vals = []
            for a, b in _polygon_edges(self.vertices):
                nu = _outward_normal(a, b)
                vals.append(float((a - o) @ nu))
            return min(vals)
        return self.radius - float(np.linalg.norm(o - self.center))


def star_shape_report(domain, origin, boundary_samples=None, tol_geom=_GEOM_TOL):
    """Check whether the domain is star-shaped with respect to origin.

    boundary_samples is accepted for interface stability but unused: all
    supported kinds admit an exact evaluation (per facet for polygons).
    """
    o = np.atleast_1d(np.asarray(origin, dtype=float))
    if len(o) != domain.dim:
        raise ConfigError(f"origin has dim {len(o)}, domain has dim {domain.dim}")
    m = domain._min_xdotnu(o)
    return StarShapeReport(
        origin=o,
        min_xdotnu=float(m),
        is_star=bool(m >= -tol_geom),
        strict_rho=float(max(m, 0.0)),
    )


def find_star_center(domain, grid=16, tol_geom=_GEOM_TOL):
    """Search for an origin maximizing min (x - origin) . nu.

    Coarse grid over the bounding box followed by a Nelder-Mead polish;
    the objective is concave (a min of affine functions of the origin),
    so the polish is reliable.  Raises NotStarShaped when even the best
    origin leaves min_xdotnu < 0.
    """
    if domain.kind in ("disk", "ball"):
        return domain.center.copy()
    if domain.kind == "interval":
        return np.array([0.5 * (domain.a + domain.b)])

    lo, hi = domain.bounding_box()
    axes = [lo[d] + (hi[d] - lo[d]) * np.arange(1, grid) / grid for d in range(2)]
    gx, gy = np.meshgrid(*axes, indexing="ij")
    cand = np.column_stack([gx.ravel(), gy.ravel()])
    cand = cand[domain.contains(cand)]
    cand = np.vstack([cand, domain.vertices.mean(axis=0)])
    scores = np.array([domain._min_xdotnu(c) for c in cand])
    best = cand[int(np.argmax(scores))]

    res = minimize(
        lambda o: -domain._min_xdotnu(o),
        best,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 4000},
    )
    origin = res.x if -res.fun >= scores.max() else best
    if domain._min_xdotnu(origin) < -tol_geom:
        raise NotStarShaped(
            f"no admissible star center found (best min_xdotnu = "
            f"{domain._min_xdotnu(origin):.3e})"
        )
    return np.asarray(origin, dtype=float)


def sample_points(domain, resolution=64):
    """Deterministic grid sample of the closed domain, (npts, dim).

    Grid nodes are lo + (hi-lo)*i/resolution, so doubling the resolution
    refines the sample into a superset (bounds estimates are monotone
    under refinement).
    """
    resolution = int(resolution)
    if resolution < 1:
        raise ConfigError("sampling resolution must be >= 1")
    lo, hi = domain.bounding_box()
    axes = [lo[d] + (hi[d] - lo[d]) * np.arange(resolution + 1) / resolution
            for d in range(domain.dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    return pts[domain.contains(pts)]


# -- polygon helpers -------------------------------------------------------


def _shoelace(verts):
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _polygon_edges(verts):
    return [(verts[i], verts[(i + 1) % len(verts)]) for i in range(len(verts))]


def _outward_normal(a, b):
    """Unit outward normal of edge a->b of a CCW polygon (interior on the left)."""
    t = b - a
    n = np.array([t[1], -t[0]])
    return n / np.linalg.norm(n)


def _points_in_polygon(pts, verts, tol=1e-12):
    """Ray-casting inside test, with a tolerance band around the edges."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(verts)
    j = n - 1
    for i in range(n):
        xi, yi = verts[i]
        xj, yj = verts[j]
        cond = (yi > y) != (yj > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = (xj - xi) * (y - yi) / (yj - yi) + xi
        inside ^= cond & (x < xcross)
        j = i
    if tol > 0:
        near = np.zeros(len(pts), dtype=bool)
        for a, b in _polygon_edges(verts):
            near |= _point_segment_distance_many(pts, a, b) <= tol
        inside |= near
    return inside


def _point_segment_distance(p, a, b):
    return float(_point_segment_distance_many(p[None, :], a, b)[0])


def _point_segment_distance_many(pts, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)
