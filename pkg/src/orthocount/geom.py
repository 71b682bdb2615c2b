"""Exact-formula hyperbolic kernel for the upper half-space models of H^2 and H^3.

Conventions
-----------
Points are (z, h) with h > 0; the horizontal part z is a real number in
dimension 2 and a complex number in dimension 3. Boundary points are either
finite (a real/complex z) or the point at infinity. Isometries are 2x2
unit-determinant matrices (real for H^2, complex for H^3) modulo sign, acting
by Moebius transformations, extended to the upper half space by the Poincare
formula

    D = |c z + d|^2 + |c|^2 h^2,   z' = ((a z + b) conj(c z + d) + a conj(c) h^2) / D,
    h' = h / D.

Distances use  cosh d(p, q) = 1 + (|z_p - z_q|^2 + (h_p - h_q)^2) / (2 h_p h_q).

Closed forms here are the authoritative computations; the golden-section
minimizers at the bottom of the module exist only as independent test oracles.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

from .config import TOLERANCES


class GeomError(Exception):
    """Base for geometric computation errors."""


class DimensionMismatch(GeomError):
    pass


class BodiesIntersect(GeomError):
    """The closures of the two bodies meet; no common perpendicular exists."""


class TangentBodies(BodiesIntersect):
    """Distance infimum 0 attained at a single common boundary point."""


class BoundaryInsideBody(GeomError):
    """Closest-point map undefined: the boundary point lies in the body's closure."""


class NotSameLeaf(GeomError):
    pass


class TrigDomainError(GeomError):
    pass


# ---------------------------------------------------------------------------
# basic types


def _as_horizontal(value, n=None):
    """Normalize a horizontal coordinate to float (n=2) or complex (n=3)."""
    if isinstance(value, (tuple, list)):
        if len(value) == 1:
            return float(value[0]), 2
        if len(value) == 2:
            return complex(float(value[0]), float(value[1])), 3
        raise DimensionMismatch(f"horizontal part must have 1 or 2 entries, got {len(value)}")
    if isinstance(value, complex):
        return value, 3
    return float(value), 2 if n is None else n


class Point:
    """A point of H^n in upper half-space coordinates."""

    __slots__ = ("z", "h", "n")

    def __init__(self, horizontal, height):
        z, n = _as_horizontal(horizontal)
        if not height > 0:
            raise GeomError(f"height must be positive, got {height}")
        self.z = z
        self.h = float(height)
        self.n = n

    @property
    def horizontal(self):
        return (self.z,) if self.n == 2 else (self.z.real, self.z.imag)

    def close_to(self, other, tol=TOLERANCES.geom):
        return self.n == other.n and abs(self.z - other.z) <= tol and abs(self.h - other.h) <= tol

    def __repr__(self):
        return f"Point({self.z!r}, {self.h!r})"


class BoundaryPoint:
    """A point of the boundary at infinity: Finite(z) or Infinity."""

    __slots__ = ("z", "n", "finite")

    def __init__(self, horizontal=None, n=2, finite=True):
        if finite:
            z, n = _as_horizontal(horizontal)
            self.z = z
        else:
            self.z = None
        self.n = n
        self.finite = finite

    @classmethod
    def infinity(cls, n=2):
        return cls(None, n=n, finite=False)

    def close_to(self, other, tol=TOLERANCES.geom):
        if self.finite != other.finite:
            return False
        if not self.finite:
            return True
        return abs(self.z - other.z) <= tol

    def __repr__(self):
        return "BoundaryPoint(inf)" if not self.finite else f"BoundaryPoint({self.z!r})"


INF2 = BoundaryPoint.infinity(2)
INF3 = BoundaryPoint.infinity(3)


def bp(z, n=2) -> BoundaryPoint:
    """Shorthand for a finite boundary point."""
    out = BoundaryPoint(z)
    if out.n == 2 and n == 3:
        return BoundaryPoint(complex(out.z, 0.0))
    return out


class Isometry:
    """Unit-determinant 2x2 matrix modulo sign, real (H^2) or complex (H^3)."""

    __slots__ = ("a", "b", "c", "d", "n")

    def __init__(self, a, b, c, d, n=None):
        entries = (a, b, c, d)
        is_complex = any(isinstance(e, complex) for e in entries) or n == 3
        if is_complex:
            a, b, c, d = (complex(e) for e in entries)
            self.n = 3
        else:
            a, b, c, d = (float(e) for e in entries)
            self.n = 2
        det = a * d - b * c
        if abs(det - 1.0) > TOLERANCES.det:
            if self.n == 2:
                if det <= 0:
                    raise GeomError(f"matrix determinant {det} not positive")
                s = math.sqrt(det)
            else:
                s = cmath.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
        self.a, self.b, self.c, self.d = self._canonical_sign(a, b, c, d)

    @staticmethod
    def _canonical_sign(a, b, c, d):
        # flip the global sign so the first entry of largest modulus is
        # positive real / lexicographically positive
        entries = (a, b, c, d)
        mags = [abs(e) for e in entries]
        lead = entries[mags.index(max(mags))]
        if isinstance(lead, complex):
            if lead.real < -1e-13 or (abs(lead.real) <= 1e-13 and lead.imag < 0):
                return -a, -b, -c, -d
        elif lead < 0:
            return -a, -b, -c, -d
        return a, b, c, d

    @classmethod
    def identity(cls, n=2):
        return cls(1, 0, 0, 1, n=n)

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def inverse(self) -> "Isometry":
        return Isometry(self.d, -self.b, -self.c, self.a, n=self.n)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        n = max(self.n, other.n)
        return Isometry(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            n=n,
        )

    def close_to(self, other, tol=TOLERANCES.geom):
        return all(abs(x - y) <= tol for x, y in zip(self.entries(), other.entries()))

    def __repr__(self):
        return f"Isometry({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"


# convex bodies ------------------------------------------------------------


@dataclass(frozen=True)
class PointBody:
    point: Point


@dataclass(frozen=True)
class Horoball:
    """center and level: Euclidean diameter of the bounding sphere for a finite
    center, height of the bounding horizontal plane for center infinity."""

    center: BoundaryPoint
    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise GeomError(f"horoball level must be positive, got {self.level}")


@dataclass(frozen=True)
class Geodesic:
    e1: BoundaryPoint
    e2: BoundaryPoint

    def __post_init__(self):
        if self.e1.close_to(self.e2):
            raise GeomError("geodesic endpoints must be distinct")


ConvexBody = Union[PointBody, Horoball, Geodesic]


class UnitTangent:
    """Base point plus a unit tangent direction (Euclidean norm equals height)."""

    __slots__ = ("base", "dz", "dh")

    def __init__(self, base: Point, direction):
        dz, dh = direction
        if base.n == 3:
            dz = complex(dz)
        else:
            dz = float(dz)
        dh = float(dh)
        norm = math.hypot(abs(dz), dh)
        if norm <= 0:
            raise GeomError("direction must be nonzero")
        if abs(norm - base.h) > TOLERANCES.unit * max(1.0, base.h):
            scale = base.h / norm
            dz, dh = dz * scale, dh * scale
        self.base = base
        self.dz = dz
        self.dh = dh

    @property
    def n(self):
        return self.base.n

    def flipped(self) -> "UnitTangent":
        """Antipodal vector (same base, opposite direction)."""
        return UnitTangent(self.base, (-self.dz, -self.dh))

    def endpoints(self):
        """Hopf endpoints (v_minus, v_plus) of the oriented geodesic."""
        return _endpoints_of(self)

    @property
    def v_minus(self) -> BoundaryPoint:
        return self.endpoints()[0]

    @property
    def v_plus(self) -> BoundaryPoint:
        return self.endpoints()[1]

    @property
    def time(self) -> float:
        """Arclength of the base from the point of the geodesic closest to the
        reference origin (0, 1) / (0, 0, 1)."""
        vm, vp = self.endpoints()
        geo = Geodesic(vm, vp)
        origin = Point(0.0 if self.n == 2 else 0j, 1.0)
        anchor = closest_point(geo, origin)
        return _arclength_on(vm, vp, self.base) - _arclength_on(vm, vp, anchor)

    def close_to(self, other, tol=TOLERANCES.geom):
        return (
            self.base.close_to(other.base, tol)
            and abs(self.dz - other.dz) <= tol * max(1.0, self.base.h)
            and abs(self.dh - other.dh) <= tol * max(1.0, self.base.h)
        )

    def __repr__(self):
        return f"UnitTangent({self.base!r}, ({self.dz!r}, {self.dh!r}))"


@dataclass(frozen=True)
class CommonPerp:
    length: float
    v_minus: UnitTangent
    v_plus: UnitTangent
    foot_minus: Point
    foot_plus: Point


@dataclass(frozen=True)
class DynNbhdSpec:
    w: UnitTangent
    eta: float
    eta_prime: float
    sign: str  # "+" or "-"

    def __post_init__(self):
        if not (self.eta > 0 and self.eta_prime > 0):
            raise GeomError("eta and eta_prime must be positive")
        if self.sign not in ("+", "-"):
            raise GeomError(f"sign must be '+' or '-', got {self.sign!r}")


# ---------------------------------------------------------------------------
# distances and the Moebius action


def hyp_dist(p: Point, q: Point) -> float:
    if p.n != q.n:
        raise DimensionMismatch(f"points live in H^{p.n} and H^{q.n}")
    arg = 1.0 + (abs(p.z - q.z) ** 2 + (p.h - q.h) ** 2) / (2.0 * p.h * q.h)
    return math.acosh(max(arg, 1.0))


def _mobius_boundary(g: Isometry, xi: BoundaryPoint) -> BoundaryPoint:
    if not xi.finite:
        if abs(g.c) < 1e-300:
            return BoundaryPoint.infinity(xi.n)
        return BoundaryPoint(g.a / g.c) if xi.n == 2 else BoundaryPoint(complex(g.a / g.c))
    den = g.c * xi.z + g.d
    if abs(den) < 1e-300:
        return BoundaryPoint.infinity(xi.n)
    val = (g.a * xi.z + g.b) / den
    return BoundaryPoint(val) if xi.n == 2 else BoundaryPoint(complex(val))


def _mobius_point(g: Isometry, p: Point) -> Point:
    cz_d = g.c * p.z + g.d
    den = abs(cz_d) ** 2 + abs(g.c) ** 2 * p.h ** 2
    if p.n == 2:
        z = ((g.a * p.z + g.b) * cz_d + g.a * g.c * p.h ** 2) / den
    else:
        z = ((g.a * p.z + g.b) * cz_d.conjugate() + g.a * complex(g.c).conjugate() * p.h ** 2) / den
    return Point(z if p.n == 3 else float(z), p.h / den)


def apply_isometry(g: Isometry, x):
    """Apply g to a Point, BoundaryPoint, UnitTangent, or ConvexBody."""
    if isinstance(x, Point):
        return _mobius_point(g, x)
    if isinstance(x, BoundaryPoint):
        return _mobius_boundary(g, x)
    if isinstance(x, UnitTangent):
        vm, vp = x.endpoints()
        base = _mobius_point(g, x.base)
        return _tangent_at(_mobius_boundary(g, vm), _mobius_boundary(g, vp), base)
    if isinstance(x, PointBody):
        return PointBody(_mobius_point(g, x.point))
    if isinstance(x, Geodesic):
        return Geodesic(_mobius_boundary(g, x.e1), _mobius_boundary(g, x.e2))
    if isinstance(x, Horoball):
        center = _mobius_boundary(g, x.center)
        if x.center.finite:
            marker = Point(x.center.z, x.level)  # apex of the bounding sphere
        else:
            marker = Point(0.0 if x.center.n == 2 else 0j, x.level)
        img = _mobius_point(g, marker)
        if not center.finite:
            return Horoball(center, img.h)
        return Horoball(center, (abs(img.z - center.z) ** 2 + img.h ** 2) / img.h)
    raise GeomError(f"cannot apply isometry to {type(x).__name__}")


# geodesics through points / boundary data ---------------------------------


def _endpoints_of(v: UnitTangent):
    """Backward and forward boundary points of the geodesic defined by v."""
    p, dz, dh = v.base, v.dz, v.dh
    if abs(dz) <= 1e-14 * p.h:
        fin = BoundaryPoint(p.z) if p.n == 2 else BoundaryPoint(complex(p.z))
        inf = BoundaryPoint.infinity(p.n)
        return (fin, inf) if dh > 0 else (inf, fin)
    u = dz / abs(dz)
    center = p.z + u * (p.h * dh / abs(dz))
    r = math.hypot(abs(p.z - center), p.h)
    em, ep = center - u * r, center + u * r
    if p.n == 2:
        return BoundaryPoint(float(em)), BoundaryPoint(float(ep))
    return BoundaryPoint(complex(em)), BoundaryPoint(complex(ep))


def _arclength_on(vm: BoundaryPoint, vp: BoundaryPoint, p: Point) -> float:
    """Arclength coordinate of p on the geodesic (vm, vp); origin at the apex
    for a circle, at height 1 above the finite endpoint for a vertical line."""
    if not vm.finite or not vp.finite:
        sign = 1.0 if not vp.finite else -1.0
        return sign * math.log(p.h)
    c = (vm.z + vp.z) / 2.0
    r = abs(vp.z - vm.z) / 2.0
    u = (vp.z - vm.z) / abs(vp.z - vm.z)
    if isinstance(u, complex):
        t = ((p.z - c) * u.conjugate()).real / r
    else:
        t = (p.z - c) * u / r
    if abs(t) > 0.99:
        # tanh saturates in float64; recover |s| from the height instead
        return math.copysign(math.acosh(max(r / p.h, 1.0)), t)
    return math.atanh(min(max(t, -1.0 + 1e-300), 1.0 - 1e-300))


def _point_at(vm: BoundaryPoint, vp: BoundaryPoint, s: float, n: int) -> Point:
    """Point at arclength s on the geodesic (vm, vp)."""
    if not vm.finite or not vp.finite:
        fin = vm if vm.finite else vp
        sign = 1.0 if not vp.finite else -1.0
        return Point(fin.z, math.exp(sign * s))
    c = (vm.z + vp.z) / 2.0
    r = abs(vp.z - vm.z) / 2.0
    u = (vp.z - vm.z) / abs(vp.z - vm.z)
    z = c + u * r * math.tanh(s)
    return Point(z if n == 3 else float(z), r / math.cosh(s))


def _tangent_at(vm: BoundaryPoint, vp: BoundaryPoint, base: Point) -> UnitTangent:
    """Unit tangent at a point of the geodesic (vm, vp), oriented toward vp."""
    if not vm.finite or not vp.finite:
        sign = 1.0 if not vp.finite else -1.0
        return UnitTangent(base, (0.0 if base.n == 2 else 0j, sign * base.h))
    c = (vm.z + vp.z) / 2.0
    r = abs(vp.z - vm.z) / 2.0
    u = (vp.z - vm.z) / abs(vp.z - vm.z)
    s = _arclength_on(vm, vp, base)
    sech = 1.0 / math.cosh(s)
    dz = u * r * sech * sech
    dh = -r * sech * math.tanh(s)
    return UnitTangent(base, (dz if base.n == 3 else float(dz), dh))


def geodesic_through(p: Point, q: Point) -> Geodesic:
    """Oriented geodesic through two distinct points (from p toward q)."""
    if p.n != q.n:
        raise DimensionMismatch("points in different dimensions")
    if abs(p.z - q.z) <= 1e-14 * max(p.h, q.h):
        fin = BoundaryPoint(p.z) if p.n == 2 else BoundaryPoint(complex(p.z))
        inf = BoundaryPoint.infinity(p.n)
        return Geodesic(fin, inf) if q.h > p.h else Geodesic(inf, fin)
    d = abs(q.z - p.z)
    u = (q.z - p.z) / d
    # 1d circle center along u: solve (0 - m)^2 + h_p^2 = (d - m)^2 + h_q^2
    m = (d * d + q.h ** 2 - p.h ** 2) / (2.0 * d)
    r = math.hypot(m, p.h)
    em = p.z + u * (m - r)
    ep = p.z + u * (m + r)
    if p.n == 2:
        return Geodesic(BoundaryPoint(float(em)), BoundaryPoint(float(ep)))
    return Geodesic(BoundaryPoint(complex(em)), BoundaryPoint(complex(ep)))


def direction_at(p: Point, q: Point) -> UnitTangent:
    """Unit tangent at p of the geodesic from p to q."""
    geo = geodesic_through(p, q)
    return _tangent_at(geo.e1, geo.e2, p)


def geodesic_flow(v: UnitTangent, t: float) -> UnitTangent:
    vm, vp = v.endpoints()
    s = _arclength_on(vm, vp, v.base)
    base = _point_at(vm, vp, s + t, v.n)
    return _tangent_at(vm, vp, base)


# ---------------------------------------------------------------------------
# Busemann cocycle and horosphere levels


def horosphere_level(xi: BoundaryPoint, p: Point) -> float:
    """Level of the horosphere through p centered at xi (Euclidean diameter for
    finite xi, height for xi = infinity)."""
    if not xi.finite:
        return p.h
    return (abs(p.z - xi.z) ** 2 + p.h ** 2) / p.h


def busemann(xi: BoundaryPoint, x: Point, y: Point) -> float:
    """Busemann cocycle beta_xi(x, y): renormalized distance difference to xi."""
    if not xi.finite:
        return math.log(y.h / x.h)
    return math.log(horosphere_level(xi, x) / horosphere_level(xi, y))


# ---------------------------------------------------------------------------
# normalizing isometries


def map_to_infinity(xi: BoundaryPoint) -> Isometry:
    """An isometry sending xi to infinity."""
    if not xi.finite:
        return Isometry.identity(xi.n)
    return Isometry(0, -1, 1, -xi.z, n=xi.n)


def map_pair_to_zero_inf(e1: BoundaryPoint, e2: BoundaryPoint) -> Isometry:
    """An isometry sending (e1, e2) to (0, infinity)."""
    n = e1.n
    if not e1.finite:
        # z -> 1/(z - e2): inf -> 0, e2 -> inf
        return Isometry(0, 1, 1, -e2.z, n=n) if n == 3 else _real_norm(0, 1, 1, -e2.z)
    if not e2.finite:
        return Isometry(1, -e1.z, 0, 1, n=n)
    if n == 3:
        return Isometry(1, -e1.z, 1, -e2.z, n=3)
    return _real_norm(1, -e1.z, 1, -e2.z)


def _real_norm(a, b, c, d) -> Isometry:
    """Real matrix scaled/flipped to positive unit determinant."""
    det = a * d - b * c
    if det < 0:
        a, b = -a, -b
        det = -det
    s = math.sqrt(det)
    return Isometry(a / s, b / s, c / s, d / s)


def normalize_horoball(hb: Horoball) -> Isometry:
    """An isometry sending hb to Horoball(infinity, 1)."""
    g = map_to_infinity(hb.center)
    img = apply_isometry(g, hb)
    s = img.level
    rt = math.sqrt(s)
    scale = Isometry(1.0 / rt, 0, 0, rt, n=hb.center.n)
    return scale @ g


def cayley_ball_to_halfspace(coords) -> Point:
    """Cayley transform of a ball-model point (|x| < 1) to the half-space model."""
    coords = tuple(float(c) for c in coords)
    if len(coords) == 2:
        w = complex(coords[0], coords[1])
        z = 1j * (1 + w) / (1 - w)
        return Point(z.real, z.imag)
    if len(coords) == 3:
        v = (coords[0], coords[1], coords[2] + 1.0)
        nv2 = v[0] ** 2 + v[1] ** 2 + v[2] ** 2
        return Point((2 * v[0] / nv2, 2 * v[1] / nv2), 2 * v[2] / nv2 - 1.0)
    raise DimensionMismatch("ball-model coordinates must have 2 or 3 entries")


def cayley_boundary_to_halfspace(coords) -> BoundaryPoint:
    """Cayley transform of a ball-model boundary point (|x| = 1)."""
    coords = tuple(float(c) for c in coords)
    if len(coords) == 2:
        w = complex(coords[0], coords[1])
        if abs(w - 1) < 1e-14:
            return INF2
        z = 1j * (1 + w) / (1 - w)
        return BoundaryPoint(z.real)
    if len(coords) == 3:
        v = (coords[0], coords[1], coords[2] + 1.0)
        nv2 = v[0] ** 2 + v[1] ** 2 + v[2] ** 2
        if nv2 < 1e-28:
            return INF3
        return BoundaryPoint((2 * v[0] / nv2, 2 * v[1] / nv2))
    raise DimensionMismatch("ball-model coordinates must have 2 or 3 entries")


# ---------------------------------------------------------------------------
# closest-point maps


def _body_dim(D: ConvexBody) -> int:
    if isinstance(D, PointBody):
        return D.point.n
    if isinstance(D, Horoball):
        return D.center.n
    return D.e1.n


def closest_point(D: ConvexBody, x) -> Point:
    """Closest point of D to a Point, or the Busemann-minimizing point of D for
    a BoundaryPoint outside the closure of D."""
    if isinstance(x, Point):
        return _closest_point_interior(D, x)
    if isinstance(x, BoundaryPoint):
        return _closest_point_boundary(D, x)
    raise GeomError(f"closest_point target must be Point or BoundaryPoint, got {type(x).__name__}")


def _closest_point_interior(D: ConvexBody, x: Point) -> Point:
    if isinstance(D, PointBody):
        return D.point
    if isinstance(D, Geodesic):
        g = map_pair_to_zero_inf(D.e1, D.e2)
        y = apply_isometry(g, x)
        foot = Point(0.0 if x.n == 2 else 0j, math.hypot(abs(y.z), y.h))
        return apply_isometry(g.inverse(), foot)
    # horoball
    g = normalize_horoball(D)
    y = apply_isometry(g, x)
    if y.h >= 1.0:
        return x  # already inside the horoball
    return apply_isometry(g.inverse(), Point(y.z, 1.0))


def _closest_point_boundary(D: ConvexBody, xi: BoundaryPoint) -> Point:
    if isinstance(D, PointBody):
        return D.point
    if isinstance(D, Geodesic):
        if xi.close_to(D.e1) or xi.close_to(D.e2):
            raise BoundaryInsideBody("boundary point is an endpoint of the geodesic")
        g = map_pair_to_zero_inf(D.e1, D.e2)
        im = _mobius_boundary(g, xi)
        if not im.finite:
            raise BoundaryInsideBody("boundary point maps to an endpoint")
        foot = Point(0.0 if xi.n == 2 else 0j, abs(im.z))
        return apply_isometry(g.inverse(), foot)
    if xi.close_to(D.center):
        raise BoundaryInsideBody("boundary point is the horoball center")
    g = normalize_horoball(D)
    im = _mobius_boundary(g, xi)
    return apply_isometry(g.inverse(), Point(im.z, 1.0))


def outward_normal(D: ConvexBody, xi: BoundaryPoint) -> UnitTangent:
    """The vector of the outer unit normal bundle of D whose forward endpoint is xi
    (the natural lift of the closest-point map)."""
    foot = _closest_point_boundary(D, xi)
    vm, vp = _foot_geodesic(D, foot, xi)
    return _tangent_at(vm, vp, foot)


def _foot_geodesic(D: ConvexBody, foot: Point, xi: BoundaryPoint):
    """Endpoints of the geodesic from inside D through foot to xi."""
    if isinstance(D, Horoball):
        return D.center, xi
    # point body or geodesic: backward endpoint is determined by foot and xi
    g = map_to_infinity(xi)
    y = apply_isometry(g, foot)
    back = apply_isometry(g.inverse(), BoundaryPoint(y.z) if foot.n == 2 else BoundaryPoint(complex(y.z)))
    return back, xi


# ---------------------------------------------------------------------------
# common perpendiculars


def _perp_from_feet(fm: Point, fp: Point) -> CommonPerp:
    length = hyp_dist(fm, fp)
    geo = geodesic_through(fm, fp)
    v_minus = _tangent_at(geo.e1, geo.e2, fm)
    v_plus = _tangent_at(geo.e1, geo.e2, fp)
    return CommonPerp(length, v_minus, v_plus, fm, fp)


def common_perpendicular(Dm: ConvexBody, Dp: ConvexBody, tol=TOLERANCES.geom) -> CommonPerp:
    """The unique common perpendicular from Dm to Dp.

    Raises TangentBodies when the closures meet in a single boundary point
    (distance infimum 0) and BodiesIntersect otherwise when they are not
    disjoint.
    """
    n = _body_dim(Dm)
    if n != _body_dim(Dp):
        raise DimensionMismatch("bodies in different dimensions")

    if isinstance(Dm, PointBody) and isinstance(Dp, PointBody):
        if Dm.point.close_to(Dp.point, tol):
            raise BodiesIntersect("coincident points")
        return _perp_from_feet(Dm.point, Dp.point)

    if isinstance(Dm, PointBody):
        return _perp_point_body(Dm.point, Dp, tol, flip=False)
    if isinstance(Dp, PointBody):
        return _reverse(_perp_point_body(Dp.point, Dm, tol, flip=True))

    if isinstance(Dm, Horoball) and isinstance(Dp, Horoball):
        return _perp_horo_horo(Dm, Dp, tol)
    if isinstance(Dm, Horoball) and isinstance(Dp, Geodesic):
        return _perp_horo_geo(Dm, Dp, tol)
    if isinstance(Dm, Geodesic) and isinstance(Dp, Horoball):
        return _reverse(_perp_horo_geo(Dp, Dm, tol))
    return _perp_geo_geo(Dm, Dp, tol)


def _reverse(perp: CommonPerp) -> CommonPerp:
    return CommonPerp(
        perp.length,
        perp.v_plus.flipped(),
        perp.v_minus.flipped(),
        perp.foot_plus,
        perp.foot_minus,
    )


def _perp_point_body(p: Point, D: ConvexBody, tol: float, flip: bool) -> CommonPerp:
    if isinstance(D, Horoball):
        g = normalize_horoball(D)
        y = apply_isometry(g, p)
        if y.h >= 1.0 - tol:
            raise (TangentBodies if abs(y.h - 1.0) <= tol else BodiesIntersect)("point inside horoball")
        foot = apply_isometry(g.inverse(), Point(y.z, 1.0))
        return _perp_from_feet(p, foot)
    g = map_pair_to_zero_inf(D.e1, D.e2)
    y = apply_isometry(g, p)
    if abs(y.z) <= tol * y.h:
        raise BodiesIntersect("point on the geodesic")
    foot = apply_isometry(g.inverse(), Point(0.0 if p.n == 2 else 0j, math.hypot(abs(y.z), y.h)))
    return _perp_from_feet(p, foot)


def _perp_horo_horo(Dm: Horoball, Dp: Horoball, tol: float) -> CommonPerp:
    if Dm.center.close_to(Dp.center, tol):
        raise BodiesIntersect("horoballs share their center")
    g = normalize_horoball(Dm)
    img = apply_isometry(g, Dp)
    # img is a finite-center ball tangent to the boundary, top at height img.level
    h = img.level
    if h >= 1.0 + tol:
        raise BodiesIntersect("horoballs overlap")
    if h >= 1.0 - tol:
        raise TangentBodies("horoballs tangent")
    ginv = g.inverse()
    fm = apply_isometry(ginv, Point(img.center.z, 1.0))
    fp = apply_isometry(ginv, Point(img.center.z, h))
    perp = _perp_from_feet(fm, fp)
    # numeric hygiene: the normalized length is exactly -log h
    return CommonPerp(-math.log(h), perp.v_minus, perp.v_plus, fm, fp)


def _perp_horo_geo(Dm: Horoball, Dp: Geodesic, tol: float) -> CommonPerp:
    if Dp.e1.close_to(Dm.center, tol) or Dp.e2.close_to(Dm.center, tol):
        raise TangentBodies("geodesic endpoint at the horoball center")
    g = normalize_horoball(Dm)
    img = apply_isometry(g, Dp)
    r = abs(img.e2.z - img.e1.z) / 2.0
    if r >= 1.0 + tol:
        raise BodiesIntersect("geodesic enters the horoball")
    if r >= 1.0 - tol:
        raise TangentBodies("geodesic tangent to the horosphere")
    apex_z = (img.e1.z + img.e2.z) / 2.0
    ginv = g.inverse()
    fm = apply_isometry(ginv, Point(apex_z, 1.0))
    fp = apply_isometry(ginv, Point(apex_z, r))
    perp = _perp_from_feet(fm, fp)
    return CommonPerp(-math.log(r), perp.v_minus, perp.v_plus, fm, fp)


def _perp_geo_geo(Dm: Geodesic, Dp: Geodesic, tol: float) -> CommonPerp:
    for e in (Dp.e1, Dp.e2):
        if e.close_to(Dm.e1, tol) or e.close_to(Dm.e2, tol):
            raise TangentBodies("geodesics share an endpoint")
    g = map_pair_to_zero_inf(Dm.e1, Dm.e2)
    a = _mobius_boundary(g, Dp.e1)
    b = _mobius_boundary(g, Dp.e2)
    if not (a.finite and b.finite):
        raise BodiesIntersect("image geodesic reaches infinity through the axis")
    az, bz = a.z, b.z
    if min(abs(az), abs(bz)) <= tol * max(abs(az), abs(bz), 1.0):
        raise BodiesIntersect("geodesics meet")
    n = Dm.e1.n
    if n == 2:
        if az * bz < 0:
            raise BodiesIntersect("geodesics cross")
        height = math.sqrt(az * bz)
        u = math.sqrt(max(abs(bz), abs(az)) / min(abs(bz), abs(az)))
        length = math.log((u + 1.0) / (u - 1.0)) if u > 1.0 else 0.0
        if length <= tol:
            raise BodiesIntersect("geodesics meet at the boundary scale")
    else:
        w = (az + bz) / (az - bz)
        eta = cmath.acosh(w)
        length = abs(eta.real)
        if length <= tol:
            raise BodiesIntersect("geodesics cross")
        height = math.sqrt(abs(az * bz))
    ginv = g.inverse()
    fm = apply_isometry(ginv, Point(0.0 if n == 2 else 0j, height))
    fp = _closest_point_interior(Dp, fm)
    perp = _perp_from_feet(fm, fp)
    return CommonPerp(length, perp.v_minus, perp.v_plus, fm, fp)


# ---------------------------------------------------------------------------
# Hamenstadt distances and dynamical neighbourhoods


def _leaf_center(v: UnitTangent, side: str) -> BoundaryPoint:
    vm, vp = v.endpoints()
    return vm if side == "su" else vp


def hamenstadt_distance(w: UnitTangent, z: UnitTangent, side: str) -> float:
    """Hamenstadt distance on the strong unstable ("su", shared v_minus) or
    strong stable ("ss", shared v_plus) leaf.

    Evaluates the renormalized limit  e^{d(w(t), z(t))/2 - t}  at T1 and T2
    (forward time for "su", backward for "ss") with a Richardson step; on the
    leaf of a vertical-vector horosphere centered at infinity the closed form
    |z_w - z_z| / height is used.
    """
    if side not in ("su", "ss"):
        raise GeomError(f"side must be 'su' or 'ss', got {side!r}")
    cw, cz = _leaf_center(w, side), _leaf_center(z, side)
    if not cw.close_to(cz, 1e-7):
        raise NotSameLeaf("leaf centers differ")
    lw = horosphere_level(cw, w.base) if cw.finite else w.base.h
    lz = horosphere_level(cw, z.base) if cw.finite else z.base.h
    if abs(math.log(lw / lz)) > 1e-7:
        raise NotSameLeaf("Busemann levels differ")
    if not cw.finite:
        return abs(w.base.z - z.base.z) / w.base.h
    sign = 1.0 if side == "su" else -1.0
    t1, t2 = TOLERANCES.limit_t1, TOLERANCES.limit_t2

    def f(T):
        d = hyp_dist(geodesic_flow(w, sign * T).base, geodesic_flow(z, sign * T).base)
        return math.exp(0.5 * d - T)

    f1, f2 = f(t1), f(t2)
    r = math.exp(-(t2 - t1))
    return (f2 - r * f1) / (1.0 - r)


def dyn_nbhd_contains(spec: DynNbhdSpec, v: UnitTangent, tol=1e-7) -> bool:
    """Membership of v in V^{sign}_{w, eta, eta'}: some flow pullback of v lies
    in the Hamenstadt ball of radius eta' on w's strong (un)stable leaf."""
    w = spec.w
    wm, wp = w.endpoints()
    vm, vp = v.endpoints()
    if spec.sign == "+":
        if not vp.close_to(wp, tol):
            return False
        s = -busemann(wp, v.base, w.base)
        if abs(s) >= spec.eta:
            return False
        return hamenstadt_distance(geodesic_flow(v, -s), w, "ss") < spec.eta_prime
    if not vm.close_to(wm, tol):
        return False
    s = busemann(wm, v.base, w.base)
    if abs(s) >= spec.eta:
        return False
    return hamenstadt_distance(geodesic_flow(v, -s), w, "su") < spec.eta_prime


def normal_fibration(D: ConvexBody, v: UnitTangent, sign: str) -> UnitTangent:
    """Project v to the outer (sign "+") or inner (sign "-") unit normal bundle
    of D along its stable/unstable leaf (the fibration over the normal bundle)."""
    if sign == "+":
        return outward_normal(D, v.v_plus)
    return outward_normal(D, v.v_minus).flipped()


# ---------------------------------------------------------------------------
# classical trigonometric identities


def triangle_tan_bound(b: float) -> float:
    """Upper bound 1/sinh(b) for tan(alpha) in a triangle whose angle opposite
    side c is at least pi/2 (b is the side joining the alpha and right-angle
    vertices)."""
    if b <= 0:
        raise TrigDomainError("side length must be positive")
    return 1.0 / math.sinh(b)


def lambert_side(b1: float, phi: float) -> float:
    """Side b2 of a Lambert-type quadrilateral: cosh b2 = sinh b1 / sqrt(sinh^2 b1 sin^2 phi - cos^2 phi)."""
    rad = math.sinh(b1) ** 2 * math.sin(phi) ** 2 - math.cos(phi) ** 2
    if rad <= 0:
        raise TrigDomainError("radicand nonpositive")
    val = math.sinh(b1) / math.sqrt(rad)
    return math.acosh(max(val, 1.0))


def parallelism_angle(d: float) -> float:
    """Angle theta with cot(theta) = sinh(d) (angle of parallelism)."""
    if d <= 0:
        raise TrigDomainError("distance must be positive")
    return math.atan(1.0 / math.sinh(d))


def trig(kind: str, *args) -> float:
    if kind == "triangle_tan_bound":
        return triangle_tan_bound(*args)
    if kind == "lambert_side":
        return lambert_side(*args)
    if kind == "parallelism":
        return parallelism_angle(*args)
    raise GeomError(f"unknown trig kind {kind!r}")


def angle_between(u: UnitTangent, v: UnitTangent) -> float:
    """Angle at a common base point (the model is conformal)."""
    if not u.base.close_to(v.base, 1e-7):
        raise GeomError("vectors must share their base point")
    if u.n == 2:
        dot = u.dz * v.dz + u.dh * v.dh
    else:
        dot = (u.dz * v.dz.conjugate()).real + u.dh * v.dh
    c = dot / (u.base.h * v.base.h)
    return math.acos(min(1.0, max(-1.0, c)))


# ---------------------------------------------------------------------------
# numeric oracles (test-only fallbacks; closed forms above are authoritative)


def _golden_min(f, lo, hi, floor=TOLERANCES.step_floor):
    """Golden-section minimum of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > floor:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def _boundary_param(D: ConvexBody, n: int):
    """Parametrization of the body (its boundary for horoballs) by 0-2 reals."""
    if isinstance(D, PointBody):
        return 0, lambda u: D.point
    if isinstance(D, Geodesic):
        return 1, lambda u: _point_at(D.e1, D.e2, u[0], n)
    g = normalize_horoball(D)
    ginv = g.inverse()
    if n == 2:
        return 1, lambda u: apply_isometry(ginv, Point(u[0], 1.0))
    return 2, lambda u: apply_isometry(ginv, Point(complex(u[0], u[1]), 1.0))


def numeric_perp_length(Dm: ConvexBody, Dp: ConvexBody, span=12.0, sweeps=60):
    """Distance between two bodies by coordinate descent with golden-section
    line searches (independent oracle for the closed forms)."""
    n = _body_dim(Dm)
    km, pm = _boundary_param(Dm, n)
    kp, pp = _boundary_param(Dp, n)
    k = km + kp

    def val(u):
        return hyp_dist(pm(u[:km]), pp(u[km:]))

    if k == 0:
        return val(())
    u = [0.0] * k
    # coarse scan for a starting point
    if k <= 2:
        grid = [i * span / 12.0 - span / 2.0 for i in range(13)]
        best = None
        import itertools

        for cand in itertools.product(grid, repeat=k):
            fv = val(cand)
            if best is None or fv < best[1]:
                best = (list(cand), fv)
        u = best[0]
    prev = val(u)
    for _ in range(sweeps):
        for i in range(k):
            def fi(x, i=i):
                uu = list(u)
                uu[i] = x
                return val(uu)

            u[i], _ = _golden_min(fi, u[i] - span, u[i] + span)
        cur = val(u)
        if prev - cur < TOLERANCES.step_floor:
            break
        prev = cur
    return val(u)


def numeric_busemann(xi: BoundaryPoint, x: Point, y: Point, t1=30.0, t2=35.0) -> float:
    """Busemann cocycle via its limit definition, extrapolated from two times."""
    origin = Point(0.0 if x.n == 2 else 0j, 1.0)
    if not xi.finite:
        ray = lambda t: Point(origin.z, math.exp(t))
    else:
        vm, vp = _foot_geodesic_ray(origin, xi)
        s0 = _arclength_on(vm, vp, origin)
        ray = lambda t: _point_at(vm, vp, s0 + t, x.n)

    def g(t):
        r = ray(t)
        return hyp_dist(r, x) - hyp_dist(r, y)

    g1, g2 = g(t1), g(t2)
    r = math.exp(-(t2 - t1))
    return (g2 - r * g1) / (1.0 - r)


def _foot_geodesic_ray(p: Point, xi: BoundaryPoint):
    """Endpoints of the geodesic through p with forward endpoint xi."""
    g = map_to_infinity(xi)
    y = apply_isometry(g, p)
    back = apply_isometry(g.inverse(), BoundaryPoint(y.z) if p.n == 2 else BoundaryPoint(complex(y.z)))
    return back, xi
