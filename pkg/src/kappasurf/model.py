"""Exact geometry of the simply connected constant-curvature surface M_kappa.

Public API works with ModelPoint / TangentDirection in chart coordinates:
a planar pair inside the unit disc for kappa < 0 (Poincare chart, metric
rescaled so the curvature is kappa), a planar pair for kappa = 0, and a
unit 3-vector for kappa > 0.

Internally everything is done on an embedded quadric where geodesics are
plane sections: the unit sphere with the Euclidean form for kappa > 0 and
the hyperboloid x^2 + y^2 - t^2 = -1 with the Minkowski form for
kappa < 0.  This gives closed-form geodesic/geodesic intersections for
all curvatures, which the tracing engine relies on.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import ChartError, InfeasibleParameters

KAPPA_ZERO_TOL = 1e-12   # |kappa| below this is routed to flat formulas
ANGLE_GUARD = 1e-9       # tolerated inverse-trig excursion past +-1


def _clamp1(x, guard=ANGLE_GUARD):
    """Clamp an inverse-trig argument into [-1, 1] with a guard band."""
    if x > 1.0:
        if x > 1.0 + guard:
            raise ChartError(f"inverse-trig argument {x!r} exceeds 1 beyond guard band")
        return 1.0
    if x < -1.0:
        if x < -1.0 - guard:
            raise ChartError(f"inverse-trig argument {x!r} below -1 beyond guard band")
        return -1.0
    return x


def _clamp_acosh(x, guard=ANGLE_GUARD):
    if x < 1.0:
        if x < 1.0 - guard:
            raise ChartError(f"acosh argument {x!r} below 1 beyond guard band")
        return 1.0
    return x


# ---------------------------------------------------------------------------
# chart-level types


@dataclass(frozen=True)
class ModelPoint:
    """A point of M_kappa in its chart."""

    kappa: float
    coords: tuple

    def __post_init__(self):
        k = self.kappa
        c = self.coords
        if k > KAPPA_ZERO_TOL:
            if len(c) != 3:
                raise ChartError("kappa > 0 points are unit 3-vectors")
            n = math.sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2])
            if abs(n - 1.0) > 1e-12:
                raise ChartError(f"kappa > 0 point has norm {n!r}, expected 1")
        else:
            if len(c) != 2:
                raise ChartError("kappa <= 0 points are planar pairs")
            if k < -KAPPA_ZERO_TOL and c[0] * c[0] + c[1] * c[1] >= 1.0:
                raise ChartError("kappa < 0 point outside the open unit disc")


@dataclass(frozen=True)
class TangentDirection:
    """A unit tangent vector at a chart point."""

    base: ModelPoint
    dir: tuple

    def __post_init__(self):
        d = self.dir
        k = self.base.kappa
        if k > KAPPA_ZERO_TOL:
            if len(d) != 3:
                raise ChartError("kappa > 0 tangents are 3-vectors")
            n = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
            b = self.base.coords
            dot = b[0] * d[0] + b[1] * d[1] + b[2] * d[2]
            if abs(dot) > 1e-12:
                raise ChartError("kappa > 0 tangent not orthogonal to base")
        else:
            if len(d) != 2:
                raise ChartError("kappa <= 0 tangents are planar pairs")
            n = math.sqrt(d[0] * d[0] + d[1] * d[1])
        if abs(n - 1.0) > 1e-12:
            raise ChartError(f"tangent has norm {n!r}, expected 1")


@dataclass(frozen=True)
class TriangleSolution:
    """A fully solved geodesic triangle in M_kappa (angle X opposite side x)."""

    kappa: float
    a: float
    b: float
    c: float
    A: float
    B: float
    C: float


# ---------------------------------------------------------------------------
# embedded geometries
#
# Points and tangents are plain float tuples: 2-tuples for the flat plane,
# 3-tuples on the sphere/hyperboloid.  Geodesics are represented by the
# (Minkowski-)normal vector of the plane cutting them out; for the plane a
# geodesic is (nx, ny, offset).


class FlatGeom:
    kappa = 0.0
    sign = 0

    def dist(self, p, q):
        return math.hypot(q[0] - p[0], q[1] - p[1])

    def exp(self, p, v, s):
        return (p[0] + s * v[0], p[1] + s * v[1])

    def log(self, p, q):
        dx, dy = q[0] - p[0], q[1] - p[1]
        d = math.hypot(dx, dy)
        if d == 0.0:
            raise ChartError("log of coincident points")
        return (dx / d, dy / d), d

    def dot_t(self, u, v):
        return u[0] * v[0] + u[1] * v[1]

    def left(self, p, v):
        return (-v[1], v[0])

    def rotate(self, p, v, ang):
        c, s = math.cos(ang), math.sin(ang)
        return (c * v[0] - s * v[1], s * v[0] + c * v[1])

    def normalize_t(self, p, v):
        n = math.hypot(v[0], v[1])
        return (v[0] / n, v[1] / n)

    def geodesic(self, p, v):
        # line through p with direction v: left-normal + offset
        n = (-v[1], v[0])
        return (n[0], n[1], n[0] * p[0] + n[1] * p[1])

    def side(self, g, x):
        return g[0] * x[0] + g[1] * x[1] - g[2]

    def geodesic_through(self, p, q):
        v, _ = self.log(p, q)
        return self.geodesic(p, v)

    def intersections(self, g1, g2):
        det = g1[0] * g2[1] - g1[1] * g2[0]
        if abs(det) < 1e-15:
            return []
        x = (g1[2] * g2[1] - g1[1] * g2[2]) / det
        y = (g1[0] * g2[2] - g1[2] * g2[0]) / det
        return [(x, y)]

    def to_chart(self, p):
        return p

    def from_chart(self, c):
        return tuple(map(float, c))

    def tangent_to_chart(self, p, v):
        return self.normalize_t(p, v)

    def tangent_from_chart(self, p, w):
        return self.normalize_t(p, w)


class SphereGeom:
    sign = 1

    def __init__(self, kappa):
        self.kappa = kappa
        self.R = 1.0 / math.sqrt(kappa)

    def dist(self, p, q):
        d = _clamp1(p[0] * q[0] + p[1] * q[1] + p[2] * q[2], guard=1e-6)
        return self.R * math.acos(d)

    def exp(self, p, v, s):
        th = s / self.R
        c, sn = math.cos(th), math.sin(th)
        return (c * p[0] + sn * v[0], c * p[1] + sn * v[1], c * p[2] + sn * v[2])

    def log(self, p, q):
        cd = _clamp1(p[0] * q[0] + p[1] * q[1] + p[2] * q[2], guard=1e-6)
        th = math.acos(cd)
        sn = math.sin(th)
        if sn < 1e-14:
            if cd > 0:
                raise ChartError("log of coincident points")
            raise ChartError("log of antipodal points is undefined")
        v = ((q[0] - cd * p[0]) / sn, (q[1] - cd * p[1]) / sn, (q[2] - cd * p[2]) / sn)
        return self.normalize_t(p, v), self.R * th

    def dot_t(self, u, v):
        return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]

    def left(self, p, v):
        return (p[1] * v[2] - p[2] * v[1], p[2] * v[0] - p[0] * v[2], p[0] * v[1] - p[1] * v[0])

    def rotate(self, p, v, ang):
        w = self.left(p, v)
        c, s = math.cos(ang), math.sin(ang)
        return (c * v[0] + s * w[0], c * v[1] + s * w[1], c * v[2] + s * w[2])

    def normalize_t(self, p, v):
        # project out the base component, then scale to unit
        d = p[0] * v[0] + p[1] * v[1] + p[2] * v[2]
        u = (v[0] - d * p[0], v[1] - d * p[1], v[2] - d * p[2])
        n = math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
        return (u[0] / n, u[1] / n, u[2] / n)

    def normalize_p(self, p):
        n = math.sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
        return (p[0] / n, p[1] / n, p[2] / n)

    def geodesic(self, p, v):
        return self.normalize_p(self.left(p, v))

    def side(self, g, x):
        return g[0] * x[0] + g[1] * x[1] + g[2] * x[2]

    def geodesic_through(self, p, q):
        v, _ = self.log(p, q)
        return self.geodesic(p, v)

    def intersections(self, g1, g2):
        x = (g1[1] * g2[2] - g1[2] * g2[1], g1[2] * g2[0] - g1[0] * g2[2],
             g1[0] * g2[1] - g1[1] * g2[0])
        n = math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
        if n < 1e-14:
            return []
        x = (x[0] / n, x[1] / n, x[2] / n)
        return [x, (-x[0], -x[1], -x[2])]

    def to_chart(self, p):
        return self.normalize_p(p)

    def from_chart(self, c):
        return self.normalize_p(tuple(map(float, c)))

    def tangent_to_chart(self, p, v):
        return self.normalize_t(p, v)

    def tangent_from_chart(self, p, w):
        return self.normalize_t(p, tuple(map(float, w)))


class HypGeom:
    """Hyperboloid model with the Minkowski form <a,b> = a1 b1 + a2 b2 - a3 b3."""

    sign = -1

    def __init__(self, kappa):
        self.kappa = kappa
        self.R = 1.0 / math.sqrt(-kappa)

    @staticmethod
    def mdot(a, b):
        return a[0] * b[0] + a[1] * b[1] - a[2] * b[2]

    def dist(self, p, q):
        c = _clamp_acosh(-self.mdot(p, q), guard=1e-6)
        return self.R * math.acosh(c)

    def exp(self, p, v, s):
        th = s / self.R
        c, sn = math.cosh(th), math.sinh(th)
        return self._np((c * p[0] + sn * v[0], c * p[1] + sn * v[1], c * p[2] + sn * v[2]))

    def log(self, p, q):
        c = _clamp_acosh(-self.mdot(p, q), guard=1e-6)
        th = math.acosh(c)
        sn = math.sinh(th)
        if sn < 1e-14:
            raise ChartError("log of coincident points")
        v = ((q[0] - c * p[0]) / sn, (q[1] - c * p[1]) / sn, (q[2] - c * p[2]) / sn)
        return self.normalize_t(p, v), self.R * th

    def dot_t(self, u, v):
        return self.mdot(u, v)

    def left(self, p, v):
        # Minkowski cross product J(p x v); spacelike unit when p point, v unit tangent
        x = (p[1] * v[2] - p[2] * v[1], p[2] * v[0] - p[0] * v[2], p[0] * v[1] - p[1] * v[0])
        return (x[0], x[1], -x[2])

    def rotate(self, p, v, ang):
        w = self.left(p, v)
        c, s = math.cos(ang), math.sin(ang)
        return (c * v[0] + s * w[0], c * v[1] + s * w[1], c * v[2] + s * w[2])

    def normalize_t(self, p, v):
        d = self.mdot(p, v)
        u = (v[0] + d * p[0], v[1] + d * p[1], v[2] + d * p[2])  # <p,p> = -1
        n = math.sqrt(max(self.mdot(u, u), 1e-300))
        return (u[0] / n, u[1] / n, u[2] / n)

    def _np(self, p):
        n = math.sqrt(max(-self.mdot(p, p), 1e-300))
        p = (p[0] / n, p[1] / n, p[2] / n)
        if p[2] < 0:
            p = (-p[0], -p[1], -p[2])
        return p

    def geodesic(self, p, v):
        n = self.left(p, v)
        m = math.sqrt(max(self.mdot(n, n), 1e-300))
        return (n[0] / m, n[1] / m, n[2] / m)

    def side(self, g, x):
        return self.mdot(g, x)

    def geodesic_through(self, p, q):
        v, _ = self.log(p, q)
        return self.geodesic(p, v)

    def intersections(self, g1, g2):
        x = (g1[1] * g2[2] - g1[2] * g2[1], g1[2] * g2[0] - g1[0] * g2[2],
             g1[0] * g2[1] - g1[1] * g2[0])
        x = (x[0], x[1], -x[2])
        q = self.mdot(x, x)
        if q >= -1e-14:
            return []  # ultraparallel / tangent: no intersection on the hyperboloid
        return [self._np(x)]

    def to_chart(self, p):
        return (p[0] / (1.0 + p[2]), p[1] / (1.0 + p[2]))

    def from_chart(self, c):
        x, y = float(c[0]), float(c[1])
        r2 = x * x + y * y
        if r2 >= 1.0:
            raise ChartError("point outside the open unit disc")
        s = 1.0 - r2
        return (2.0 * x / s, 2.0 * y / s, (1.0 + r2) / s)

    def tangent_to_chart(self, p, v):
        t = 1.0 + p[2]
        w = ((v[0] * t - p[0] * v[2]) / (t * t), (v[1] * t - p[1] * v[2]) / (t * t))
        n = math.hypot(w[0], w[1])
        return (w[0] / n, w[1] / n)

    def tangent_from_chart(self, c_or_p, w):
        # accepts the chart point; chart tangents are conformal so only
        # the analytic Jacobian of the chart->hyperboloid map is needed
        if len(c_or_p) == 3:
            c = self.to_chart(c_or_p)
        else:
            c = c_or_p
        x, y = float(c[0]), float(c[1])
        wx, wy = float(w[0]), float(w[1])
        r2 = x * x + y * y
        s = 1.0 - r2
        k = x * wx + y * wy
        v = ((2.0 * s * wx + 4.0 * k * x) / (s * s),
             (2.0 * s * wy + 4.0 * k * y) / (s * s),
             4.0 * k / (s * s))
        p = self.from_chart(c)
        return self.normalize_t(p, v)


_GEOM_CACHE = {}


def geom(kappa):
    """Embedded-geometry helper for curvature kappa (cached)."""
    key = float(kappa)
    g = _GEOM_CACHE.get(key)
    if g is None:
        if abs(key) < KAPPA_ZERO_TOL:
            g = FlatGeom()
        elif key > 0:
            g = SphereGeom(key)
        else:
            g = HypGeom(key)
        _GEOM_CACHE[key] = g
    return g


def embed(p: ModelPoint):
    return geom(p.kappa).from_chart(p.coords)


def unembed(kappa, e) -> ModelPoint:
    return ModelPoint(kappa, tuple(geom(kappa).to_chart(e)))


# ---------------------------------------------------------------------------
# chart-level operations


def mdistance(kappa: float, p: ModelPoint, q: ModelPoint) -> float:
    """Intrinsic distance between two chart points of M_kappa."""
    if p.kappa != kappa or q.kappa != kappa:
        raise ChartError("points do not share the requested curvature")
    g = geom(kappa)
    return g.dist(g.from_chart(p.coords), g.from_chart(q.coords))


def poincare_p(u, v):
    """The quantity p(u, v) of the Poincare-disc distance formula."""
    du = 1.0 - (u[0] * u[0] + u[1] * u[1])
    dv = 1.0 - (v[0] * v[0] + v[1] * v[1])
    w = (u[0] - v[0], u[1] - v[1])
    return 2.0 * (w[0] * w[0] + w[1] * w[1]) / (du * dv)


def poincare_distance_arccosh(u, v) -> float:
    """arccosh(1 + p(u,v)) for the unit-curvature Poincare disc."""
    return math.acosh(1.0 + poincare_p(u, v))


def poincare_radial_log_form(r1: float, r2: float) -> float:
    """Distance between (r1, 0) and (r2, 0) via the log closed form."""
    return abs(math.log((1.0 + r2) / (1.0 - r2)) - math.log((1.0 + r1) / (1.0 - r1)))


def mexp(kappa: float, t: TangentDirection, s: float) -> ModelPoint:
    """Geodesic step of length s >= 0 from t.base in direction t.dir."""
    if s < 0:
        raise InfeasibleParameters("negative geodesic step")
    if kappa > KAPPA_ZERO_TOL and s >= 2.0 * math.pi / math.sqrt(kappa):
        raise InfeasibleParameters("step beyond one full great circle")
    g = geom(kappa)
    p = g.from_chart(t.base.coords)
    v = g.tangent_from_chart(t.base.coords, t.dir)
    return unembed(kappa, g.exp(p, v, s))


def mlog(kappa: float, p: ModelPoint, q: ModelPoint):
    """Initial direction (TangentDirection) and distance of the geodesic p -> q."""
    g = geom(kappa)
    pe, qe = g.from_chart(p.coords), g.from_chart(q.coords)
    v, d = g.log(pe, qe)
    return TangentDirection(p, tuple(g.tangent_to_chart(pe, v))), d


def mangle(kappa: float, apex: ModelPoint, p: ModelPoint, q: ModelPoint) -> float:
    """Angle in [0, pi] at apex between the geodesics apex->p and apex->q."""
    g = geom(kappa)
    a = g.from_chart(apex.coords)
    v1, _ = g.log(a, g.from_chart(p.coords))
    v2, _ = g.log(a, g.from_chart(q.coords))
    return math.acos(_clamp1(g.dot_t(v1, v2)))


# ---------------------------------------------------------------------------
# triangle solving

_SIDE_TOL = 1e-12


def _check_sides(kappa, a, b, c):
    for s in (a, b, c):
        if s <= _SIDE_TOL:
            raise InfeasibleParameters("degenerate zero side")
    if kappa > KAPPA_ZERO_TOL:
        lim = math.pi / math.sqrt(kappa)
        for s in (a, b, c):
            if s > lim + 1e-12:
                raise InfeasibleParameters("side exceeds pi/sqrt(kappa)")
        if a + b + c > 2.0 * lim + 1e-12:
            raise InfeasibleParameters("perimeter exceeds the spherical bound")
        slack = 1e-12
    else:
        slack = 0.0
    if a > b + c + slack or b > a + c + slack or c > a + b + slack:
        raise InfeasibleParameters("triangle inequality fails")


def _angle_from_sides(kappa, a, b, c):
    """Angle opposite side a, from the law of cosines of M_kappa."""
    if abs(kappa) < KAPPA_ZERO_TOL:
        return math.acos(_clamp1((b * b + c * c - a * a) / (2.0 * b * c)))
    if kappa > 0:
        k = math.sqrt(kappa)
        sb, sc = math.sin(k * b), math.sin(k * c)
        if sb * sc < 1e-15:
            raise InfeasibleParameters("spherical side of length 0 or pi/sqrt(kappa)")
        return math.acos(_clamp1((math.cos(k * a) - math.cos(k * b) * math.cos(k * c)) / (sb * sc)))
    k = math.sqrt(-kappa)
    sb, sc = math.sinh(k * b), math.sinh(k * c)
    return math.acos(_clamp1((math.cosh(k * b) * math.cosh(k * c) - math.cosh(k * a)) / (sb * sc)))


def _side_from_sas(kappa, b, c, A):
    """Side opposite angle A given adjacent sides b, c."""
    if abs(kappa) < KAPPA_ZERO_TOL:
        return math.sqrt(max(b * b + c * c - 2.0 * b * c * math.cos(A), 0.0))
    if kappa > 0:
        k = math.sqrt(kappa)
        ca = _clamp1(math.cos(k * b) * math.cos(k * c)
                     + math.sin(k * b) * math.sin(k * c) * math.cos(A))
        return math.acos(ca) / k
    k = math.sqrt(-kappa)
    ch = math.cosh(k * b) * math.cosh(k * c) - math.sinh(k * b) * math.sinh(k * c) * math.cos(A)
    return math.acosh(_clamp_acosh(ch)) / k


def solve_sss(kappa, a, b, c) -> TriangleSolution:
    _check_sides(kappa, a, b, c)
    A = _angle_from_sides(kappa, a, b, c)
    B = _angle_from_sides(kappa, b, c, a)
    C = _angle_from_sides(kappa, c, a, b)
    return TriangleSolution(kappa, a, b, c, A, B, C)


def solve_sas(kappa, b, A, c) -> TriangleSolution:
    """Sides b, c enclosing angle A (opposite the unknown side a)."""
    if b <= _SIDE_TOL or c <= _SIDE_TOL:
        raise InfeasibleParameters("degenerate zero side")
    if not 0.0 < A < math.pi:
        raise InfeasibleParameters("SAS angle out of (0, pi)")
    a = _side_from_sas(kappa, b, c, A)
    return solve_sss(kappa, a, b, c)


def solve_asa(kappa, A, c, B) -> TriangleSolution:
    """Angles A, B at the two ends of the included side c."""
    for ang in (A, B):
        if not 0.0 < ang < math.pi:
            raise InfeasibleParameters("ASA angle out of (0, pi)")
    if abs(kappa) < KAPPA_ZERO_TOL:
        C = math.pi - A - B
        if C <= 0.0:
            raise InfeasibleParameters("flat ASA angles sum to >= pi")
        s = c / math.sin(C)
        return solve_sss(kappa, s * math.sin(A), s * math.sin(B), c)
    if kappa > 0:
        k = math.sqrt(kappa)
        C = math.acos(_clamp1(-math.cos(A) * math.cos(B)
                              + math.sin(A) * math.sin(B) * math.cos(k * c)))
        den = math.sin(B) * math.sin(C)
        a = math.acos(_clamp1((math.cos(A) + math.cos(B) * math.cos(C)) / den)) / k
        den = math.sin(A) * math.sin(C)
        b = math.acos(_clamp1((math.cos(B) + math.cos(A) * math.cos(C)) / den)) / k
        return solve_sss(kappa, a, b, c)
    k = math.sqrt(-kappa)
    C = math.acos(_clamp1(-math.cos(A) * math.cos(B)
                          + math.sin(A) * math.sin(B) * math.cosh(k * c)))
    if C <= 0.0 or A + B + C >= math.pi:
        raise InfeasibleParameters("hyperbolic ASA angles infeasible")
    den = math.sin(B) * math.sin(C)
    a = math.acosh(_clamp_acosh((math.cos(A) + math.cos(B) * math.cos(C)) / den)) / k
    den = math.sin(A) * math.sin(C)
    b = math.acosh(_clamp_acosh((math.cos(B) + math.cos(A) * math.cos(C)) / den)) / k
    return solve_sss(kappa, a, b, c)


def solve_triangle(kappa, *, sss=None, sas=None, asa=None) -> TriangleSolution:
    """Solve a geodesic triangle of M_kappa from one sufficient datum.

    sss = (a, b, c); sas = (b, A, c) with A between b and c;
    asa = (A, c, B) with c between A and B.
    """
    given = [x for x in (sss, sas, asa) if x is not None]
    if len(given) != 1:
        raise InfeasibleParameters("exactly one of sss/sas/asa must be given")
    if sss is not None:
        return solve_sss(kappa, *sss)
    if sas is not None:
        return solve_sas(kappa, *sas)
    return solve_asa(kappa, *asa)


def comparison_angle(kappa: float, a: float, b: float, c: float) -> float:
    """Angle opposite side a of the comparison triangle in M_kappa."""
    _check_sides(kappa, a, b, c)
    return _angle_from_sides(kappa, a, b, c)


# ---------------------------------------------------------------------------
# acceptance helper


def radial_pair_agreement(n=10000, seed=0):
    """Max discrepancy |arccosh form - log form| over n random radial pairs."""
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(n):
        r1 = rng.uniform(0.0, 0.999)
        r2 = rng.uniform(0.0, 0.999)
        d1 = poincare_distance_arccosh((r1, 0.0), (r2, 0.0))
        d2 = poincare_radial_log_form(r1, r2)
        worst = max(worst, abs(d1 - d2))
    return worst
