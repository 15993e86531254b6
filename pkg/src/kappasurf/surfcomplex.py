"""The kappa-polyhedron data structure: faces, gluings, cone vertices.

A SurfaceComplex is a finite collection of geodesic polygon faces, each
carrying its own curvature, plus edge gluings.  Faces are immutable after
construction; surgery (see surgery.py) returns new complexes.

Conventions
-----------
* Edge i of a face runs from boundary corner i to corner (i+1) % n.
* Face boundaries must be ccw in their chart (interior on the left of
  every directed edge); validate() checks this via the signed area.
* A Gluing identifies edge_a of face_a with edge_b of face_b by arc
  length: with reversed=False the start corner of edge_a meets the start
  corner of edge_b, with reversed=True it meets the end corner.
* Edges on kappa > 0 faces whose endpoints are antipodal (or nearly so)
  carry a witness point selecting the intended arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError, InfeasibleParameters
from .model import ModelPoint, geom, KAPPA_ZERO_TOL

GLUE_TOL = 1e-9
ANGLE_SUM_TOL = 1e-9
VERTEX_TOL = 1e-9


class Edge:
    """Geometric data of one directed face edge (embedded coordinates)."""

    __slots__ = ("geom", "S", "E", "W", "length", "tan_start", "plane")

    def __init__(self, g, S, E, W=None):
        self.geom = g
        self.S = S
        self.E = E
        self.W = W
        if W is not None:
            v1, d1 = g.log(S, W)
            _, d2 = g.log(W, E)
            self.length = d1 + d2
            self.tan_start = v1
        else:
            self.tan_start, self.length = g.log(S, E)
        self.plane = g.geodesic(S, self.tan_start)

    def point_at(self, t):
        return self.geom.exp(self.S, self.tan_start, t)

    def tangent_at(self, t):
        g = self.geom
        if g.sign == 0:
            return self.tan_start
        th = t / g.R
        S, v = self.S, self.tan_start
        if g.sign > 0:
            c, s = math.cos(th), math.sin(th)
            return (-s * S[0] + c * v[0], -s * S[1] + c * v[1], -s * S[2] + c * v[2])
        c, s = math.cosh(th), math.sinh(th)
        return (s * S[0] + c * v[0], s * S[1] + c * v[1], s * S[2] + c * v[2])

    def param_of(self, x):
        """Arc-length parameter of a point lying on the edge's geodesic."""
        g = self.geom
        if g.sign == 0:
            return (x[0] - self.S[0]) * self.tan_start[0] + (x[1] - self.S[1]) * self.tan_start[1]
        if g.sign > 0:
            t = math.atan2(g.dot_t(x, self.tan_start),
                           x[0] * self.S[0] + x[1] * self.S[1] + x[2] * self.S[2]) * g.R
            if t < -1e-9:
                t += 2.0 * math.pi * g.R
            return t
        return math.asinh(g.dot_t(x, self.tan_start)) * g.R


class Face:
    """A geodesic polygon of M_kappa with cached embedded geometry."""

    def __init__(self, fid, kappa, boundary, edge_witness=None):
        self.id = fid
        self.kappa = float(kappa)
        self.boundary = tuple(boundary)
        self.edge_witness = dict(edge_witness) if edge_witness else {}
        for p in self.boundary:
            if p.kappa != self.kappa:
                raise ValidationError(f"face {fid}: corner curvature differs from face curvature")
        self.n = len(self.boundary)
        if self.n < 2:
            raise ValidationError(f"face {fid}: needs at least 2 corners")
        g = geom(self.kappa)
        self.geom = g
        self.corners = [g.from_chart(p.coords) for p in self.boundary]
        self.edges = []
        for i in range(self.n):
            S = self.corners[i]
            E = self.corners[(i + 1) % self.n]
            w = self.edge_witness.get(i)
            W = g.from_chart(w.coords) if w is not None else None
            self.edges.append(Edge(g, S, E, W))
        self._angles = None

    def interior_angle(self, i):
        """Interior angle at corner i, in (0, 2*pi) for a ccw face."""
        if self._angles is None:
            self._angles = [None] * self.n
        if self._angles[i] is None:
            g = self.geom
            e_in = self.edges[(i - 1) % self.n]
            arrive = e_in.tangent_at(e_in.length)
            depart = self.edges[i].tan_start
            arrive = g.normalize_t(self.corners[i], arrive)
            depart = g.normalize_t(self.corners[i], depart)
            lv = g.left(self.corners[i], arrive)
            turn = math.atan2(g.dot_t(depart, lv), g.dot_t(depart, arrive))
            self._angles[i] = math.pi - turn
        return self._angles[i]

    def angle_sum(self):
        return sum(self.interior_angle(i) for i in range(self.n))

    def area(self):
        """Geodesic polygon area: angle excess for kappa != 0, shoelace else."""
        if abs(self.kappa) >= KAPPA_ZERO_TOL:
            return (self.angle_sum() - (self.n - 2) * math.pi) / self.kappa
        a = 0.0
        for i in range(self.n):
            x0, y0 = self.corners[i]
            x1, y1 = self.corners[(i + 1) % self.n]
            a += x0 * y1 - x1 * y0
        return 0.5 * a

    def contains(self, x, tol=1e-12):
        """Convex in-face test: nonnegative side w.r.t. every edge plane."""
        g = self.geom
        return all(g.side(e.plane, x) >= -tol for e in self.edges)

    def with_id(self, fid):
        return Face(fid, self.kappa, self.boundary, self.edge_witness)


def face_from_embedded(fid, kappa, corners, witnesses=None):
    """Build a Face from embedded-coordinate corners (and edge witnesses)."""
    g = geom(kappa)
    bnd = [ModelPoint(kappa, g.to_chart(x)) for x in corners]
    wit = {i: ModelPoint(kappa, g.to_chart(w)) for i, w in (witnesses or {}).items()}
    return Face(fid, kappa, bnd, wit)


@dataclass(frozen=True)
class Gluing:
    face_a: str
    edge_a: int
    face_b: str
    edge_b: int
    reversed: bool = False
    id: str = ""


@dataclass
class ValidationReport:
    ok: bool
    closed: bool
    length_mismatches: list = field(default_factory=list)
    alexandrov_violations: list = field(default_factory=list)
    orientation_violations: list = field(default_factory=list)
    vertex_angles: dict = field(default_factory=dict)
    boundary_cycles: int = 0
    messages: list = field(default_factory=list)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        root = x
        while self.parent.setdefault(root, root) != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


class SurfaceComplex:
    """Immutable kappa-polyhedron with derived combinatorial data."""

    def __init__(self, faces, gluings, marked_curves=None):
        self.faces = {f.id: f for f in faces}
        if len(self.faces) != len(faces):
            raise ValidationError("duplicate face ids")
        glist = []
        for i, g in enumerate(gluings):
            if not g.id:
                g = Gluing(g.face_a, g.edge_a, g.face_b, g.edge_b, g.reversed, f"g{i}")
            glist.append(g)
        self.gluings = tuple(glist)
        self.marked_curves = dict(marked_curves) if marked_curves else {}
        self._derive()

    # -- derived structure ---------------------------------------------------

    def _derive(self):
        self.edge_gluing = {}
        for g in self.gluings:
            for fid, e in ((g.face_a, g.edge_a), (g.face_b, g.edge_b)):
                if fid not in self.faces:
                    raise ValidationError(f"gluing {g.id}: unknown face {fid}")
                if not 0 <= e < self.faces[fid].n:
                    raise ValidationError(f"gluing {g.id}: edge index out of range")
                key = (fid, e)
                if key in self.edge_gluing:
                    raise ValidationError(f"edge {key} appears in more than one gluing")
                self.edge_gluing[key] = g

        uf = _UnionFind()
        for g in self.gluings:
            fa, fb = self.faces[g.face_a], self.faces[g.face_b]
            sa, ea = g.edge_a, (g.edge_a + 1) % fa.n
            sb, eb = g.edge_b, (g.edge_b + 1) % fb.n
            if g.reversed:
                sb, eb = eb, sb
            uf.union((g.face_a, sa), (g.face_b, sb))
            uf.union((g.face_a, ea), (g.face_b, eb))

        orbits = {}
        for fid, f in self.faces.items():
            for c in range(f.n):
                orbits.setdefault(uf.find((fid, c)), []).append((fid, c))
        self.vertex_orbits = [tuple(sorted(v)) for v in orbits.values()]
        self.vertex_orbits.sort()
        self._orbit_of = {}
        for i, orb in enumerate(self.vertex_orbits):
            for key in orb:
                self._orbit_of[key] = i

        self.boundary_edges = [
            (fid, e) for fid, f in self.faces.items() for e in range(f.n)
            if (fid, e) not in self.edge_gluing
        ]
        bset = set(self.boundary_edges)
        self._boundary_vertex = [False] * len(self.vertex_orbits)
        for fid, e in self.boundary_edges:
            f = self.faces[fid]
            for c in (e, (e + 1) % f.n):
                self._boundary_vertex[self._orbit_of[(fid, c)]] = True

        total_edges = sum(f.n for f in self.faces.values())
        self.V = len(self.vertex_orbits)
        self.E = total_edges - len(self.gluings)
        self.F = len(self.faces)
        self.chi = self.V - self.E + self.F
        self._theta = None
        self._bcycles = None
        self._orientable = None
        self._bset = bset

    def vertex_theta(self, i):
        if self._theta is None:
            self._theta = [
                sum(self.faces[fid].interior_angle(c) for fid, c in orb)
                for orb in self.vertex_orbits
            ]
        return self._theta[i]

    def orbit_index(self, fid, corner):
        return self._orbit_of[(fid, corner)]

    def is_boundary_vertex(self, i):
        return self._boundary_vertex[i]

    @property
    def closed(self):
        return not self.boundary_edges

    # -- boundary walking -----------------------------------------------------

    def _rotate_to_boundary(self, fid, corner, via_edge):
        """Walk around corner (fid, corner) away from via_edge to the boundary.

        Returns (fid2, edge2, forward) where forward says the boundary edge
        starts at the rotated image of the corner.
        """
        seen = 0
        while True:
            f = self.faces[fid]
            other = corner if via_edge == (corner - 1) % f.n else (corner - 1) % f.n
            if (fid, other) not in self.edge_gluing:
                return fid, other, other == corner
            g = self.edge_gluing[(fid, other)]
            if (g.face_a, g.edge_a) == (fid, other):
                fid2, e2 = g.face_b, g.edge_b
            else:
                fid2, e2 = g.face_a, g.edge_a
            f2 = self.faces[fid2]
            at_start = corner == other
            if g.reversed:
                at_start = not at_start
            corner = e2 if at_start else (e2 + 1) % f2.n
            fid, via_edge = fid2, e2
            seen += 1
            if seen > 4 * len(self.edge_gluing) + 4:
                raise ValidationError("corner rotation did not terminate")

    def boundary_cycles(self):
        """Boundary as cycles of (face, edge, forward) directed edge-sides."""
        if self._bcycles is not None:
            return self._bcycles
        remaining = set(self._bset)
        cycles = []
        while remaining:
            fid, e = min(remaining)
            cycle = []
            cur = (fid, e, True)
            while True:
                cfid, ce, fwd = cur
                remaining.discard((cfid, ce))
                cycle.append(cur)
                f = self.faces[cfid]
                far = (ce + 1) % f.n if fwd else ce
                via = ce
                nfid, ne, nfwd = self._rotate_to_boundary(cfid, far, via)
                cur = (nfid, ne, nfwd)
                if cur == cycle[0]:
                    break
                if len(cycle) > len(self._bset) + 1:
                    raise ValidationError("boundary walk did not close")
            cycles.append(cycle)
        self._bcycles = cycles
        return cycles

    # -- reports --------------------------------------------------------------

    def validate(self) -> ValidationReport:
        rep = ValidationReport(ok=True, closed=self.closed)
        for g in self.gluings:
            la = self.faces[g.face_a].edges[g.edge_a].length
            lb = self.faces[g.face_b].edges[g.edge_b].length
            if abs(la - lb) > GLUE_TOL:
                rep.length_mismatches.append((g.id, la, lb))
                rep.ok = False
        for fid, f in self.faces.items():
            for i in range(f.n):
                a = f.interior_angle(i)
                if not 0.0 < a < 2.0 * math.pi:
                    rep.orientation_violations.append((fid, i, a))
                    rep.ok = False
            if f.area() <= 0.0:
                rep.orientation_violations.append((fid, "area", f.area()))
                rep.ok = False
        for i in range(self.V):
            th = self.vertex_theta(i)
            rep.vertex_angles[i] = th
            if not self.is_boundary_vertex(i) and th > 2.0 * math.pi + ANGLE_SUM_TOL:
                rep.alexandrov_violations.append((self.vertex_orbits[i], th))
                rep.ok = False
        try:
            rep.boundary_cycles = len(self.boundary_cycles())
        except ValidationError as exc:
            rep.messages.append(str(exc))
            rep.ok = False
        return rep

    def require_valid(self):
        rep = self.validate()
        if not rep.ok:
            raise ValidationError(
                f"invalid complex: mismatches={rep.length_mismatches} "
                f"alexandrov={rep.alexandrov_violations} "
                f"orientation={rep.orientation_violations} msgs={rep.messages}")
        return self


# ---------------------------------------------------------------------------
# module-level operations (spec surface)


def validate(c: SurfaceComplex) -> ValidationReport:
    return c.validate()


def cone_data(c: SurfaceComplex, v: int):
    """(theta, omega) at interior vertex orbit v."""
    if c.is_boundary_vertex(v):
        raise ValidationError("cone_data: vertex lies on the boundary")
    th = c.vertex_theta(v)
    return th, 2.0 * math.pi - th


def boundary_angle(c: SurfaceComplex, v: int) -> float:
    """Total incident angle at a boundary vertex orbit."""
    if not c.is_boundary_vertex(v):
        raise ValidationError("boundary_angle: vertex is interior")
    return c.vertex_theta(v)


def is_boundary_corner_angle(value: float) -> bool:
    """A boundary point 'is an angle' iff its angle differs from pi by > 1e-9."""
    return abs(value - math.pi) > 1e-9


def gauss_bonnet_audit(c: SurfaceComplex):
    """(total curvature, 2*pi*chi, residual) for a closed complex."""
    if not c.closed:
        raise ValidationError("gauss_bonnet_audit: boundary present")
    total = 0.0
    for f in c.faces.values():
        total += f.kappa * f.area()
    for i in range(c.V):
        total += 2.0 * math.pi - c.vertex_theta(i)
    target = 2.0 * math.pi * c.chi
    return total, target, abs(total - target)


def euler_and_orientability(c: SurfaceComplex):
    """(chi, orientable) via orientation propagation across gluings."""
    sign = {}
    for start in c.faces:
        if start in sign:
            continue
        sign[start] = 1
        stack = [start]
        while stack:
            fid = stack.pop()
            for g in c.gluings:
                if g.face_a == fid or g.face_b == fid:
                    a, b = g.face_a, g.face_b
                    # ccw faces glued start-to-end (reversed=True) keep orientation
                    rel = 1 if g.reversed else -1
                    for x, y in ((a, b), (b, a)):
                        if x == fid:
                            want = sign[fid] * rel
                            if y in sign:
                                if sign[y] != want:
                                    return c.chi, False
                            else:
                                sign[y] = want
                                stack.append(y)
    # self-gluings of one face
    for g in c.gluings:
        if g.face_a == g.face_b and not g.reversed:
            return c.chi, False
    return c.chi, True


def scale_metric(c: SurfaceComplex, rho: float) -> SurfaceComplex:
    """Divide all distances by rho; curvature becomes kappa * rho**2.

    Chart coordinates of curved faces are scale-free, so only the
    curvature tag changes there; flat faces rescale their coordinates.
    Angles are preserved exactly.
    """
    if rho <= 0:
        raise InfeasibleParameters("scale factor must be positive")
    faces = []
    for f in c.faces.values():
        k2 = f.kappa * rho * rho
        if abs(f.kappa) < KAPPA_ZERO_TOL:
            bnd = [ModelPoint(0.0, (p.coords[0] / rho, p.coords[1] / rho))
                   for p in f.boundary]
            wit = {i: ModelPoint(0.0, (w.coords[0] / rho, w.coords[1] / rho))
                   for i, w in f.edge_witness.items()}
        else:
            bnd = [ModelPoint(k2, p.coords) for p in f.boundary]
            wit = {i: ModelPoint(k2, w.coords) for i, w in f.edge_witness.items()}
        faces.append(Face(f.id, k2, bnd, wit))

    def move(p):
        if p is None:
            return None
        if abs(p.kappa) < KAPPA_ZERO_TOL:
            return ModelPoint(0.0, (p.coords[0] / rho, p.coords[1] / rho))
        return ModelPoint(p.kappa * rho * rho, p.coords)

    from .curves import CurveSegment, SurfaceCurve
    marked = {}
    for name, cur in c.marked_curves.items():
        segs = [CurveSegment(s.face, move(s.entry), move(s.exit), move(s.mid))
                for s in cur.segments]
        marked[name] = SurfaceCurve(segs, cur.closed, cur.crossing_word,
                                    cur.halt_reason, cur.simple, dict(cur.meta))
    return SurfaceComplex(faces, c.gluings, marked)


# ---------------------------------------------------------------------------
# crossing transport (used by the tracing engine)


def transport_across(c: SurfaceComplex, fid: str, e: int, x, direction):
    """Carry a point on edge e of face fid plus travel direction across the gluing.

    x and direction are embedded coordinates; returns
    (fid2, x2, dir2, gluing, sign) with sign +1 when crossing from the
    gluing's face_a side.
    """
    g = c.edge_gluing.get((fid, e))
    if g is None:
        raise ValidationError(f"edge ({fid},{e}) is not glued")
    if (g.face_a, g.edge_a) == (fid, e):
        fid2, e2, sgn = g.face_b, g.edge_b, +1
    else:
        fid2, e2, sgn = g.face_a, g.edge_a, -1
    fA = c.faces[fid]
    fB = c.faces[fid2]
    eA = fA.edges[e]
    eB = fB.edges[e2]
    gm = fA.geom
    t = eA.param_of(x)
    t2 = eB.length - t if g.reversed else t
    tauA = gm.normalize_t(x, eA.tangent_at(t))
    nuA = gm.left(x, tauA)
    a = gm.dot_t(direction, tauA)
    b = gm.dot_t(direction, nuA)
    x2 = eB.point_at(t2)
    gmB = fB.geom
    tauB_own = gmB.normalize_t(x2, eB.tangent_at(t2))
    nuB = gmB.left(x2, tauB_own)
    tauB = tuple(-u for u in tauB_own) if g.reversed else tauB_own
    dir2 = tuple(a * u - b * w for u, w in zip(tauB, nuB))
    dir2 = gmB.normalize_t(x2, dir2)
    return fid2, x2, dir2, g, sgn
