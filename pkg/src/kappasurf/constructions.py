"""Parametric surface builders.

All builders return validated complexes; closed geodesics that exist by
construction (souls, equators, horizontals) are attached as marked
curves so the tracing engine can re-verify them independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .errors import InfeasibleParameters, ValidationError
from .model import ModelPoint, geom, KAPPA_ZERO_TOL
from .surfcomplex import (Face, Gluing, SurfaceComplex, face_from_embedded,
                          euler_and_orientability)
from .curves import SurfaceCurve, CurveSegment

PARAM_TOL = 1e-12


@dataclass(frozen=True)
class ConstructionParams:
    kappa: float = 0.0
    lam: float = 1.0
    eps: float = 0.1
    copies: int = 1          # m or p where applicable
    alpha: float = 0.0

    def __post_init__(self):
        if self.lam <= 0 or self.eps <= 0:
            raise InfeasibleParameters("lambda and epsilon must be positive")
        if self.kappa > 0 and self.lam >= math.pi / math.sqrt(self.kappa):
            raise InfeasibleParameters("soul length must be below pi/sqrt(kappa)")
        if not 0.0 <= self.alpha < 2.0 * math.pi:
            raise InfeasibleParameters("alpha out of [0, 2*pi)")


@dataclass
class QuadBlock:
    """Centrally symmetric geodesic quadrilateral with a marked midline.

    The soul joins the midpoints of the two sides named in soul_sides;
    those sides have length eps and meet the soul orthogonally.  side
    edge indices: bottom 0, right 1, top 2, left 3.
    """
    kappa: float
    lam: float
    eps: float
    mode: str
    face: Face
    soul_sides: tuple
    free_sides: tuple
    achieved: dict = field(default_factory=dict)

    SIDE_EDGE = {"bottom": 0, "right": 1, "top": 2, "left": 3}

    def midpoint(self, side):
        e = self.face.edges[self.SIDE_EDGE[side]]
        return e.point_at(0.5 * e.length)

    def side_length(self, side):
        return self.face.edges[self.SIDE_EDGE[side]].length

    def central_symmetry(self, x):
        g = self.face.geom
        v, d = g.log(self._center, x)
        return g.exp(self._center, tuple(-u for u in v), d)

    def soul_curve(self, face_id=None):
        fid = face_id or self.face.id
        k = self.kappa
        g = self.face.geom
        a = self.midpoint(self.soul_sides[0])
        b = self.midpoint(self.soul_sides[1])
        return SurfaceCurve(
            [CurveSegment(fid, ModelPoint(k, g.to_chart(a)), ModelPoint(k, g.to_chart(b)))],
            closed=True)


def _origin_and_axis(g):
    if g.sign == 0:
        return (0.0, 0.0), (1.0, 0.0)
    return (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)


def build_quad(kappa: float, lam: float, eps: float, mode: str = "orthogonal") -> QuadBlock:
    """Symmetric quadrilateral block with midline length lam, end sides eps.

    mode "orthogonal": the eps sides are erected orthogonally at the
    soul endpoints (left/right); exact by construction.  mode "corner"
    (kappa <= 0): corners at (+-a, +-b) in the chart, solved by nested
    bisection so the glued (bottom/top) sides have length eps and their
    midpoints are lam apart.
    """
    ConstructionParams(kappa, lam, eps)
    g = geom(kappa)
    if mode == "orthogonal":
        O, u = _origin_and_axis(g)
        nu = tuple(-c for c in u)
        A = g.exp(O, nu, lam / 2)
        B = g.exp(O, u, lam / 2)
        from .surfcomplex import Edge
        soul = Edge(g, A, B)
        vB = g.normalize_t(B, soul.tangent_at(soul.length))
        vA = g.normalize_t(A, soul.tan_start)
        nA = g.left(A, vA)
        nB = g.left(B, vB)
        co = [g.exp(A, tuple(-c for c in nA), eps / 2),
              g.exp(B, tuple(-c for c in nB), eps / 2),
              g.exp(B, nB, eps / 2),
              g.exp(A, nA, eps / 2)]
        face = face_from_embedded("Q", kappa, co)
        block = QuadBlock(kappa, lam, eps, mode, face,
                          soul_sides=("left", "right"), free_sides=("bottom", "top"))
        block._center = O
    elif mode == "corner":
        if kappa > KAPPA_ZERO_TOL:
            raise InfeasibleParameters("corner mode supports kappa <= 0 only")
        if abs(kappa) < KAPPA_ZERO_TOL:
            a, b = eps / 2, lam / 2
        else:
            def side_len(a, b):
                return g.dist(g.from_chart((-a, -b)), g.from_chart((a, -b)))

            def bottom_mid(a, b):
                S = g.from_chart((-a, -b))
                E = g.from_chart((a, -b))
                v, d = g.log(S, E)
                return g.exp(S, v, d / 2)

            def mid_gap(a, b):
                m0 = bottom_mid(a, b)
                # top midpoint by symmetry: reflect across the x-axis
                x, y = g.to_chart(m0)
                return g.dist(m0, g.from_chart((x, -y)))

            def a_of(b):
                lo = min(1e-9, math.sqrt(1 - b * b) * 1e-6)
                hi = lo
                while side_len(hi, b) < eps:
                    hi = min(hi * 2.0, math.sqrt(1 - b * b) * (1 - 1e-12))
                    if hi >= math.sqrt(1 - b * b) * (1 - 2e-12):
                        break
                return brentq(lambda a: side_len(a, b) - eps, lo, hi, xtol=PARAM_TOL)

            def outer(b):
                return mid_gap(a_of(b), b) - lam

            blo = 1e-6
            bhi = blo
            while outer(bhi) < 0.0:
                bhi = 0.5 * bhi + 0.5    # walk toward the chart boundary
                if bhi > 1.0 - 1e-12:
                    raise InfeasibleParameters("corner-mode solve out of range")
            b = brentq(outer, blo, bhi, xtol=PARAM_TOL)
            a = a_of(b)
        face = face_from_embedded("Q", kappa,
                                  [g.from_chart((-a, -b)), g.from_chart((a, -b)),
                                   g.from_chart((a, b)), g.from_chart((-a, b))])
        block = QuadBlock(kappa, lam, eps, mode, face,
                          soul_sides=("bottom", "top"), free_sides=("left", "right"))
        block._center = _origin_and_axis(g)[0]
    else:
        raise InfeasibleParameters(f"unknown quad mode {mode!r}")

    ms = [block.midpoint(s) for s in block.soul_sides]
    block.achieved = {
        "soul_length": g.dist(ms[0], ms[1]),
        "eps_sides": tuple(block.side_length(s) for s in block.soul_sides),
        "free_sides": tuple(block.side_length(s) for s in block.free_sides),
        "symmetry_residual": max(
            g.dist(block.central_symmetry(face.corners[i]), face.corners[(i + 2) % 4])
            for i in range(4)),
    }
    if abs(block.achieved["soul_length"] - lam) > 1e-10:
        raise InfeasibleParameters("quad solver missed the midline length target")
    face._angles = None
    rep_face_ok = all(0 < face.interior_angle(i) < 2 * math.pi for i in range(4))
    if not rep_face_ok or face.area() <= 0:
        raise InfeasibleParameters("quad degenerated for these parameters")
    return block


def build_cylinder_C(lam: float, eps: float, kappa: float = -1.0):
    """Hyperbolic cylinder: corner-mode quad with bottom glued onto top.

    Returns the complex (annulus) with its soul marked; the two free
    sides close into the boundary circles.
    """
    if kappa >= 0:
        raise InfeasibleParameters("the cylinder block requires kappa < 0")
    block = build_quad(kappa, lam, eps, mode="corner")
    soul = block.soul_curve("Q")
    c = SurfaceComplex([block.face],
                       [Gluing("Q", 0, "Q", 2, True, "seam")],
                       marked_curves={"soul": soul})
    c.require_valid()
    return c, block


def build_mobius_M(kappa: float, lam: float, eps: float):
    """Moebius band: orthogonal quad with left glued onto right by the
    central symmetry."""
    block = build_quad(kappa, lam, eps, mode="orthogonal")
    soul = block.soul_curve("Q")
    c = SurfaceComplex([block.face],
                       [Gluing("Q", 3, "Q", 1, False, "seam")],
                       marked_curves={"soul": soul})
    c.require_valid()
    return c, block


def build_digon_surface_S(alpha: float) -> SurfaceComplex:
    """Closed kappa=1 surface from a digon of angle 2*pi - alpha with its
    two sides glued; two cone points of singular curvature alpha."""
    if not 0.0 <= alpha < 2.0 * math.pi:
        raise InfeasibleParameters("alpha out of [0, 2*pi)")
    N, S = (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)
    if alpha == 0.0:
        # round sphere from two hemispheres (a 2*pi digon is degenerate)
        E, W = (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)
        d0 = face_from_embedded("d0", 1.0, [N, S], {0: E, 1: W})
        d1 = face_from_embedded("d1", 1.0, [N, S], {0: W, 1: E})
        mp = lambda x: ModelPoint(1.0, x)
        equator = SurfaceCurve(
            [CurveSegment("d0", mp(E), mp(W), mp((0.0, 1.0, 0.0))),
             CurveSegment("d1", mp(W), mp(E), mp((0.0, -1.0, 0.0)))],
            closed=True)
        c = SurfaceComplex([d0, d1],
                           [Gluing("d0", 0, "d1", 1, True, "m0"),
                            Gluing("d0", 1, "d1", 0, True, "m1")],
                           marked_curves={"equator": equator})
        c.require_valid()
        return c
    th = 2.0 * math.pi - alpha
    w0 = (1.0, 0.0, 0.0)
    w1 = (math.cos(th), math.sin(th), 0.0)
    dig = face_from_embedded("d", 1.0, [N, S], {0: w0, 1: w1})
    half = th / 2.0
    wm = ModelPoint(1.0, (math.cos(half), math.sin(half), 0.0))
    equator = SurfaceCurve(
        [CurveSegment("d", ModelPoint(1.0, w0), ModelPoint(1.0, w1), wm)],
        closed=True)
    c = SurfaceComplex([dig], [Gluing("d", 0, "d", 1, True, "seam")],
                       marked_curves={"equator": equator})
    c.require_valid()
    return c


def build_flat_space(kind: str, a: float, b: float, shear: float = 0.0) -> SurfaceComplex:
    """Flat torus or Klein bottle on an a x b fundamental parallelogram."""
    if a <= 0 or b <= 0:
        raise InfeasibleParameters("side lengths must be positive")
    if kind == "torus":
        co = [(0.0, 0.0), (a, 0.0), (a + shear, b), (shear, b)]
        gl = [Gluing("q", 0, "q", 2, True, "h"), Gluing("q", 1, "q", 3, True, "v")]
    elif kind == "klein":
        if shear:
            raise InfeasibleParameters("klein bottles carry no shear")
        co = [(0.0, 0.0), (a, 0.0), (a, b), (0.0, b)]
        gl = [Gluing("q", 0, "q", 2, True, "h"), Gluing("q", 1, "q", 3, False, "v")]
    else:
        raise InfeasibleParameters(f"unknown flat space kind {kind!r}")
    face = Face("q", 0.0, [ModelPoint(0.0, p) for p in co])
    y = b / 2.0
    horiz = SurfaceCurve(
        [CurveSegment("q", ModelPoint(0.0, (shear * 0.5, y)),
                      ModelPoint(0.0, (a + shear * 0.5, y)))],
        closed=True)
    c = SurfaceComplex([face], gl, marked_curves={"horizontal": horiz})
    c.require_valid()
    return c


def _embedded_face(fid, kappa, corners, witnesses=None):
    return face_from_embedded(fid, kappa, corners, witnesses)


def build_sphere_octants() -> SurfaceComplex:
    """Unit sphere as eight right spherical triangles (the octants).

    Every vertex orbit closes up to angle 2*pi; the complex is a smooth
    round sphere presented with redundant combinatorics, handy for
    audits and as surgery stock.
    """
    axes = {1: (1.0, 0.0, 0.0), 2: (0.0, 1.0, 0.0), 3: (0.0, 0.0, 1.0)}
    faces = []
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                co = [tuple(sx * u for u in axes[1]),
                      tuple(sy * u for u in axes[2]),
                      tuple(sz * u for u in axes[3])]
                if sx * sy * sz < 0:
                    co = [co[0], co[2], co[1]]
                tag = "".join("p" if s > 0 else "n" for s in (sx, sy, sz))
                faces.append(_embedded_face(f"o{tag}", 1.0, co))
    # weld coincident quarter arcs
    g = geom(1.0)
    sides = []
    for f in faces:
        for e in range(3):
            edge = f.edges[e]
            S = g.to_chart(edge.point_at(0.0))
            E = g.to_chart(edge.point_at(edge.length))
            sides.append((f.id, e, tuple(round(x, 9) for x in S),
                          tuple(round(x, 9) for x in E)))
    gl, used = [], set()
    for i in range(len(sides)):
        if i in used:
            continue
        fa, ea, Sa, Ea = sides[i]
        for j in range(i + 1, len(sides)):
            if j in used:
                continue
            fb, eb, Sb, Eb = sides[j]
            if {Sa, Ea} == {Sb, Eb}:
                gl.append(Gluing(fa, ea, fb, eb, Sa != Sb, f"arc{len(gl)}"))
                used.update((i, j))
                break
    # mark one great circle in general position: it crosses face
    # interiors transversally (the coordinate circles run along edges
    # and would be useless to the tracing and surgery machinery)
    nrm = (0.2, 0.3, 1.0)
    s = math.sqrt(sum(u * u for u in nrm))
    nrm = tuple(u / s for u in nrm)
    e1 = (nrm[2], 0.0, -nrm[0])
    s = math.sqrt(sum(u * u for u in e1))
    e1 = tuple(u / s for u in e1)
    e2 = (nrm[1] * e1[2] - nrm[2] * e1[1],
          nrm[2] * e1[0] - nrm[0] * e1[2],
          nrm[0] * e1[1] - nrm[1] * e1[0])
    circ = lambda t: tuple(math.cos(t) * a + math.sin(t) * b
                           for a, b in zip(e1, e2))
    cuts = sorted((math.atan2(-e1[i], e2[i]) + k * math.pi) % (2.0 * math.pi)
                  for i in range(3) for k in (0, 1))
    mp = lambda x: ModelPoint(1.0, x)
    spans = []
    for i in range(len(cuts)):
        t0 = cuts[i]
        t1 = cuts[(i + 1) % len(cuts)]
        if t1 <= t0:
            t1 += 2.0 * math.pi
        spans.append((t0, t1))
    # start the loop mid-face so closure compares states in one chart
    tm = 0.5 * (spans[0][0] + spans[0][1])
    fid0 = "o" + "".join("p" if u > 0 else "n" for u in circ(tm))
    segs = [CurveSegment(fid0, mp(circ(tm)), mp(circ(spans[0][1])))]
    for t0, t1 in spans[1:]:
        w = circ(0.5 * (t0 + t1))
        tag = "".join("p" if u > 0 else "n" for u in w)
        segs.append(CurveSegment(f"o{tag}", mp(circ(t0)), mp(circ(t1)), mp(w)))
    segs.append(CurveSegment(fid0, mp(circ(spans[0][0] + 2.0 * math.pi)),
                             mp(circ(tm + 2.0 * math.pi))))
    equator = SurfaceCurve(segs, closed=True)
    c = SurfaceComplex(faces, gl, marked_curves={"equator": equator})
    c.require_valid()
    return c


def build_sphere_lunes(n: int = 4) -> SurfaceComplex:
    """Unit sphere as n meridian lunes, with the equator marked.

    The marked equator crosses every lune transversally through its
    interior, which makes it available to cut/perturb surgeries that
    cannot run along edges.
    """
    if n < 3:
        raise InfeasibleParameters("need at least 3 lunes for short chords")
    N, S = (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)

    def eq(phi):
        return (math.cos(phi), math.sin(phi), 0.0)

    faces, gl, segs = [], [], []
    for k in range(n):
        p0 = 2.0 * math.pi * k / n
        p1 = 2.0 * math.pi * (k + 1) / n
        faces.append(_embedded_face(f"L{k}", 1.0, [N, S], {0: eq(p0), 1: eq(p1)}))
        gl.append(Gluing(f"L{k}", 1, f"L{(k + 1) % n}", 0, True, f"mer{k}"))
        mp = lambda x: ModelPoint(1.0, x)
        segs.append(CurveSegment(f"L{k}", mp(eq(p0)), mp(eq(p1)),
                                 mp(eq(0.5 * (p0 + p1)))))
    equator = SurfaceCurve(segs, closed=True)
    c = SurfaceComplex(faces, gl, marked_curves={"equator": equator})
    c.require_valid()
    return c


def build_projective_sphere(theta: float = math.pi) -> SurfaceComplex:
    """Closed non-orientable kappa=1 surface from one lune of angle theta.

    The lune's two meridian sides are identified start-to-start, which
    quotients the lune like antipodal gluing does a hemisphere.  The
    single vertex orbit has angle 2*theta: theta = pi gives the smooth
    constant-curvature projective plane, smaller theta leaves one cone
    point of curvature 2*(pi - theta).
    """
    if not 0.0 < theta <= math.pi:
        raise InfeasibleParameters("theta must lie in (0, pi]")
    N, S = (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)
    w0 = (1.0, 0.0, 0.0)
    w1 = (math.cos(theta), math.sin(theta), 0.0)
    dig = _embedded_face("d", 1.0, [N, S], {0: w0, 1: w1})
    c = SurfaceComplex([dig], [Gluing("d", 0, "d", 1, False, "seam")])
    c.require_valid()
    return c


def build_crosscap_strip(kappa: float, m: int, lam: float, eps: float,
                         alpha: float = None):
    """Flat Moebius-like strip carrying m parallel marked geodesics.

    m unit cells (lam x eps cylinders) are stacked; the innermost circle
    is closed onto itself with a half-period shift (the crosscap), and
    the outermost is capped by a collar of four pentagons whose two slit
    cones tilt the boundary.  Each cell's midline closes through that
    cell's seam into a geodesic of length lam; the cells give the m
    curves distinct crossing words, so they survive word-based
    deduplication even though each sits in a flat one-parameter family.

    The boundary consists of two arcs of equal length meeting at exactly
    two angles of measure pi + alpha.  Returns (complex, info).
    """
    if abs(kappa) > KAPPA_ZERO_TOL:
        raise InfeasibleParameters("only the flat (kappa = 0) strip is built")
    if m < 1 or lam <= 0 or eps <= 0:
        raise InfeasibleParameters("need m >= 1 and positive lam, eps")
    if alpha is None:
        alpha = min(eps, 0.5)
    if not 0.0 < alpha < math.pi:
        raise InfeasibleParameters("alpha out of (0, pi)")
    q = lam / 4.0
    a2 = alpha / 2.0
    h1, L2 = eps, eps
    L3 = q - L2 * math.sin(a2)
    if L3 <= 0.05 * q:
        raise InfeasibleParameters("collar slit eats the boundary arc; shrink eps")

    def flat(fid, pts):
        return Face(fid, 0.0, [ModelPoint(0.0, p) for p in pts])

    faces, gl, marked = [], [], {}
    for k in range(1, m + 1):
        bottom = [(0.0, 0.0), (lam / 2.0, 0.0), (lam, 0.0)] if k == 1 else \
                 [(0.0, 0.0), (lam, 0.0)]
        top = [(lam, eps), (3 * q, eps), (2 * q, eps), (q, eps), (0.0, eps)] \
            if k == m else [(lam, eps), (0.0, eps)]
        pts = bottom + top
        fid = f"cell{k}"
        faces.append(flat(fid, pts))
        right = len(bottom) - 1           # edge from (lam,0) up to (lam,eps)
        left = len(pts) - 1
        gl.append(Gluing(fid, left, fid, right, True, f"seam{k}"))
        if k == 1:
            gl.append(Gluing(fid, 0, fid, 1, False, "core"))
        if k < m:
            gl.append(Gluing(fid, right + 1, f"cell{k + 1}", 0, True, f"weld{k}"))
        else:
            tb = right + 1                # top quarters, decreasing x
            gl.extend([Gluing(fid, tb + 3, "colA", 0, True, "rim0"),
                       Gluing(fid, tb + 2, "colAr", 0, True, "rim1"),
                       Gluing(fid, tb + 1, "colB", 0, True, "rim2"),
                       Gluing(fid, tb + 0, "colBr", 0, True, "rim3")])
        y = eps / 2.0
        marked[f"soul{k}"] = SurfaceCurve(
            [CurveSegment(fid, ModelPoint(0.0, (0.0, y)), ModelPoint(0.0, (lam, y)))],
            closed=True)

    # collar: two halves, each a pair of quads meeting along a slit whose
    # cone vertex sits on the rim circle itself.  Anchoring the cones on
    # the rim leaves no flat sub-cylinder above them, so the collar
    # carries no closed geodesic of its own (a closed geodesic here
    # would bound an annulus whose only turning is the two boundary
    # angles, contradicting Gauss-Bonnet).
    H = L2 * math.cos(a2)
    quad_l = [(0.0, 0.0), (q, 0.0),
              (q - L2 * math.sin(a2), H), (0.0, H)]
    quad_r = [(q, 0.0), (2 * q, 0.0), (2 * q, H),
              (q + L2 * math.sin(a2), H)]
    for half in ("A", "B"):
        faces.append(flat(f"col{half}", quad_l))
        faces.append(flat(f"col{half}r", quad_r))
        gl.append(Gluing(f"col{half}", 1, f"col{half}r", 3, True, f"cone{half}"))
    gl.append(Gluing("colB", 3, "colAr", 1, True, "junc0"))
    gl.append(Gluing("colA", 3, "colBr", 1, True, "junc1"))

    c = SurfaceComplex(faces, gl, marked_curves=marked)
    c.require_valid()
    info = {"alpha": alpha, "soul_length": lam, "core_length": lam / 2.0,
            "boundary_arc": 2.0 * L3, "boundary_angle": math.pi + alpha,
            "cells": m}
    return c, info


def boundary_circle_length(kappa: float, lam: float, eps: float) -> float:
    """Length of each boundary circle of the cylinder C(lam, eps)."""
    block = build_quad(kappa, lam, eps, mode="corner")
    return block.side_length("right")


def build_closed_hyperbolic(lam: float = 1.0, eps: float = 0.3,
                            kappa: float = -1.0) -> SurfaceComplex:
    """Closed non-orientable hyperbolic test complex (chi = 0).

    Two cylinder blocks share their boundary circles, Klein-bottle
    style; the soul of the first block is marked as "soul".
    """
    bq = build_quad(kappa, lam, eps, mode="corner")
    br = build_quad(kappa, lam, eps, mode="corner")
    g = bq.face.geom
    wrap = lambda xs: [ModelPoint(kappa, g.to_chart(x)) for x in xs]
    fq = Face("Q", kappa, wrap(bq.face.corners))
    fr = Face("R", kappa, wrap(br.face.corners))
    soul = bq.soul_curve("Q")
    c = SurfaceComplex(
        [fq, fr],
        [Gluing("Q", 0, "Q", 2, True, "seamQ"),
         Gluing("R", 0, "R", 2, True, "seamR"),
         Gluing("Q", 1, "R", 1, False, "w1"),
         Gluing("Q", 3, "R", 3, False, "w2")],
        marked_curves={"soul": soul})
    c.require_valid()
    return c


def graft_cylinders(c: SurfaceComplex, G, p: int, eps: float):
    """Cut a closed hyperbolic complex along the geodesic G and insert a
    chain of p cylinders whose boundary circles match the cut length.

    The cylinder width lam* solves boundary_circle_length(lam*, eps) =
    cut circle length.  A one-sided G leaves a single circle of length
    2*len(G); the chain then ends in a cylinder whose far circle is
    closed onto itself with a half-period shift.  Returns (complex,
    report); the p souls are marked "graft0" .. "graft{p-1}".
    """
    from .surgery import cut_along, glue_boundary
    if isinstance(G, str):
        G = c.marked_curves[G]
    if p < 1:
        raise InfeasibleParameters("need p >= 1 cylinders")
    ks = {f.kappa for f in c.faces.values()}
    if len(ks) != 1 or min(ks) >= 0:
        raise InfeasibleParameters("grafting requires a uniformly hyperbolic complex")
    if not c.closed:
        raise InfeasibleParameters("grafting requires a closed complex")
    kappa = ks.pop()
    ell = G.length
    cut = cut_along(c, G)
    cycles = cut.boundary_cycles()
    if len(cycles) not in (1, 2):
        raise InfeasibleParameters("cut did not produce 1 or 2 boundary circles")
    two_sided = len(cycles) == 2
    target = ell if two_sided else 2.0 * ell

    def resid(l):
        return boundary_circle_length(kappa, l, eps) - target

    hi = target          # circles are longer than the soul, so resid(target) > 0
    lo = target
    while True:
        lo *= 0.5
        try:
            r = resid(lo)
        except (InfeasibleParameters, ValueError):
            raise InfeasibleParameters(
                "eps too large: cylinder circles exceed the cut length")
        if r < 0:
            break
        hi = lo
        if lo < 1e-8 * target:
            raise InfeasibleParameters(
                "eps too large: cylinder circles exceed the cut length")
    lam_star = brentq(resid, lo, hi, xtol=1e-13)
    block = build_quad(kappa, lam_star, eps, mode="corner")
    g = block.face.geom

    faces = list(cut.faces.values())
    gluings = list(cut.gluings)
    marked = {k: v for k, v in (c.marked_curves or {}).items()
              if all(s.face in cut.faces for s in v.segments)}
    left_arcs, right_arcs = [], []
    for i in range(p):
        fid = f"C{i}"
        if i == p - 1 and not two_sided:
            # split the far circle so it can close onto itself antipodally
            e1 = block.face.edges[1]
            mid = ModelPoint(kappa, g.to_chart(e1.point_at(0.5 * e1.length)))
            co = [ModelPoint(kappa, g.to_chart(x)) for x in block.face.corners]
            faces.append(Face(fid, kappa, [co[0], co[1], mid, co[2], co[3]]))
            gluings.append(Gluing(fid, 0, fid, 3, True, f"graftseam{i}"))
            gluings.append(Gluing(fid, 1, fid, 2, False, f"graftcap{i}"))
            left_arcs.append([(fid, 4, True)])
            right_arcs.append(None)
        else:
            faces.append(Face(fid, kappa,
                              [ModelPoint(kappa, g.to_chart(x))
                               for x in block.face.corners]))
            gluings.append(Gluing(fid, 0, fid, 2, True, f"graftseam{i}"))
            left_arcs.append([(fid, 3, True)])
            right_arcs.append([(fid, 1, True)])
        marked[f"graft{i}"] = block.soul_curve(fid)
    merged = SurfaceComplex(faces, gluings)

    arcs_a = [[(fid, e, fwd) for fid, e, fwd in cycles[0]]]
    arcs_b = [left_arcs[0]]
    for i in range(1, p):
        arcs_a.append(right_arcs[i - 1])
        arcs_b.append(left_arcs[i])
    if two_sided:
        arcs_a.append(right_arcs[p - 1])
        arcs_b.append([(fid, e, fwd) for fid, e, fwd in cycles[1]])
    out = glue_boundary(merged, arcs_a, None, arcs_b)
    out = SurfaceComplex(list(out.faces.values()), list(out.gluings), marked)
    out.require_valid()

    # conservative separation: twice the clearance between a soul and
    # its own block's circles
    clear = min(g.dist(block.midpoint("bottom"), block.face.edges[e].point_at(t))
                for e in (1, 3)
                for t in [x * block.face.edges[e].length / 16 for x in range(17)])
    report = {"lam_star": lam_star, "target": target,
              "two_sided": two_sided,
              "circle_residual": abs(resid(lam_star)),
              "separation": 2.0 * clear}
    return out, report


def build_cone_disk(omega: float = 0.2, m: int = 16, r: float = 1.0,
                    kappa: float = 0.0) -> SurfaceComplex:
    """Polygonal disk: m congruent triangles around one interior cone point.

    The center has total angle 2*pi - omega; the boundary is a convex
    m-gon of circumradius r.
    """
    if not 0.0 < omega < 2.0 * math.pi:
        raise InfeasibleParameters("cone deficit must lie in (0, 2*pi)")
    if m < 3:
        raise InfeasibleParameters("need at least three sectors")
    g = geom(kappa)
    O, u = _origin_and_axis(g)
    th = (2.0 * math.pi - omega) / m
    faces = []
    glu = []
    for i in range(m):
        A = g.exp(O, u, r)
        B = g.exp(O, g.rotate(O, u, th), r)
        faces.append(face_from_embedded(f"T{i}", kappa, [O, A, B]))
        glu.append(Gluing(f"T{i}", 2, f"T{(i + 1) % m}", 0, True, f"sp{i}"))
    return SurfaceComplex(faces, glu)


def build_flat_crosscap(omega: float = 0.2, m: int = 6,
                        r: float = 1.0) -> SurfaceComplex:
    """Closed flat non-orientable surface with chi = 1 and small cone points.

    The rim of a cone disk is self-identified by the half-rim shift (the
    antipodal map of the boundary circle), which caps the disk with a
    crosscap.  Every vertex keeps curvature below pi provided
    m > 2 * (2*pi - omega) / pi, so the output satisfies the hypotheses
    of the strip-insertion pipeline.
    """
    if m % 2 != 0:
        raise InfeasibleParameters("rim self-identification needs even m")
    if m <= 2.0 * (2.0 * math.pi - omega) / math.pi:
        raise InfeasibleParameters(
            "too few sectors: rim vertices would carry curvature >= pi")
    disk = build_cone_disk(omega, m, r)
    glu = list(disk.gluings)
    for i in range(m // 2):
        glu.append(Gluing(f"T{i}", 1, f"T{i + m // 2}", 1, False, f"rim{i}"))
    c = SurfaceComplex(list(disk.faces.values()), glu)
    c.require_valid()
    return c


def _split_boundary_at_angles(c: SurfaceComplex):
    """Split the single boundary cycle at its two non-pi corner angles.

    Returns (arcs, lengths): two directed side lists and their lengths.
    """
    cycles = c.boundary_cycles()
    if len(cycles) != 1:
        raise ValidationError("expected exactly one boundary cycle")
    cyc = cycles[0]
    breaks = []
    for k, (fid, e, fwd) in enumerate(cyc):
        corner = (e + 1) % c.faces[fid].n if fwd else e
        theta = c.vertex_theta(c.orbit_index(fid, corner))
        if abs(theta - math.pi) > 1e-7:
            breaks.append(k)
    if len(breaks) != 2:
        raise ValidationError(
            f"expected two boundary angles, found {len(breaks)}")
    j1, j2 = breaks
    n = len(cyc)
    arc1 = [cyc[(j1 + 1 + i) % n] for i in range((j2 - j1) % n)]
    arc2 = [cyc[(j2 + 1 + i) % n] for i in range((j1 - j2) % n)]
    lens = [sum(c.faces[fid].edges[e].length for fid, e, _f in a)
            for a in (arc1, arc2)]
    return (arc1, arc2), lens


def enrich_projective(P: SurfaceComplex, m: int, eps: float,
                      word_budget: int = 4) -> SurfaceComplex:
    """Replace a tubular neighborhood of the shortest non-contractible
    geodesic of a chi = 1 surface by a crosscap strip carrying m marked
    simple closed geodesics.

    Pipeline: find the shortest non-contractible geodesic G, cut along
    it (a disk), split the disk boundary into two equal arcs by two
    angles of pi - beta, then weld in a strip whose boundary is two
    equal arcs meeting at two angles of pi + beta; every weld vertex
    closes up to angle exactly 2*pi.
    """
    from .engine import shortest_noncontractible
    from .surgery import cut_along, glue_boundary
    from .perturb import lad_add_boundary_angles

    if m < 1 or eps <= 0.0:
        raise InfeasibleParameters("need m >= 1 and eps > 0")
    if not P.closed:
        raise ValidationError("input must be a closed surface")
    chi, _orient = euler_and_orientability(P)
    if chi != 1:
        raise ValidationError("input must have Euler characteristic 1")
    kappas = {round(f.kappa, 12) for f in P.faces.values()}
    if len(kappas) != 1:
        raise ValidationError("mixed-curvature input")
    kappa = next(iter(kappas))
    for v in range(P.V):
        if 2.0 * math.pi - P.vertex_theta(v) >= math.pi - 1e-12:
            raise InfeasibleParameters(
                "a cone point carries curvature >= pi")

    G = shortest_noncontractible(P, word_budget=word_budget)
    if not G.meta.get("geodesic", False):
        raise InfeasibleParameters(
            "shortest non-contractible curve is vertex-obstructed")
    if kappa > KAPPA_ZERO_TOL and G.length >= math.pi - 1e-12:
        raise InfeasibleParameters(
            "shortest non-contractible geodesic has length >= pi")
    if abs(kappa) > KAPPA_ZERO_TOL:
        raise InfeasibleParameters(
            "strip insertion is implemented for flat complexes only")

    D = cut_along(P, G)
    if len(D.boundary_cycles()) != 1:
        raise ValidationError("cut did not open the surface into a disk")

    deficits = [2.0 * math.pi - D.vertex_theta(v) for v in range(D.V)
                if not D.is_boundary_vertex(v)]
    max_def = max([d for d in deficits if d > 1e-12], default=0.0)
    if max_def <= 0.0:
        raise InfeasibleParameters("cut disk has no interior cone point")
    beta = min(eps, 0.2 * max_def)

    D2 = lad_add_boundary_angles(D, beta=beta)
    arcsD, lensD = _split_boundary_at_angles(D2)
    if abs(lensD[0] - lensD[1]) > 1e-7 * (1.0 + lensD[0]):
        raise ValidationError("disk arcs are unequal after angle insertion")
    A = 0.5 * (lensD[0] + lensD[1])

    # strip arcs have length lam/2 - 2*eps*sin(beta/2); match them to A
    lam = 2.0 * A + 4.0 * eps * math.sin(0.5 * beta)
    strip, _info = build_crosscap_strip(0.0, m, lam, eps, alpha=beta)
    arcsS, lensS = _split_boundary_at_angles(strip)
    if max(abs(L - A) for L in lensS) > 1e-9 * (1.0 + A):
        raise InfeasibleParameters("strip arcs failed to match the disk arcs")

    rev = lambda arc: [(fid, e, not fwd) for fid, e, fwd in reversed(arc)]
    out = glue_boundary(D2, list(arcsD), strip,
                        [rev(arcsS[0]), rev(arcsS[1])])
    out = SurfaceComplex(list(out.faces.values()), list(out.gluings),
                         marked_curves=dict(strip.marked_curves))
    out.require_valid()
    if not out.closed:
        raise ValidationError("result is not closed")
    chi2, _ = euler_and_orientability(out)
    if chi2 != 1:
        raise ValidationError("result lost Euler characteristic 1")
    return out
