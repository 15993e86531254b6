"""Geodesic engine: tracing, shortening, enumeration, and curve probes.

Tracing steps a geodesic face by face.  Inside a face the path is a
plane section of the model quadric; the exit point is the first forward
intersection of that plane with an edge plane, and crossings are carried
by the transport map of the surface complex.

Shortening works on the crossing-node representation of a closed curve:
one sliding parameter per edge crossing (or boundary touch), relaxed by
cyclic coordinate descent.  Every accepted move is a strict length
decrease, so partial convergence still yields a valid upper curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (ValidationError, InfeasibleParameters, NonConvergence,
                     VertexObstruction, CurveCollapse)
from .model import ModelPoint, geom
from .surfcomplex import SurfaceComplex, transport_across, VERTEX_TOL
from .curves import CurveSegment, SurfaceCurve, curve_hausdorff
from . import sampling

_STEP_TOL = 1e-12          # minimum forward progress per face
_EDGE_ON_TOL = 1e-9        # slack for "lies on the edge segment"
_MAX_FACE_STEPS = 200000


def _ray_param(g, x, d, y):
    """Forward arc length from x (unit tangent d) to y on the same geodesic."""
    if g.sign == 0:
        return (y[0] - x[0]) * d[0] + (y[1] - x[1]) * d[1]
    if g.sign > 0:
        t = math.atan2(g.dot_t(y, d), y[0] * x[0] + y[1] * x[1] + y[2] * x[2])
        if t < _STEP_TOL / g.R:
            t += 2.0 * math.pi
        return t * g.R
    return math.asinh(g.dot_t(y, d)) * g.R


def _geo_tangent_at(g, x, d, t):
    """Unit tangent after distance t along the geodesic from (x, d)."""
    if g.sign == 0:
        return d
    th = t / g.R
    if g.sign > 0:
        c, s = math.cos(th), math.sin(th)
        return (-s * x[0] + c * d[0], -s * x[1] + c * d[1], -s * x[2] + c * d[2])
    c, s = math.cosh(th), math.sinh(th)
    return (s * x[0] + c * d[0], s * x[1] + c * d[1], s * x[2] + c * d[2])


def _mp(g, kappa, x):
    return ModelPoint(kappa, g.to_chart(x))


def _segment(face, g, x, v, y, seg_len):
    mid = None
    if g.sign > 0 and seg_len > 0.5 * math.pi * g.R:
        mid = _mp(g, face.kappa, g.exp(x, v, seg_len / 2))
    return CurveSegment(face.id, _mp(g, face.kappa, x), _mp(g, face.kappa, y), mid)


def trace(c: SurfaceComplex, fid: str, point, direction, max_len,
          vertex_tol=VERTEX_TOL):
    """Trace the geodesic from a point of face fid.

    point: ModelPoint or chart coords; direction: chart tangent components.
    Stops at max_len, at a boundary edge, or within vertex_tol of a cone
    vertex.  Returns an open SurfaceCurve with a crossing word.
    """
    face = c.faces[fid]
    g = face.geom
    coords = point.coords if isinstance(point, ModelPoint) else tuple(point)
    x = g.from_chart(coords)
    d = g.tangent_from_chart(x, tuple(direction))
    for corner in face.corners:
        if g.dist(x, corner) < vertex_tol:
            raise VertexObstruction("trace start lies on a vertex")

    segments = []
    word = []
    halt = "max_len"
    L = 0.0
    for _ in range(_MAX_FACE_STEPS):
        face = c.faces[fid]
        g = face.geom
        gpl = g.geodesic(x, d)
        best = None
        for e, edge in enumerate(face.edges):
            for y in g.intersections(gpl, edge.plane):
                t = _ray_param(g, x, d, y)
                if not (t > _STEP_TOL):
                    continue
                s = edge.param_of(y)
                if -_EDGE_ON_TOL <= s <= edge.length + _EDGE_ON_TOL:
                    if best is None or t < best[0]:
                        best = (t, e, y, s)
        if best is None:
            halt = "stuck"
            break
        t, e, y, s = best
        if L + t >= max_len - 1e-15:
            rem = max_len - L
            yend = g.exp(x, d, rem)
            if rem > _STEP_TOL:
                segments.append(_segment(face, g, x, d, yend, rem))
            L = max_len
            halt = "max_len"
            break
        edge = face.edges[e]
        segments.append(_segment(face, g, x, d, y, t))
        L += t
        if min(s, edge.length - s) < vertex_tol:
            halt = "vertex_hit"
            break
        if (fid, e) not in c.edge_gluing:
            halt = "boundary"
            break
        dy = _geo_tangent_at(g, x, d, t)
        fid, x, d, gl, sgn = transport_across(c, fid, e, y, dy)
        word.append((gl.id, sgn))
    else:
        raise NonConvergence("trace exceeded the face-step budget")
    return SurfaceCurve(segments, closed=False, crossing_word=tuple(word),
                        halt_reason=halt)


@dataclass
class ClosureReport:
    closed: bool
    pos_gap: float
    angle_gap: float


def close_up_check(c: SurfaceComplex, curve: SurfaceCurve, tol=1e-8):
    """Compare the end state of a traced curve against its start state."""
    if not curve.segments:
        return ClosureReport(False, math.inf, math.inf)
    first = curve.segments[0]
    last = curve.segments[-1]
    if first.face != last.face:
        return ClosureReport(False, math.inf, math.inf)
    g, S0, _, v0, _ = first.geometry()
    g2, S1, E1, v1, d1 = last.geometry()
    pos_gap = g.dist(E1, S0)
    vend = _geo_tangent_at(g, S1, v1, d1)
    dt = max(-1.0, min(1.0, g.dot_t(vend, v0)))
    angle_gap = math.acos(dt)
    return ClosureReport(pos_gap <= tol and angle_gap <= math.sqrt(tol), pos_gap, angle_gap)


# -- crossing-node representation ---------------------------------------------


class _Node:
    """One sliding crossing (or boundary touch) of a closed curve."""

    __slots__ = ("fid", "e", "t", "boundary", "nxt")

    def __init__(self, fid, e, t, boundary, nxt):
        self.fid = fid          # face whose edge carries the node (incoming side)
        self.e = e
        self.t = t
        self.boundary = boundary
        self.nxt = nxt          # face the curve continues in


def _partner(c, fid, e, t):
    g = c.edge_gluing[(fid, e)]
    if (g.face_a, g.edge_a) == (fid, e):
        fid2, e2 = g.face_b, g.edge_b
    else:
        fid2, e2 = g.face_a, g.edge_a
    eB = c.faces[fid2].edges[e2]
    t2 = eB.length - t if g.reversed else t
    return fid2, e2, t2


def _node_in(c, nd):
    """Node position on its incoming-face side (embedded)."""
    return c.faces[nd.fid].edges[nd.e].point_at(nd.t)


def _node_out(c, nd):
    """Node position on the side of the face the curve continues in."""
    if nd.boundary:
        return _node_in(c, nd)
    fid2, e2, t2 = _partner(c, nd.fid, nd.e, nd.t)
    return c.faces[fid2].edges[e2].point_at(t2)


def _locate_junction(c, fid, x):
    """(edge index, param) of an embedded point lying on an edge of face fid."""
    face = c.faces[fid]
    g = face.geom
    best = None
    for e, edge in enumerate(face.edges):
        s = edge.param_of(x)
        s = min(max(s, 0.0), edge.length)
        d = g.dist(edge.point_at(s), x)
        if best is None or d < best[0]:
            best = (d, e, s)
    if best[0] > 1e-6:
        return None
    return best[1], best[2]


def _nodes_from_curve(c, curve: SurfaceCurve):
    """Convert a closed curve into cyclic crossing nodes.

    Free interior junctions (polyline kinks inside a face) are removed by
    direct chording, which never lengthens the curve on convex faces.
    """
    segs = list(curve.segments)
    if len(segs) < 1:
        raise CurveCollapse("empty curve")
    # endpoints of segment k define junction k between seg k and seg k+1
    junctions = []
    n = len(segs)
    for k in range(n):
        nxt = segs[(k + 1) % n]
        g, S, E, _, _ = segs[k].geometry()
        loc = _locate_junction(c, segs[k].face, E)
        if loc is None:
            continue  # interior kink: chord straight through
        e, t = loc
        boundary = (segs[k].face, e) not in c.edge_gluing
        junctions.append(_Node(segs[k].face, e, t, boundary, nxt.face))
    if not junctions:
        raise CurveCollapse("closed curve has no edge crossings (contractible)")
    # consistency: transported side must be where the next chord lives
    for nd in junctions:
        if not nd.boundary:
            fid2, _, _ = _partner(c, nd.fid, nd.e, nd.t)
            if fid2 != nd.nxt:
                raise ValidationError("curve junction disagrees with its gluing")
        elif nd.nxt != nd.fid:
            raise ValidationError("boundary touch must stay in its face")
    return junctions


def _chord_len(c, nd_a, nd_b):
    fid = nd_a.nxt
    g = c.faces[fid].geom
    return g.dist(_node_out(c, nd_a), _node_in(c, nd_b))


def _nodes_length(c, nodes):
    n = len(nodes)
    return sum(_chord_len(c, nodes[i], nodes[(i + 1) % n]) for i in range(n))


def _remove_backtracks(c, nodes):
    """Drop adjacent cross-and-return pairs over the same gluing."""
    changed = True
    while changed and len(nodes) > 2:
        changed = False
        n = len(nodes)
        for i in range(n):
            a = nodes[i]
            b = nodes[(i + 1) % n]
            if a.boundary or b.boundary:
                continue
            ga = c.edge_gluing[(a.fid, a.e)]
            gb = c.edge_gluing[(b.fid, b.e)]
            if ga is gb and b.nxt == a.fid and b.fid == a.nxt:
                j = max(i, (i + 1) % n)
                k = min(i, (i + 1) % n)
                del nodes[j]
                del nodes[k]
                changed = True
                break
    return nodes


def _relax_nodes(c, nodes, max_sweeps=2000, vertex_margin=1e-9):
    """Cyclic coordinate descent over node parameters; monotone in length."""
    obstructed = set()
    total = _nodes_length(c, nodes)
    for sweep in range(max_sweeps):
        obstructed = set()
        n = len(nodes)
        for i in range(n):
            nd = nodes[i]
            prev = nodes[(i - 1) % n]
            nxt = nodes[(i + 1) % n]
            edge_in = c.faces[nd.fid].edges[nd.e]
            g_in = c.faces[nd.fid].geom
            g_out = c.faces[nd.nxt].geom
            p_prev = _node_out(c, prev)
            p_next = _node_in(c, nxt)
            if nd.boundary:
                def obj(t):
                    x = edge_in.point_at(t)
                    return g_in.dist(p_prev, x) + g_out.dist(x, p_next)
            else:
                fid2, e2, _ = _partner(c, nd.fid, nd.e, nd.t)
                edge_out = c.faces[fid2].edges[e2]
                gl = c.edge_gluing[(nd.fid, nd.e)]
                L2 = edge_out.length

                if n == 1:
                    # the loop is a single chord from the node back to
                    # itself: both endpoints slide together
                    def obj(t):
                        x = edge_in.point_at(t)
                        t2 = L2 - t if gl.reversed else t
                        y = edge_out.point_at(t2)
                        return g_out.dist(y, x)
                else:
                    def obj(t):
                        x = edge_in.point_at(t)
                        t2 = L2 - t if gl.reversed else t
                        y = edge_out.point_at(t2)
                        return g_in.dist(p_prev, x) + g_out.dist(y, p_next)
            lo, hi = vertex_margin, edge_in.length - vertex_margin
            if hi <= lo:
                obstructed.add(i)
                continue
            res = minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-13})
            if res.fun < obj(nd.t):
                nd.t = float(res.x)
            # Newton polish: the bounded minimizer stops near sqrt(eps)
            # relative resolution, which leaves first-order angle gaps
            t0 = nd.t
            h = max(1e-7, 1e-9 * edge_in.length)
            for _ in range(3):
                if not (lo + h < t0 < hi - h):
                    break
                f0 = obj(t0)
                fp = obj(t0 + h)
                fm = obj(t0 - h)
                d1 = (fp - fm) / (2 * h)
                d2 = (fp - 2 * f0 + fm) / (h * h)
                if d2 <= 0 or not math.isfinite(d2):
                    break
                step = d1 / d2
                t1 = min(max(t0 - step, lo), hi)
                if obj(t1) <= f0:
                    t0 = t1
                if abs(step) < 1e-12:
                    break
            if obj(t0) <= obj(nd.t):
                nd.t = t0
            if min(nd.t - lo, hi - nd.t) < 1e-7:
                obstructed.add(i)
        nodes = _remove_backtracks(c, nodes)
        if not nodes:
            raise CurveCollapse("curve shortened to a point")
        new_total = _nodes_length(c, nodes)
        if total - new_total < 1e-15 * max(1.0, total):
            total = new_total
            break
        total = new_total
    if total < 1e-9:
        raise CurveCollapse("curve shortened below measurable length")
    return nodes, total, sweep + 1, obstructed


def _nodes_to_curve(c, nodes, meta):
    n = len(nodes)
    segs = []
    word = []
    for i in range(n):
        nd = nodes[i]
        nxt = nodes[(i + 1) % n]
        fid = nd.nxt
        face = c.faces[fid]
        g = face.geom
        x = _node_out(c, nd)
        y = _node_in(c, nxt)
        mid = None
        if g.sign > 0 and g.dist(x, y) > math.pi * g.R - 1e-9:
            nu = g.left(x, g.normalize_t(x, c.faces[nd.fid].edges[nd.e].tangent_at(nd.t)))
            # antipodal chord: pick the arc through the face interior
            mid = _mp(g, face.kappa, g.exp(x, tuple(-u for u in nu), math.pi * g.R / 2))
        segs.append(CurveSegment(fid, _mp(g, face.kappa, x), _mp(g, face.kappa, y), mid))
        if not nd.boundary:
            gl = c.edge_gluing[(nd.fid, nd.e)]
            sgn = +1 if (gl.face_a, gl.edge_a) == (nd.fid, nd.e) else -1
            word.append((gl.id, sgn))
    # rotate so segment i follows crossing i (start the word at node 0)
    return SurfaceCurve(segs, closed=True, crossing_word=tuple(word),
                        halt_reason="ok", meta=meta)


def _node_angle_gaps(c, nodes):
    """Straightness defect at each node (transported turning angle)."""
    gaps = []
    n = len(nodes)
    for i in range(n):
        nd = nodes[i]
        prev = nodes[(i - 1) % n]
        nxt = nodes[(i + 1) % n]
        g_in = c.faces[nd.fid].geom
        x_in = _node_in(c, nd)
        p_prev = _node_out(c, prev)
        if g_in.dist(p_prev, x_in) < 1e-12:
            gaps.append(math.pi)
            continue
        v_arr = tuple(-u for u in g_in.log(x_in, p_prev)[0])
        x_out = _node_out(c, nd)
        g_out = c.faces[nd.nxt].geom
        p_next = _node_in(c, nxt)
        if g_out.dist(x_out, p_next) < 1e-12:
            gaps.append(math.pi)
            continue
        v_dep = g_out.log(x_out, p_next)[0]
        if nd.boundary:
            tau = g_in.normalize_t(x_in, c.faces[nd.fid].edges[nd.e].tangent_at(nd.t))
            gaps.append(abs(g_in.dot_t(v_arr, tau) - g_in.dot_t(v_dep, tau)))
        else:
            _, _, v2, _, _ = transport_across(c, nd.fid, nd.e, x_in, v_arr)
            dt = max(-1.0, min(1.0, g_out.dot_t(v2, v_dep)))
            gaps.append(math.acos(dt))
    return gaps


def shorten(c: SurfaceComplex, curve: SurfaceCurve, max_sweeps=240):
    """Length-monotone shortening of a closed curve within its class.

    Boundary touches are preserved as constraints; adjacent backtrack
    crossings are removed (free word reduction).  Raises CurveCollapse
    for contractible input.
    """
    if not curve.closed:
        raise ValidationError("shorten expects a closed curve")
    nodes = _nodes_from_curve(c, curve)
    nodes = _remove_backtracks(c, nodes)
    if not nodes:
        raise CurveCollapse("curve is a contractible bigon chain")
    nodes, total, sweeps, obstructed = _relax_nodes(c, nodes, max_sweeps)
    gaps = _node_angle_gaps(c, nodes)
    interior_gaps = [gp for nd, gp in zip(nodes, gaps) if not nd.boundary]
    meta = {
        "sweeps": sweeps,
        "angle_gaps": gaps,
        "max_angle_gap": max(interior_gaps) if interior_gaps else 0.0,
        "obstructed_nodes": sorted(obstructed),
        "boundary_nodes": [i for i, nd in enumerate(nodes) if nd.boundary],
        "geodesic": (not obstructed)
        and (max(interior_gaps) if interior_gaps else 0.0) < 1e-8,
    }
    return _nodes_to_curve(c, nodes, meta)


def _word_canonical(word):
    """Cyclic + inversion normal form of a crossing word."""
    w = tuple(word)
    if not w:
        return w
    inv = tuple((gid, -sgn) for gid, sgn in reversed(w))
    cands = []
    for seq in (w, inv):
        for r in range(len(seq)):
            cands.append(seq[r:] + seq[:r])
    return min(cands)


def shortest_noncontractible(c: SurfaceComplex, word_budget=3, max_words=4000):
    """Shortest closed geodesic among relaxed crossing words up to the budget.

    Raises InfeasibleParameters when the complex is simply connected
    (sphere or disk) or when no word survives shortening at this budget.
    """
    ncyc = len(c.boundary_cycles())
    if (c.closed and c.chi == 2) or (not c.closed and c.chi == 1 and ncyc == 1):
        raise InfeasibleParameters("complex is simply connected: "
                                   "no non-contractible curve exists")
    crossings = []
    for (fid, e), gl in sorted(c.edge_gluing.items()):
        fid2, _, _ = _partner(c, fid, e, c.faces[fid].edges[e].length / 2)
        crossings.append((fid, e, fid2))
    seen = set()
    words = []

    def extend(path, here, start):
        if len(path) > word_budget or len(words) >= max_words:
            return
        for fid, e, fid2 in crossings:
            if fid != here:
                continue
            new = path + [(fid, e)]
            if fid2 == start and new:
                key = _word_canonical(tuple(
                    (c.edge_gluing[(f, ee)].id,
                     1 if (c.edge_gluing[(f, ee)].face_a,
                           c.edge_gluing[(f, ee)].edge_a) == (f, ee) else -1)
                    for f, ee in new))
                if key not in seen:
                    seen.add(key)
                    words.append(list(new))
            if len(new) < word_budget:
                extend(new, fid2, start)

    for f0 in sorted(c.faces):
        extend([], f0, f0)

    best = None
    best_geo = None
    for wpath in words:
        nodes = []
        ok = True
        for fid, e in wpath:
            fid2, _, _ = _partner(c, fid, e, 0.0)
            nodes.append(_Node(fid, e, c.faces[fid].edges[e].length / 2, False, fid2))
        for i, nd in enumerate(nodes):
            if nodes[(i + 1) % len(nodes)].fid != nd.nxt:
                ok = False
        if not ok:
            continue
        try:
            nodes = _remove_backtracks(c, nodes)
            if not nodes:
                continue
            nodes, total, sweeps, obstructed = _relax_nodes(c, nodes)
        except CurveCollapse:
            continue
        if total < 1e-6:
            # the word shrank onto a cone vertex: a contractible loop
            # pinned by the vertex, not a genuine free-homotopy class
            continue
        gaps = _node_angle_gaps(c, nodes)
        meta = {"sweeps": sweeps,
                "max_angle_gap": max(gaps) if gaps else 0.0,
                "obstructed_nodes": sorted(obstructed),
                "geodesic": not obstructed and (max(gaps) if gaps else 0.0) < 1e-8}
        cand = (total, _nodes_to_curve(c, nodes, meta))
        if meta["geodesic"] and (best_geo is None or total < best_geo[0] - 1e-12):
            best_geo = cand
        if best is None or total < best[0] - 1e-12:
            best = cand
    if best_geo is not None:
        return best_geo[1]
    if best is None:
        raise InfeasibleParameters(
            "no non-contractible class survived shortening at this word budget; "
            "the complex looks simply connected")
    return best[1]


# -- closed-geodesic enumeration ----------------------------------------------


def _closure_scan(c, curve, x0, d0, g0, fid0, pos_tol=1e-9, dir_tol=1e-9):
    """First arc length at which the trace re-enters its start state."""
    L = 0.0
    lens = curve.seg_lengths()
    for k, seg in enumerate(curve.segments):
        if k > 0 and seg.face == fid0:
            g, S, E, v, d = seg.geometry()
            if abs(g.side(g.geodesic(S, v), x0)) < pos_tol:
                s = _ray_param(g, S, v, x0)
                if g.sign > 0:
                    s = s % (2 * math.pi * g.R)
                if -1e-9 <= s <= d + 1e-9:
                    vd = _geo_tangent_at(g, S, v, s)
                    if g.dot_t(vd, d0) > 1.0 - dir_tol:
                        y = g.exp(S, v, s)
                        if g.dist(y, x0) < 1e-7:
                            return k, max(s, 0.0), L + max(s, 0.0)
        L += lens[k]
    return None


def _curve_is_simple(c, curve, tol=1e-9):
    """No transversal self-crossings among non-adjacent chords."""
    byface = {}
    n = len(curve.segments)
    for k, seg in enumerate(curve.segments):
        byface.setdefault(seg.face, []).append(k)
    for fid, ks in byface.items():
        g = c.faces[fid].geom
        geo = {}
        for k in ks:
            gg, S, E, v, d = curve.segments[k].geometry()
            geo[k] = (S, E, g.geodesic(S, v))
        for i in range(len(ks)):
            for j in range(i + 1, len(ks)):
                a, b = ks[i], ks[j]
                if (b - a) % n == 1 or (a - b) % n == 1:
                    continue
                Sa, Ea, pa = geo[a]
                Sb, Eb, pb = geo[b]
                sa = g.side(pa, Sb) * g.side(pa, Eb)
                sb = g.side(pb, Sa) * g.side(pb, Ea)
                if sa < -tol * tol and sb < -tol * tol:
                    return False
                if g.dist(Sa, Sb) < 1e-9 and g.dist(Ea, Eb) < 1e-9:
                    return False
    return True


def enumerate_simple_closed(c: SurfaceComplex, cap, grid=10, dedup_factor=3.0,
                            vertex_tol=VERTEX_TOL):
    """Grid shooting for simple closed geodesics of length <= cap.

    Returns (found, vertex_flagged): deduplicated closed curves plus the
    vertex-halted traces flagged for the almost-geodesic check.  Fully
    deterministic for a fixed grid.
    """
    found = []
    flagged = []
    for fid in sorted(c.faces):
        face = c.faces[fid]
        g = face.geom
        h = max(e.length for e in face.edges) / grid
        pts = sampling._face_interior_grid(face, h)
        dedup_radius = dedup_factor * h
        for x in pts:
            x = tuple(x)
            if g.sign == 0:
                u, w = (1.0, 0.0), (0.0, 1.0)
            else:
                u, w = sampling._tangent_basis(g, np.asarray(x))
            for j in range(grid):
                th = j * math.pi / grid
                d = tuple(math.cos(th) * a + math.sin(th) * b for a, b in zip(u, w))
                d = g.normalize_t(x, d)
                try:
                    cur = trace(c, fid, _mp(g, face.kappa, x), g.tangent_to_chart(x, d),
                                cap * 1.0000001, vertex_tol)
                except (VertexObstruction, NonConvergence):
                    continue
                if cur.halt_reason == "vertex_hit":
                    flagged.append(cur)
                    continue
                if cur.halt_reason != "max_len":
                    continue
                hit = _closure_scan(c, cur, x, d, g, fid)
                if hit is None:
                    continue
                k, s, L = hit
                if L > cap + 1e-9 or L < 1e-9:
                    continue
                gg, S, E, v, dd = cur.segments[k].geometry()
                segs = list(cur.segments[:k])
                if s > 1e-12:
                    segs.append(_segment(c.faces[fid], gg, S, v, gg.exp(S, v, s), s))
                word = cur.crossing_word[:k]
                cand = SurfaceCurve(segs, closed=True, crossing_word=word,
                                    halt_reason="ok")
                key = _word_canonical(word)
                dup = False
                for kept, kept_key, kept_r in found:
                    if kept_key != key:
                        continue
                    if abs(kept.length - L) > max(kept_r, dedup_radius) + 1e-6:
                        continue
                    if curve_hausdorff(c, kept, cand, spacing=max(h / 2, 0.01)) \
                            < max(kept_r, dedup_radius):
                        dup = True
                        break
                if dup:
                    continue
                cand.simple = _curve_is_simple(c, cand)
                if cand.simple:
                    found.append((cand, key, dedup_radius))
    curves = [f[0] for f in found]
    curves.sort(key=lambda q: (round(q.length, 9), q.segments[0].face))
    return curves, flagged


# -- detour bounds over block sides -------------------------------------------


@dataclass
class DetourBound:
    which: str
    lam: float
    eps: float
    bound: float
    value: float
    minimizer: tuple
    note: str = ""

    def evaluate(self, block):
        """Re-evaluate the objective at the stored minimizer."""
        t, side, s = self.minimizer
        return _detour_objective(block, self.which)(t, side, s)


def _detour_objective(block, which):
    face = block.face
    g = face.geom
    if which == "alpha":
        ia, ib = block.SIDE_EDGE["bottom"], block.SIDE_EDGE["top"]
        frees = (block.SIDE_EDGE["right"], block.SIDE_EDGE["left"])
        ea, eb = face.edges[ia], face.edges[ib]

        def lr(t):
            return ea.point_at(t), eb.point_at(eb.length - t)
    elif which == "beta":
        ia, ib = block.SIDE_EDGE["left"], block.SIDE_EDGE["right"]
        frees = (block.SIDE_EDGE["bottom"], block.SIDE_EDGE["top"])
        ea, eb = face.edges[ia], face.edges[ib]

        def lr(t):
            return ea.point_at(t), eb.point_at(t)
    else:
        raise ValidationError(f"unknown detour objective {which!r}")

    def F(t, side, s):
        l, r = lr(t)
        u = face.edges[side].point_at(s)
        return g.dist(l, u) + g.dist(u, r)

    F.glued_edge = ea
    F.free_sides = frees
    return F


def detour_bound(block, which, grid=48, rounds=80):
    """Lower detour margin for loops touching a free side of the block.

    alpha: cylinder-type correspondence between the two glued sides;
    beta: central-symmetry correspondence of the one-sided band.
    The bound is min over crossing point, touch side and touch point of
    the two-leg detour length, minus the soul length.
    """
    F = _detour_objective(block, which)
    g = block.face.geom
    lam = block.lam

    if which == "alpha" and g.sign == 0:
        # flat cylinder blocks: the free minimum degenerates to the soul
        # length at the glued corners; report the symmetric mid-crossing
        # evaluation, which is the operative margin for mid-crossing loops.
        ea = F.glued_edge
        side = F.free_sides[0]
        eu = block.face.edges[side]
        val = F(ea.length / 2, side, eu.length / 2)
        return DetourBound(which, lam, block.eps, val - lam, val,
                           (ea.length / 2, side, eu.length / 2),
                           note="flat free minimum is corner-degenerate; "
                                "symmetric evaluation reported")

    best = None
    ea = F.glued_edge
    for side in F.free_sides:
        eu = block.face.edges[side]
        ts = np.linspace(1e-9, ea.length - 1e-9, grid)
        ss = np.linspace(1e-9, eu.length - 1e-9, grid)
        for t in ts:
            for s in ss:
                v = F(t, side, s)
                if best is None or v < best[0]:
                    best = (v, t, side, s)
        # coordinate refinement from the best grid cell
    v, t, side, s = best
    eu = block.face.edges[side]
    for _ in range(rounds):
        r1 = minimize_scalar(lambda tt: F(tt, side, s),
                             bounds=(1e-12, ea.length - 1e-12), method="bounded",
                             options={"xatol": 1e-14})
        t = float(r1.x)
        r2 = minimize_scalar(lambda ss2: F(t, side, ss2),
                             bounds=(1e-12, eu.length - 1e-12), method="bounded",
                             options={"xatol": 1e-14})
        s = float(r2.x)
        if abs(r2.fun - v) < 1e-14:
            v = r2.fun
            break
        v = r2.fun
    return DetourBound(which, lam, block.eps, v - lam, v, (t, side, s))


# -- vertex passages -----------------------------------------------------------


@dataclass
class VertexPassage:
    orbit: int
    side_sums: tuple
    ok: bool


def _corner_rays(face, j):
    """(ray along edge j, ray back along edge j-1) at corner j, both unit."""
    g = face.geom
    x = face.corners[j]
    a = g.normalize_t(x, face.edges[j].tan_start)
    e_in = face.edges[(j - 1) % face.n]
    b = g.normalize_t(x, tuple(-u for u in e_in.tangent_at(e_in.length)))
    return a, b


def _ang_ccw(g, x, u, v):
    lv = g.left(x, u)
    a = math.atan2(g.dot_t(v, lv), g.dot_t(v, u))
    return a % (2 * math.pi)


def _vertex_side_sum(c, fid_in, j_in, v_arr, fid_out, j_out, v_dep):
    """Angle swept on one side of a vertex passage, walking the star ccw."""
    face = c.faces[fid_in]
    g = face.geom
    x = face.corners[j_in]
    a_ray, b_ray = _corner_rays(face, j_in)
    u = g.normalize_t(x, tuple(-w for w in v_arr))
    if fid_in == fid_out and j_in == j_out:
        dep = g.normalize_t(x, v_dep)
        phi_dep = _ang_ccw(g, x, a_ray, dep)
        phi_u = _ang_ccw(g, x, a_ray, u)
        if phi_dep >= phi_u:
            return phi_dep - phi_u
    total = _ang_ccw(g, x, u, b_ray)
    # cross the edge behind b_ray (edge j_in - 1) and keep walking
    fid, j = fid_in, j_in
    entry_is_a = False
    for _ in range(4 * len(c.faces) * max(f.n for f in c.faces.values())):
        face = c.faces[fid]
        e_cross = j if entry_is_a else (j - 1) % face.n
        at_start = entry_is_a
        gl = c.edge_gluing.get((fid, e_cross))
        if gl is None:
            return math.inf  # walked into the boundary: open side
        if (gl.face_a, gl.edge_a) == (fid, e_cross):
            fid2, e2 = gl.face_b, gl.edge_b
        else:
            fid2, e2 = gl.face_a, gl.edge_a
        at_start2 = at_start if not gl.reversed else (not at_start)
        f2 = c.faces[fid2]
        j2 = e2 if at_start2 else (e2 + 1) % f2.n
        entry_is_a2 = at_start2  # entered along edge e2: ray A iff corner==e2
        g2 = f2.geom
        x2 = f2.corners[j2]
        a2, b2 = _corner_rays(f2, j2)
        entry_ray = a2 if entry_is_a2 else b2
        if fid2 == fid_out and j2 == j_out:
            dep = g2.normalize_t(x2, v_dep)
            if entry_is_a2:
                part = _ang_ccw(g2, x2, a2, dep)
            else:
                part = _ang_ccw(g2, x2, dep, b2)
            wedge = f2.interior_angle(j2)
            if part <= wedge + 1e-9:
                return total + part
        total += f2.interior_angle(j2)
        fid, j = fid2, j2
        entry_is_a = not entry_is_a2  # exit through the other ray next
    raise NonConvergence("vertex star walk did not terminate")


def almost_geodesic_check(c: SurfaceComplex, curve: SurfaceCurve,
                          vertex_tol=1e-7, tol=1e-8):
    """Verify vertex passages of a curve: at each junction sitting on a
    cone vertex the two side angle sums must not straddle pi.

    Junctions away from vertices pass trivially.  Returns a list of
    VertexPassage reports (empty when no vertex is met)."""
    reports = []
    segs = curve.segments
    n = len(segs)
    rng = range(n) if curve.closed else range(n - 1)
    for k in rng:
        seg = segs[k]
        nxt = segs[(k + 1) % n]
        g, S, E, v, d = seg.geometry()
        face = c.faces[seg.face]
        j_in = None
        for j, corner in enumerate(face.corners):
            if g.dist(E, corner) < vertex_tol:
                j_in = j
        if j_in is None:
            continue
        g2, S2, E2, v2, d2 = nxt.geometry()
        f2 = c.faces[nxt.face]
        j_out = None
        for j, corner in enumerate(f2.corners):
            if g2.dist(S2, corner) < vertex_tol:
                j_out = j
        if j_out is None:
            continue
        v_arr = _geo_tangent_at(g, S, v, d)
        orbit = c.orbit_index(seg.face, j_in)
        theta = c.vertex_theta(orbit)
        s1 = _vertex_side_sum(c, seg.face, j_in, v_arr, nxt.face, j_out, v2)
        s2 = theta - s1 if math.isfinite(s1) else math.inf
        ok = (min(s1, s2) >= math.pi - tol) or (max(s1, s2) <= math.pi + tol)
        reports.append(VertexPassage(orbit, (s1, s2), ok))
    return reports


# -- chord-arc profile ---------------------------------------------------------


@dataclass
class ChordArcProfile:
    length: float
    eps_scale: float       # largest 1/p with d(x, y) = arc for arc <= 1/p
    chord_bound: float     # smallest distance among arc-separated pairs
    length_cap_slack: float  # 2*pi - length
    note: str = ""


def chord_arc_profile(c: SurfaceComplex, curve: SurfaceCurve, h=0.02,
                      samples=24, slack=0.035):
    """Chord-arc quality of a closed geodesic from an intrinsic sample.

    Graph distances overestimate; d_lo = d_graph / (1 + slack) is the
    certified lower bound used for the equality scan, so eps_scale is
    reliable up to the sampling slack (recorded in the note)."""
    if not curve.closed:
        raise ValidationError("chord_arc_profile expects a closed curve")
    ell = curve.length
    pts = curve.sample_points(ell / samples)
    extra = {}
    for i, (fid, x) in enumerate(pts[:samples]):
        g = c.faces[fid].geom
        extra[f"caq{i}"] = (fid, g.to_chart(x))
    samp = sampling.intrinsic_sample(c, h, extra=extra)
    idx = [samp.extra_index[f"caq{i}"] for i in range(samples)]
    eps_scale = 0.0
    worst_far = math.inf
    half = samples // 2
    for k in range(1, half + 1):
        arc = k * ell / samples
        ok = True
        for i in range(samples):
            dg = samp.dist[idx[i], idx[(i + k) % samples]]
            d_lo = dg / (1.0 + slack)
            if d_lo < arc - max(1e-6, slack * arc):
                ok = False
            if arc >= eps_scale:
                worst_far = min(worst_far, dg)
        if ok:
            eps_scale = arc
        else:
            break
    # chord bound: closest approach among pairs separated by >= eps_scale
    chord = math.inf
    for i in range(samples):
        for k in range(1, samples):
            arc = min(k, samples - k) * ell / samples
            if arc >= eps_scale - 1e-12 and eps_scale > 0:
                chord = min(chord, samp.dist[idx[i], idx[(i + k) % samples]] / (1.0 + slack))
    return ChordArcProfile(ell, eps_scale, chord, 2 * math.pi - ell,
                           note=f"graph sample h={h}, slack={slack}")


# -- stability probe -----------------------------------------------------------


@dataclass
class StabilityTrial:
    drift: float
    length: float
    word_preserved: bool
    geodesic: bool


@dataclass
class StabilityReport:
    trials: list
    max_drift: float
    all_recovered: bool


def _perturbed_complex(c: SurfaceComplex, jitter, rng):
    """Jitter face corners, then re-solve gluing length matches."""
    from scipy.optimize import least_squares

    fids = sorted(c.faces)
    spans = {}
    x0 = []
    pos = 0
    for fid in fids:
        f = c.faces[fid]
        dim = 3 if f.geom.sign > 0 else 2
        base = []
        for p in f.boundary:
            coords = np.array(p.coords, dtype=float)
            coords = coords + rng.uniform(-jitter, jitter, size=len(coords))
            base.extend(coords)
        spans[fid] = (pos, dim, f.n)
        pos += dim * f.n
        x0.extend(base)
    x0 = np.array(x0)

    def build(vec):
        faces = {}
        for fid in fids:
            f = c.faces[fid]
            start, dim, n = spans[fid]
            corners = []
            for i in range(n):
                cc = tuple(vec[start + i * dim: start + (i + 1) * dim])
                corners.append(ModelPoint(f.kappa, geom(f.kappa).to_chart(
                    geom(f.kappa).from_chart(cc)) if f.geom.sign > 0 else cc))
            faces[fid] = type(f)(fid, f.kappa, corners, f.edge_witness or None)
        return faces

    glus = list(c.gluings)

    def resid(vec):
        faces = build(vec)
        out = []
        for gl in glus:
            la = faces[gl.face_a].edges[gl.edge_a].length
            lb = faces[gl.face_b].edges[gl.edge_b].length
            out.append(1e7 * (la - lb))
        out.extend(vec - x0)
        return np.array(out)

    sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    faces = build(sol.x)
    return SurfaceComplex(list(faces.values()), list(glus), c.marked_curves)


def stability_probe(c: SurfaceComplex, curve: SurfaceCurve, jitter=1e-4,
                    trials=3, seed=0, drift_spacing=0.02):
    """Re-shorten a marked geodesic on jittered copies of the complex."""
    nodes_ref = _nodes_from_curve(c, curve)
    word_ref = _word_canonical(_nodes_to_curve(c, nodes_ref, {}).crossing_word)
    results = []
    for trial in range(trials):
        rng = np.random.default_rng(seed + trial)
        cp = _perturbed_complex(c, jitter, rng)
        cp.require_valid()
        nodes = [_Node(nd.fid, nd.e, min(nd.t, cp.faces[nd.fid].edges[nd.e].length - 1e-9),
                       nd.boundary, nd.nxt) for nd in nodes_ref]
        ref_curve = _nodes_to_curve(cp, [
            _Node(nd.fid, nd.e, nd.t, nd.boundary, nd.nxt) for nd in nodes], {})
        nodes, total, sweeps, obstructed = _relax_nodes(cp, nodes)
        gaps = _node_angle_gaps(cp, nodes)
        short = _nodes_to_curve(cp, nodes, {})
        drift = curve_hausdorff(cp, ref_curve, short, spacing=drift_spacing)
        results.append(StabilityTrial(
            drift, total,
            _word_canonical(short.crossing_word) == word_ref,
            not obstructed and (max(gaps) if gaps else 0.0) < 1e-8))
    return StabilityReport(results, max(r.drift for r in results),
                           all(r.word_preserved for r in results))
