"""Cut-and-glue surgery on surface complexes.

Both operations are pure: they build new complexes.  The common
machinery is edge subdivision -- inserting collinear corners (interior
angle pi) so that curve endpoints and arc breakpoints become face
corners before faces are split or boundary edges are glued.
"""

from __future__ import annotations

import math

from .errors import ValidationError, InfeasibleParameters
from .model import ModelPoint, geom, KAPPA_ZERO_TOL
from .surfcomplex import (Face, Gluing, SurfaceComplex, GLUE_TOL, VERTEX_TOL,
                          face_from_embedded as _face_from_embedded)
from .curves import SurfaceCurve

_SPLIT_TOL = 1e-9


def _needs_witness(g, length):
    return g.sign > 0 and length >= math.pi * g.R - 1e-6


def subdivide_edges(c: SurfaceComplex, splits):
    """Insert corners at the given arc-length params of the given edges.

    splits: {(face id, edge): iterable of params}.  Splits are mirrored
    onto gluing partners automatically.  Returns (complex, edge_map)
    where edge_map[(fid, e)] is the ordered list of
    (new edge index, t0, t1) sub-edges covering the old edge.
    """
    per_edge = {}

    def add(fid, e, t):
        L = c.faces[fid].edges[e].length
        if t < _SPLIT_TOL or t > L - _SPLIT_TOL:
            return
        lst = per_edge.setdefault((fid, e), [])
        if all(abs(t - u) > _SPLIT_TOL for u in lst):
            lst.append(t)

    for (fid, e), ts in splits.items():
        for t in ts:
            add(fid, e, t)
            g = c.edge_gluing.get((fid, e))
            if g is not None:
                if (g.face_a, g.edge_a) == (fid, e):
                    fid2, e2 = g.face_b, g.edge_b
                else:
                    fid2, e2 = g.face_a, g.edge_a
                L = c.faces[fid].edges[e].length
                add(fid2, e2, L - t if g.reversed else t)

    faces = []
    edge_map = {}
    for fid, f in c.faces.items():
        corners = []
        witnesses = {}
        for e in range(f.n):
            edge = f.edges[e]
            ts = sorted(per_edge.get((fid, e), []))
            bounds = [0.0] + ts + [edge.length]
            subs = []
            for i in range(len(bounds) - 1):
                idx = len(corners)
                corners.append(edge.point_at(bounds[i]))
                if _needs_witness(f.geom, bounds[i + 1] - bounds[i]):
                    witnesses[idx] = edge.point_at(0.5 * (bounds[i] + bounds[i + 1]))
                subs.append((idx, bounds[i], bounds[i + 1]))
            edge_map[(fid, e)] = subs
        faces.append(_face_from_embedded(fid, f.kappa, corners, witnesses))

    gluings = []
    for g in c.gluings:
        subs_a = edge_map[(g.face_a, g.edge_a)]
        subs_b = edge_map[(g.face_b, g.edge_b)]
        if len(subs_a) != len(subs_b):
            raise ValidationError(f"gluing {g.id}: inconsistent subdivision")
        partner = list(reversed(subs_b)) if g.reversed else subs_b
        for k, ((ea, _, _), (eb, _, _)) in enumerate(zip(subs_a, partner)):
            gid = g.id if len(subs_a) == 1 else f"{g.id}.{k}"
            gluings.append(Gluing(g.face_a, ea, g.face_b, eb, g.reversed, gid))
    return SurfaceComplex(faces, gluings), edge_map


def _locate_on_edge(face, x, exclude=None):
    """(edge index, param) of an embedded point on the face boundary."""
    best = None
    for e in range(face.n):
        if exclude is not None and e in exclude:
            continue
        edge = face.edges[e]
        if abs(face.geom.side(edge.plane, x)) > 1e-7:
            continue
        t = edge.param_of(x)
        if -1e-7 <= t <= edge.length + 1e-7:
            score = abs(face.geom.side(edge.plane, x))
            if best is None or score < best[2]:
                best = (e, min(max(t, 0.0), edge.length), score)
    if best is None:
        raise ValidationError("curve endpoint does not lie on a face edge")
    return best[0], best[1]


def _chord_plane(g, S, E, W=None):
    if W is not None:
        v, _ = g.log(S, W)
    else:
        v, _ = g.log(S, E)
    return g.geodesic(S, v)


def cut_along(c: SurfaceComplex, curve: SurfaceCurve, allow_vertices=False) -> SurfaceComplex:
    """Cut the complex open along a simple curve.

    Transversal chords split their faces and stay unglued; segments
    running along existing edges remove the gluings they cover.  Curve
    endpoints or crossing points at cone vertices are rejected unless
    allow_vertices is set.
    """
    chords = []      # (fid, S, E, W) embedded, transversal
    unglue = []      # (fid, e, t0, t1) segment running along edge e
    splits = {}

    for seg in curve.segments:
        f = c.faces[seg.face]
        g, S, E, vdir, length = seg.geometry()
        W = g.from_chart(seg.mid.coords) if seg.mid is not None else None
        plane = _chord_plane(g, S, E, W)
        along = None
        for e in range(f.n):
            edge = f.edges[e]
            if abs(g.side(edge.plane, S)) < 1e-7 and abs(g.side(edge.plane, E)) < 1e-7:
                sign = g.side(plane, edge.point_at(0.5 * edge.length))
                t0, t1 = edge.param_of(S), edge.param_of(E)
                if abs(sign) < 1e-7 and -1e-7 <= min(t0, t1) and max(t0, t1) <= edge.length + 1e-7:
                    along = (e, min(t0, t1), max(t0, t1))
                    break
        if along is not None:
            e, t0, t1 = along
            unglue.append((seg.face, e, t0, t1))
            for t in (t0, t1):
                splits.setdefault((seg.face, e), []).append(t)
            continue
        for x in (S, E):
            near_vertex = any(g.dist(x, corner) < VERTEX_TOL for corner in f.corners)
            if near_vertex:
                if not allow_vertices:
                    raise ValidationError(
                        "curve passes through a vertex (set allow_vertices to consent)")
                continue
            e, t = _locate_on_edge(f, x)
            splits.setdefault((seg.face, e), []).append(t)
        chords.append((seg.face, S, E, W))

    refined, edge_map = subdivide_edges(c, splits)

    # simplicity within faces: chords of one face may not cross
    by_face = {}
    for fid, S, E, W in chords:
        by_face.setdefault(fid, []).append((S, E, W))
    for fid, lst in by_face.items():
        g = c.faces[fid].geom
        for i in range(len(lst)):
            for j in range(i + 1, len(lst)):
                p1 = _chord_plane(g, lst[i][0], lst[i][1], lst[i][2])
                p2 = _chord_plane(g, lst[j][0], lst[j][1], lst[j][2])
                if (g.side(p1, lst[j][0]) * g.side(p1, lst[j][1]) < -1e-12 and
                        g.side(p2, lst[i][0]) * g.side(p2, lst[i][1]) < -1e-12):
                    raise ValidationError("curve is not simple: crossing chords in one face")

    # split faces along chords (corner-to-corner in the refined complex)
    pieces = {fid: None for fid in refined.faces}
    new_faces = []
    face_edge_map = {}   # (refined fid, refined edge) -> (new fid, new edge)
    chord_edges = []     # (new fid, new edge) pairs to keep unglued

    def corner_index(f, x):
        g = f.geom
        ds = [g.dist(x, corner) for corner in f.corners]
        i = min(range(f.n), key=lambda k: ds[k])
        if ds[i] > 1e-6:
            raise ValidationError("chord endpoint missing from refined corners")
        return i

    for fid, f in refined.faces.items():
        lst = by_face.get(fid)
        if not lst:
            new_faces.append(f)
            for e in range(f.n):
                face_edge_map[(fid, e)] = (fid, e)
            continue
        # loops: cyclic corner index lists; parallel edge tags (original
        # refined edge index, or ('chord', k, side))
        loops = [[(i, ('orig', i)) for i in range(f.n)]]
        for k, (S, E, W) in enumerate(lst):
            ci, cj = corner_index(f, S), corner_index(f, E)
            if ci == cj:
                raise ValidationError("degenerate chord (both endpoints at one corner)")
            hit = None
            for li, loop in enumerate(loops):
                idxs = [it[0] for it in loop]
                if ci in idxs and cj in idxs:
                    hit = li
                    break
            if hit is None:
                raise ValidationError("chord endpoints not on one piece")
            loop = loops.pop(hit)
            idxs = [it[0] for it in loop]
            a, b = idxs.index(ci), idxs.index(cj)
            if a > b:
                a, b = b, a
                side0, side1 = 1, 0
            else:
                side0, side1 = 0, 1
            first = loop[a:b] + [(loop[b][0], ('chord', k, side0))]
            second = loop[b:] + loop[:a] + [(loop[a][0], ('chord', k, side1))]
            loops.extend([first, second])
        wit_by_edge = {}
        for e in range(f.n):
            if e in f.edge_witness:
                wit_by_edge[e] = f.geom.from_chart(f.edge_witness[e].coords)
        for pi, loop in enumerate(loops):
            pid = fid if len(loops) == 1 else f"{fid}.{pi}"
            corners = [f.corners[it[0]] for it in loop]
            wits = {}
            for e, (idx, tag) in enumerate(loop):
                if tag[0] == 'orig' and tag[1] in wit_by_edge:
                    wits[e] = wit_by_edge[tag[1]]
                elif tag[0] == 'chord':
                    k = tag[1]
                    W = lst[k][2]
                    if W is not None:
                        wits[e] = W
            nf = _face_from_embedded(pid, f.kappa, corners, wits)
            new_faces.append(nf)
            for e, (idx, tag) in enumerate(loop):
                if tag[0] == 'orig':
                    face_edge_map[(fid, tag[1])] = (pid, e)
                else:
                    chord_edges.append((pid, e))

    # remap surviving gluings; drop the ones covered by along-edge segments
    removed = set()
    for fid, e, t0, t1 in unglue:
        for (re, a, b) in edge_map[(fid, e)]:
            if a >= t0 - _SPLIT_TOL and b <= t1 + _SPLIT_TOL:
                removed.add((fid, re))
                g = refined.edge_gluing.get((fid, re))
                if g is not None:
                    removed.add((g.face_a, g.edge_a))
                    removed.add((g.face_b, g.edge_b))

    gluings = []
    for g in refined.gluings:
        if (g.face_a, g.edge_a) in removed:
            continue
        fa, ea = face_edge_map[(g.face_a, g.edge_a)]
        fb, eb = face_edge_map[(g.face_b, g.edge_b)]
        gluings.append(Gluing(fa, ea, fb, eb, g.reversed, g.id))
    return SurfaceComplex(new_faces, gluings)


def glue_boundary(cA: SurfaceComplex, arcsA, cB, arcsB) -> SurfaceComplex:
    """Glue boundary arcs of cA to boundary arcs of cB by arc length.

    Arcs are lists of directed boundary edge-sides (face id, edge,
    forward).  Arc k of A is identified with arc k of B, parameter t of
    A's listed traversal matching parameter t of B's.  cB may be cA (or
    None) for self-gluing.  Edge lists are subdivided as needed so
    breakpoints align.
    """
    self_glue = cB is None or cB is cA
    if self_glue:
        c = cA
    else:
        overlap = set(cA.faces) & set(cB.faces)
        if overlap:
            raise ValidationError(f"face id collision when merging: {sorted(overlap)}")
        c = SurfaceComplex(
            list(cA.faces.values()) + list(cB.faces.values()),
            list(cA.gluings) + list(cB.gluings),
        )
    if len(arcsA) != len(arcsB):
        raise ValidationError("arc count mismatch")

    def arc_layout(arc):
        out = []
        pos = 0.0
        for fid, e, fwd in arc:
            if (fid, e) in c.edge_gluing:
                raise ValidationError(f"edge ({fid},{e}) is already glued")
            L = c.faces[fid].edges[e].length
            out.append((fid, e, fwd, pos, pos + L))
            pos += L
        return out, pos

    plan = []
    splits = {}
    for arcA, arcB in zip(arcsA, arcsB):
        layA, LA = arc_layout(arcA)
        layB, LB = arc_layout(arcB)
        if abs(LA - LB) > GLUE_TOL * max(1.0, len(layA) + len(layB)):
            raise ValidationError(f"arc length mismatch: {LA} vs {LB}")
        raw = sorted(t for lay in (layA, layB) for (_, _, _, t0, t1) in lay
                     for t in (t0, t1))
        cuts = [raw[0]]
        for t in raw[1:]:
            if t - cuts[-1] > _SPLIT_TOL:
                cuts.append(t)
        for lay in (layA, layB):
            for fid, e, fwd, t0, t1 in lay:
                for t in cuts:
                    if t0 + _SPLIT_TOL < t < t1 - _SPLIT_TOL:
                        param = (t - t0) if fwd else (t1 - t)
                        splits.setdefault((fid, e), []).append(param)
        plan.append((layA, layB, cuts))

    refined, edge_map = subdivide_edges(c, splits)

    def sub_at(lay, t0, t1):
        """Refined (fid, edge, fwd) covering global arc interval [t0, t1]."""
        for fid, e, fwd, a, b in lay:
            if a - _SPLIT_TOL <= t0 and t1 <= b + _SPLIT_TOL:
                lo = (t0 - a) if fwd else (b - t1)
                hi = (t1 - a) if fwd else (b - t0)
                for re, u0, u1 in edge_map[(fid, e)]:
                    if abs(u0 - lo) < 1e-7 and abs(u1 - hi) < 1e-7:
                        return fid, re, fwd
        raise ValidationError("arc interval not matched by a refined edge")

    gluings = list(refined.gluings)
    gi = 0
    for layA, layB, cuts in plan:
        for t0, t1 in zip(cuts, cuts[1:]):
            fa, ea, fwa = sub_at(layA, t0, t1)
            fb, eb, fwb = sub_at(layB, t0, t1)
            gluings.append(Gluing(fa, ea, fb, eb, fwa != fwb, f"weld{gi}"))
            gi += 1
    out = SurfaceComplex(list(refined.faces.values()), gluings)
    rep = out.validate()
    if rep.alexandrov_violations:
        raise ValidationError(f"gluing violates the angle-sum bound: {rep.alexandrov_violations}")
    if rep.length_mismatches:
        raise ValidationError(f"glued arc lengths disagree: {rep.length_mismatches}")
    return out
