"""Finite metric proxies: graph approximation of intrinsic distances.

Each face is covered by a polar/rectangular point grid at spacing <= h;
glued edges and vertex orbits contribute shared nodes, so shortest graph
paths may cross gluings.  Within a face, nodes within geodesic radius
4h are linked with the exact model distance (equal to the intrinsic
distance when the chord stays inside the face), hence every graph
distance is an overestimate of the true intrinsic distance.  The
empirical inflation factor is reported on the sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import ValidationError, InfeasibleParameters
from .model import KAPPA_ZERO_TOL
from .surfcomplex import SurfaceComplex

LINK_RADIUS_FACTOR = 4.0


@dataclass
class FiniteMetricSample:
    points: list            # (face id, chart coords) per landmark
    dist: np.ndarray        # symmetric landmark distance matrix
    h: float
    note: str
    complex: SurfaceComplex = None
    extra_index: dict = None   # label -> landmark row for caller-supplied points

    def diameter(self):
        return float(self.dist.max()) if self.dist.size else 0.0

    def d(self, i, j):
        return float(self.dist[i, j])


def _pairwise_geodesic(g, P, i, j):
    if g.sign == 0:
        d = np.linalg.norm(P[i] - P[j], axis=1)
    elif g.sign > 0:
        d = np.arccos(np.clip((P[i] * P[j]).sum(axis=1), -1.0, 1.0)) * g.R
    else:
        m = (P[i, 0] * P[j, 0] + P[i, 1] * P[j, 1] - P[i, 2] * P[j, 2])
        d = np.arccosh(np.maximum(-m, 1.0)) * g.R
    return d


def _face_interior_grid(face, h):
    """Embedded grid points strictly inside the face at spacing <= h."""
    g = face.geom
    if g.sign == 0:
        C = np.array(face.corners)
        lo, hi = C.min(axis=0), C.max(axis=0)
        xs = np.arange(lo[0] + h / 2, hi[0], h)
        ys = np.arange(lo[1] + h / 2, hi[1], h)
        if not len(xs) or not len(ys):
            return np.zeros((0, 2))
        P = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
        return P[_inside(face, P)]
    # polar grid about corner 0
    c0 = np.array(face.corners[0])
    u, w = _tangent_basis(g, c0)
    rmax = _radial_extent(face, c0)
    rows = []
    nr = int(math.ceil(rmax / h))
    for jr in range(1, nr + 1):
        r = jr * h
        if g.sign > 0:
            if r >= math.pi * g.R - 1e-9:
                continue
            circ = 2.0 * math.pi * math.sin(r / g.R) * g.R
        else:
            circ = 2.0 * math.pi * math.sinh(r / g.R) * g.R
        nphi = max(4, int(math.ceil(circ / h)))
        phi = np.arange(nphi) * (2.0 * math.pi / nphi)
        tang = np.outer(np.cos(phi), u) + np.outer(np.sin(phi), w)
        th = r / g.R
        if g.sign > 0:
            P = math.cos(th) * c0 + math.sin(th) * tang
        else:
            P = math.cosh(th) * c0 + math.sinh(th) * tang
        rows.append(P[_inside(face, P)])
    return np.concatenate(rows) if rows else np.zeros((0, 3))


def _tangent_basis(g, c0):
    if g.sign > 0:
        u = np.cross([0.0, 0.0, 1.0], c0)
        if np.linalg.norm(u) < 1e-6:
            u = np.cross([1.0, 0.0, 0.0], c0)
        u /= np.linalg.norm(u)
        return u, np.cross(c0, u)
    # hyperboloid: Minkowski-project e1, then rotate by the left map
    v = np.array([1.0, 0.0, 0.0])
    m = v[0] * c0[0] + v[1] * c0[1] - v[2] * c0[2]
    u = v + m * c0
    n = math.sqrt(u[0] * u[0] + u[1] * u[1] - u[2] * u[2])
    u /= n
    w = np.array(g.left(tuple(c0), tuple(u)))
    return u, w


def _radial_extent(face, c0):
    g = face.geom
    r = 0.0
    for corner in face.corners:
        r = max(r, g.dist(tuple(c0), corner))
    for e in face.edges:
        if e.W is not None:
            r = max(r, g.dist(tuple(c0), e.W) + 0.5 * e.length)
    if g.sign > 0:
        r = min(r, math.pi * g.R)
    return r


def _is_convex(face):
    return all(face.interior_angle(i) <= math.pi + 1e-9 for i in range(face.n))


def _inside(face, P, margin=1e-9):
    g = face.geom
    sides = []
    for e in face.edges:
        n = np.asarray(e.plane)
        if g.sign == 0:
            s = P @ n[:2] - n[2]
        elif g.sign > 0:
            s = P @ n
        else:
            s = P[:, 0] * n[0] + P[:, 1] * n[1] - P[:, 2] * n[2]
        sides.append(s)
    S = np.stack(sides)
    if _is_convex(face):
        return (S > margin).all(axis=0)
    if face.n == 2:
        # reflex digon: complement of the opposite lune
        return (S > margin).any(axis=0)
    raise ValidationError("sampling supports convex faces and digons only")


def _chord_inside(face, P, i, j):
    """Keep pairs whose connecting geodesic stays inside a reflex face."""
    g = face.geom
    ok = np.ones(len(i), dtype=bool)
    for t in (0.25, 0.5, 0.75):
        if g.sign > 0:
            dots = np.clip((P[i] * P[j]).sum(axis=1), -1.0, 1.0)
            th = np.arccos(dots)
            sth = np.sin(th)
            good = sth > 1e-12
            M = np.where(good[:, None],
                         (np.sin((1 - t) * th) / np.where(good, sth, 1.0))[:, None] * P[i]
                         + (np.sin(t * th) / np.where(good, sth, 1.0))[:, None] * P[j],
                         P[i])
            nrm = np.linalg.norm(M, axis=1, keepdims=True)
            M = M / np.maximum(nrm, 1e-30)
        else:
            M = (1 - t) * P[i] + t * P[j]
        ok &= _inside(face, M, margin=-1e-9)
    return ok


def build_graph_sample(c: SurfaceComplex, h: float, extra=None, max_landmarks=64):
    """Node/edge construction plus landmark Dijkstra; see intrinsic_sample."""
    min_edge = min(e.length for f in c.faces.values() for e in f.edges)
    if h > min_edge:
        raise InfeasibleParameters(f"mesh h={h} exceeds the smallest edge length {min_edge}")

    presence = {fid: ([], []) for fid in c.faces}   # ids, coords
    node_face = []                                   # primary (fid, embedded)
    nid = 0

    def add(fid, x):
        nonlocal nid
        presence[fid][0].append(nid)
        presence[fid][1].append(x)
        node_face.append((fid, x))
        nid += 1
        return nid - 1

    def add_presence(node, fid, x):
        presence[fid][0].append(node)
        presence[fid][1].append(x)

    vertex_nodes = []
    for orb in c.vertex_orbits:
        fid0, c0 = orb[0]
        node = add(fid0, c.faces[fid0].corners[c0])
        vertex_nodes.append(node)
        for fid, cc in orb[1:]:
            add_presence(node, fid, c.faces[fid].corners[cc])

    for g in c.gluings:
        eA = c.faces[g.face_a].edges[g.edge_a]
        eB = c.faces[g.face_b].edges[g.edge_b]
        m = max(1, int(math.ceil(eA.length / h)))
        for j in range(1, m):
            t = j * eA.length / m
            node = add(g.face_a, eA.point_at(t))
            t2 = eB.length - t if g.reversed else t
            add_presence(node, g.face_b, eB.point_at(t2))
    for fid, e in c.boundary_edges:
        edge = c.faces[fid].edges[e]
        m = max(1, int(math.ceil(edge.length / h)))
        for j in range(1, m):
            add(fid, edge.point_at(j * edge.length / m))

    interior_start = nid
    for fid in sorted(c.faces):
        P = _face_interior_grid(c.faces[fid], h)
        for row in P:
            add(fid, tuple(row))

    extra_nodes = {}
    if extra:
        for label, (fid, coords) in extra.items():
            g = c.faces[fid].geom
            extra_nodes[label] = add(fid, g.from_chart(tuple(coords)))

    rows, cols, vals = [], [], []
    radius = LINK_RADIUS_FACTOR * h
    for fid in sorted(c.faces):
        f = c.faces[fid]
        ids, coords = presence[fid]
        if len(ids) < 2:
            continue
        P = np.asarray(coords, dtype=float)
        ids = np.asarray(ids)
        g = f.geom
        if g.sign == 0:
            qr = radius
        elif g.sign > 0:
            qr = 2.0 * math.sin(min(radius / (2.0 * g.R), math.pi / 2)) + 1e-12
        else:
            rmax = _radial_extent(f, np.array(f.corners[0]))
            qr = 2.0 * math.sinh(radius / g.R) * math.cosh(rmax / g.R) + 1e-12
        pairs = cKDTree(P).query_pairs(qr, output_type="ndarray")
        if not len(pairs):
            continue
        i, j = pairs[:, 0], pairs[:, 1]
        d = _pairwise_geodesic(g, P, i, j)
        keep = d <= radius + 1e-12
        i, j, d = i[keep], j[keep], d[keep]
        if not _is_convex(f) and len(i):
            keep = _chord_inside(f, P, i, j)
            i, j, d = i[keep], j[keep], d[keep]
        rows.append(ids[i]); cols.append(ids[j]); vals.append(d)

    if not rows:
        raise ValidationError("sampling produced no links; h too coarse?")
    I = np.concatenate(rows); J = np.concatenate(cols); W = np.concatenate(vals)
    graph = coo_matrix(
        (np.concatenate([W, W]), (np.concatenate([I, J]), np.concatenate([J, I]))),
        shape=(nid, nid)).tocsr()

    landmarks = list(vertex_nodes) + list(extra_nodes.values())
    budget = max(0, max_landmarks - len(landmarks))
    pool = list(range(interior_start, nid - len(extra_nodes)))
    if budget and pool:
        stride = max(1, len(pool) // budget)
        landmarks += pool[::stride][:budget]
    landmarks = sorted(set(landmarks))

    D = dijkstra(graph, directed=False, indices=landmarks)
    M = D[:, landmarks]
    M = 0.5 * (M + M.T)
    np.fill_diagonal(M, 0.0)
    lm_index = {n: k for k, n in enumerate(landmarks)}
    return graph, node_face, landmarks, lm_index, M, extra_nodes


def intrinsic_sample(c: SurfaceComplex, h: float, extra=None, max_landmarks=64):
    """Landmark distance sample of the complex at mesh parameter h.

    extra: optional {label: (face id, chart coords)} points that are
    promoted to landmarks; their rows are exposed via extra_index.
    Distances are graph shortest paths, always >= the true intrinsic
    distance; the note records the empirically calibrated inflation.
    """
    graph, node_face, landmarks, lm_index, M, extra_nodes = build_graph_sample(
        c, h, extra, max_landmarks)
    points = []
    for n in landmarks:
        fid, x = node_face[n]
        points.append((fid, c.faces[fid].geom.to_chart(x)))

    # empirical inflation: same-face landmark pairs with an in-face chord
    infl = 1.0
    for a in range(len(landmarks)):
        fa, xa = node_face[landmarks[a]]
        for b in range(a + 1, len(landmarks)):
            fb, xb = node_face[landmarks[b]]
            if fa != fb:
                continue
            g = c.faces[fa].geom
            true = g.dist(xa, xb)
            if true > 10 * h and M[a, b] < np.inf:
                infl = max(infl, min(M[a, b] / true, 2.0)) if M[a, b] >= true - 1e-12 else infl
    note = f"graph overestimate model; h={h}; calibrated inflation <= {infl:.5f}"
    ext = {label: lm_index[n] for label, n in extra_nodes.items()}
    return FiniteMetricSample(points, M, h, note, c, ext)
