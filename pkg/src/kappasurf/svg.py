"""Deterministic SVG chart drawings of a surface complex.

Each face gets a cell in a square grid.  Curved faces are flattened by
an azimuthal-equidistant projection about the face centroid (distances
along rays from the centroid are exact), flat faces use their chart
directly.  Glued edges carry the gluing id at their midpoint; marked
and caller-supplied curves are overlaid per face.
"""

from __future__ import annotations

import math

import numpy as np

CELL = 220.0
MARGIN = 18.0
EDGE_SAMPLES = 24
CURVE_SPACING = 0.03

_CURVE_COLORS = ("#c02020", "#2060c0", "#208040", "#a06000", "#802080",
                 "#107070", "#b03060", "#506030")


def _fmt(x):
    return f"{x:.6g}"


def _centroid(g, corners):
    m = np.mean(np.asarray(corners, dtype=float), axis=0)
    if g.sign == 0:
        return tuple(m)
    if g.sign > 0:
        return tuple(m / np.linalg.norm(m))
    q = m[2] ** 2 - m[0] ** 2 - m[1] ** 2
    q = max(q, 1e-12)
    return tuple(m / math.sqrt(q))


class _FaceChart:
    """Azimuthal-equidistant flattening of one face about its centroid."""

    def __init__(self, face):
        g = face.geom
        self.g = g
        self.c = _centroid(g, face.corners)
        if g.sign == 0:
            self.b1, self.b2 = (1.0, 0.0), (0.0, 1.0)
        else:
            u, _ = g.log(self.c, face.corners[0])
            self.b1 = g.normalize_t(self.c, u)
            self.b2 = g.left(self.c, self.b1)

    def project(self, x):
        g = self.g
        if g.sign == 0:
            return x[0] - self.c[0], x[1] - self.c[1]
        try:
            u, d = g.log(self.c, x)
        except Exception:
            return 0.0, 0.0
        return d * g.dot_t(u, self.b1), d * g.dot_t(u, self.b2)


def _face_paths(face, chart):
    paths = []
    for e in face.edges:
        n = EDGE_SAMPLES
        pts = [chart.project(e.point_at(e.length * i / n)) for i in range(n + 1)]
        paths.append(pts)
    return paths


def _curve_paths(face, chart, curve, spacing):
    out = []
    for s in curve.segments:
        if s.face != face.id:
            continue
        g, S, E, v, d = s.geometry()
        n = max(2, int(math.ceil(d / spacing)))
        out.append([chart.project(g.exp(S, v, d * i / n)) for i in range(n + 1)])
    return out


def render_svg(c, curves=None) -> str:
    """SVG document string; identical input yields identical bytes."""
    named = dict(c.marked_curves or {})
    if curves:
        if isinstance(curves, dict):
            named.update(curves)
        else:
            for k, cur in enumerate(curves):
                named[f"curve{k}"] = cur
    fids = sorted(c.faces)
    cols = max(1, int(math.ceil(math.sqrt(len(fids)))))
    rows = max(1, int(math.ceil(len(fids) / cols)))
    W, H = cols * CELL, rows * CELL

    glue_label = {}
    for g in c.gluings:
        glue_label[(g.face_a, g.edge_a)] = g.id
        glue_label[(g.face_b, g.edge_b)] = g.id

    body = []
    color = {name: _CURVE_COLORS[i % len(_CURVE_COLORS)]
             for i, name in enumerate(sorted(named))}
    for idx, fid in enumerate(fids):
        face = c.faces[fid]
        chart = _FaceChart(face)
        paths = _face_paths(face, chart)
        cpaths = {name: _curve_paths(face, chart, cur, CURVE_SPACING)
                  for name, cur in named.items()}
        pts = [p for path in paths for p in path]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
        scale = (CELL - 2 * MARGIN) / span
        cx, cy = 0.5 * (max(xs) + min(xs)), 0.5 * (max(ys) + min(ys))
        ox = (idx % cols) * CELL + 0.5 * CELL
        oy = (idx // cols) * CELL + 0.5 * CELL

        def pix(p):
            return (ox + scale * (p[0] - cx), oy - scale * (p[1] - cy))

        body.append(f'<g id="face-{fid}">')
        for e, path in enumerate(paths):
            d = "M " + " L ".join(f"{_fmt(px)} {_fmt(py)}"
                                  for px, py in map(pix, path))
            glued = (fid, e) in glue_label
            stroke = "#303030" if glued else "#909090"
            dash = "" if glued else ' stroke-dasharray="4 3"'
            body.append(f'<path d="{d}" fill="none" stroke="{stroke}" '
                        f'stroke-width="1.2"{dash}/>')
            mx, my = pix(path[len(path) // 2])
            label = glue_label.get((fid, e), f"e{e}")
            body.append(f'<text x="{_fmt(mx)}" y="{_fmt(my)}" font-size="9" '
                        f'fill="#404040">{label}</text>')
        for name in sorted(cpaths):
            for path in cpaths[name]:
                d = "M " + " L ".join(f"{_fmt(px)} {_fmt(py)}"
                                      for px, py in map(pix, path))
                body.append(f'<path d="{d}" fill="none" stroke="{color[name]}" '
                            f'stroke-width="1.6"/>')
        tx, ty = ox - 0.5 * CELL + 6, oy - 0.5 * CELL + 14
        body.append(f'<text x="{_fmt(tx)}" y="{_fmt(ty)}" font-size="11" '
                    f'fill="#000000">{fid} (kappa={_fmt(face.kappa)})</text>')
        body.append("</g>")

    legend = []
    for i, name in enumerate(sorted(named)):
        legend.append(f'<text x="6" y="{_fmt(H + 14 + 12 * i)}" font-size="10" '
                      f'fill="{color[name]}">{name}</text>')
    Hfull = H + (14 + 12 * len(named) if named else 0)
    return ("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(W)}" '
            f'height="{_fmt(Hfull)}" viewBox="0 0 {_fmt(W)} {_fmt(Hfull)}">\n'
            + "\n".join(body + legend) + "\n</svg>\n")
