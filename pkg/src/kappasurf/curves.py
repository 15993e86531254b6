"""Piecewise-geodesic curves on a surface complex.

A SurfaceCurve is a chain of in-face geodesic chords.  Consecutive
segments are linked through the gluing recorded in the crossing word.
Each segment optionally carries a midpoint witness so that chords longer
than the injectivity radius of a positive-curvature face stay
well-defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import ModelPoint, geom


@dataclass(frozen=True)
class CurveSegment:
    face: str
    entry: ModelPoint
    exit: ModelPoint
    mid: ModelPoint | None = None

    def geometry(self):
        g = geom(self.entry.kappa)
        S = g.from_chart(self.entry.coords)
        E = g.from_chart(self.exit.coords)
        if self.mid is not None:
            W = g.from_chart(self.mid.coords)
            v1, d1 = g.log(S, W)
            _, d2 = g.log(W, E)
            return g, S, E, v1, d1 + d2
        v, d = g.log(S, E)
        return g, S, E, v, d


@dataclass
class SurfaceCurve:
    segments: list
    closed: bool
    crossing_word: tuple = ()
    halt_reason: str = "ok"
    simple: bool | None = None
    meta: dict = field(default_factory=dict)

    @property
    def length(self):
        return sum(s.geometry()[4] for s in self.segments)

    def seg_lengths(self):
        return [s.geometry()[4] for s in self.segments]

    def sample_points(self, spacing):
        """(face id, embedded point) samples at roughly the given spacing."""
        out = []
        for s in self.segments:
            g, S, E, v, d = s.geometry()
            k = max(1, int(math.ceil(d / spacing)))
            for i in range(k + 1):
                out.append((s.face, g.exp(S, v, d * i / k)))
        return out


def curve_hausdorff(c, a: SurfaceCurve, b: SurfaceCurve, spacing=0.02):
    """Symmetric Hausdorff distance between two curves, measured with
    embedded chord distances between same-face samples (an upper proxy
    good enough for dedup and drift reporting)."""
    pa = a.sample_points(spacing)
    pb = b.sample_points(spacing)
    big = math.inf

    def directed(ps, qs):
        worst = 0.0
        for fid, x in ps:
            best = big
            for fid2, y in qs:
                if fid2 != fid:
                    continue
                g = c.faces[fid].geom
                best = min(best, g.dist(x, y))
            worst = max(worst, best)
        return worst

    d1 = directed(pa, pb)
    d2 = directed(pb, pa)
    return max(d1, d2)
