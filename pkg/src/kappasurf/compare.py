"""Finite-sample metric comparison.

Samples produced by intrinsic_sample are compared as finite metric
spaces: directed/symmetric Hausdorff distances inside a common ambient
sample, distortion of explicit point correspondences, and certified
Gromov-Hausdorff lower bounds (diameter gap and eccentricity-range
mismatch; true GH distances are not computed).  convergence_report
drives a parametrized constructor down a ladder and checks that the
natural chart-transport map distorts less and less.

All comparisons are between the samples, not the surfaces; the samples
carry their own mesh parameter and inflation note, and that tolerance
is the caller's to add.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .sampling import FiniteMetricSample, intrinsic_sample


@dataclass(frozen=True)
class CorrespondenceSample:
    """A pairing between landmarks of two finite metric samples.

    pairs[k] = (i, j) matches landmark i of sample_a with landmark j of
    sample_b; labels name the pairs for reporting.
    """
    sample_a: FiniteMetricSample
    sample_b: FiniteMetricSample
    pairs: tuple
    labels: tuple = ()

    def table(self):
        """Rows (label, i, j, d_a, d_b) for every pair of pairs."""
        rows = []
        for k, (i, j) in enumerate(self.pairs):
            for l in range(k + 1, len(self.pairs)):
                i2, j2 = self.pairs[l]
                rows.append((k, l, self.sample_a.d(i, i2), self.sample_b.d(j, j2)))
        return rows


def hausdorff(A, B, ambient: FiniteMetricSample) -> float:
    """Pompeiu-Hausdorff distance between two landmark index sets."""
    A = list(A)
    B = list(B)
    if not A or not B:
        raise ValidationError("hausdorff needs two nonempty index sets")
    D = ambient.dist[np.ix_(A, B)]
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def distortion(corr: CorrespondenceSample) -> float:
    """sup over sampled pairs of |d(x, x') - d(fx, fx')|."""
    if not corr.pairs:
        raise ValidationError("empty correspondence")
    ia = np.array([p[0] for p in corr.pairs])
    ib = np.array([p[1] for p in corr.pairs])
    Da = corr.sample_a.dist[np.ix_(ia, ia)]
    Db = corr.sample_b.dist[np.ix_(ib, ib)]
    return float(np.abs(Da - Db).max())


def diameter(A: FiniteMetricSample) -> float:
    if not A.dist.size:
        raise ValidationError("empty sample")
    return A.diameter()


def _ecc_range_gap(da, db):
    # Hausdorff distance in R between the two eccentricity value sets;
    # any correspondence matches each eccentricity within its distortion.
    ea = np.sort(da.max(axis=1))
    eb = np.sort(db.max(axis=1))
    gap = 0.0
    for v in ea:
        gap = max(gap, float(np.abs(eb - v).min()))
    for v in eb:
        gap = max(gap, float(np.abs(ea - v).min()))
    return gap


def gh_lower_bound(A: FiniteMetricSample, B: FiniteMetricSample) -> float:
    """Certified lower bound on the GH distance between the two samples.

    Maximum of the diameter gap and the eccentricity-range mismatch,
    halved; both survive any correspondence, so the bound never exceeds
    the true GH distance of the samples (sampling error excluded).
    """
    if not A.dist.size or not B.dist.size:
        return 0.0
    bound = abs(A.diameter() - B.diameter())
    bound = max(bound, _ecc_range_gap(A.dist, B.dist))
    return 0.5 * bound


def _centroid(g, corners):
    m = np.mean(np.asarray(corners, dtype=float), axis=0)
    if g.sign == 0:
        return tuple(m)
    if g.sign > 0:
        return tuple(m / np.linalg.norm(m))
    q = m[2] ** 2 - m[0] ** 2 - m[1] ** 2
    if q <= 0:
        return None
    return tuple(m / math.sqrt(q))


def _face_probes(face, per_face, margin):
    """Chart coordinates of a few well-interior points of the face."""
    from .perturb import _strictly_inside
    g = face.geom
    cen = _centroid(g, face.corners)
    if cen is None:
        return []
    pts = [cen]
    for c in face.corners:
        u, n = g.log(cen, c)
        if n > 4 * margin:
            pts.append(g.exp(cen, u, 0.5 * n))
    out = []
    for x in pts:
        if _strictly_inside(face, x, margin):
            out.append(g.to_chart(x))
        if len(out) >= per_face:
            break
    return out


def shared_probes(ref, other, per_face=3, margin=1e-3):
    """Probe points valid in both complexes under the identity chart map.

    Probe chart coordinates are generated on each reference face and
    transported to the other complex's face of the same id, or to the
    sub-face ("id.k" after a cut) whose chart still contains them;
    curvature may differ, as under metric scaling.  Returns one
    {label: (face id, chart coords)} dict per complex.
    """
    from .perturb import _strictly_inside
    extra_a, extra_b = {}, {}
    for fid in sorted(ref.faces):
        pref = fid + "."
        cands = [i for i in other.faces if i == fid or i.startswith(pref)]
        if not cands:
            continue
        for k, ch in enumerate(_face_probes(ref.faces[fid], per_face, margin)):
            hosts = []
            for i in cands:
                fb = other.faces[i]
                try:
                    xb = fb.geom.from_chart(ch)
                except (ValueError, ValidationError):
                    continue
                if _strictly_inside(fb, xb, margin):
                    hosts.append(i)
            if len(hosts) == 1:
                extra_a[f"{fid}#{k}"] = (fid, ch)
                extra_b[f"{fid}#{k}"] = (hosts[0], ch)
    return extra_a, extra_b


def natural_correspondence(ref, other, h, per_face=3, max_landmarks=64):
    """Correspondence between two complexes via shared face charts."""
    extra_a, extra_b = shared_probes(ref, other, per_face)
    if len(extra_a) < 2:
        raise ValidationError("no shared faces to transport probes through")
    sa = intrinsic_sample(ref, h, extra=extra_a, max_landmarks=max_landmarks)
    sb = intrinsic_sample(other, h, extra=extra_b, max_landmarks=max_landmarks)
    labels = sorted(extra_a)
    pairs = tuple((sa.extra_index[l], sb.extra_index[l]) for l in labels)
    return CorrespondenceSample(sa, sb, pairs, tuple(labels))


@dataclass
class ConvergenceRow:
    parameter: float
    distortion: float
    gh_bound: float
    pairs: int


@dataclass
class ConvergenceReport:
    rows: list
    h: float
    passed: bool = field(default=False)

    def __iter__(self):
        return iter(self.rows)


def convergence_report(family, ladder, reference, h=0.15,
                       per_face=3, max_landmarks=64) -> ConvergenceReport:
    """Distortion of the natural map along a parameter ladder.

    family(parameter) must return a complex sharing face ids (and
    charts) with the reference away from the modified region; passes
    iff the natural-map distortion is monotone non-increasing.
    """
    ladder = list(ladder)
    if len(ladder) < 3:
        raise ValidationError("a convergence ladder needs at least 3 rungs")
    built = [(par, family(par)) for par in ladder]
    for _, c in built + [(None, reference)]:
        shortest = min(e.length for f in c.faces.values() for e in f.edges)
        h = min(h, 0.8 * shortest)
    rows = []
    for par, c in built:
        corr = natural_correspondence(reference, c, h, per_face, max_landmarks)
        rows.append(ConvergenceRow(par, distortion(corr),
                                   gh_lower_bound(corr.sample_a, corr.sample_b),
                                   len(corr.pairs)))
    ok = all(rows[i + 1].distortion <= rows[i].distortion + 1e-12
             for i in range(len(rows) - 1))
    return ConvergenceReport(rows, h, ok)
