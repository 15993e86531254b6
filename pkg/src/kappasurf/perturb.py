"""Curvature-moving surgeries and their Taylor-expansion audits.

ldlc_perturb rescales a closed kappa = 1 complex and excises, on each
target simple closed geodesic, a tiny isosceles triangle that it
replaces by a unit-curvature triangle with the same side lengths.  The
replacement turns the chosen points into cone vertices, so none of the
target geodesics survives.  trig_expansion_report / order_estimate
evaluate the exact spherical-trigonometry quantities behind that
construction and compare them against their printed cubic truncations.

lad_add_boundary_angles is the companion disk surgery: it moves interior
cone curvature to two boundary points (a digon excision followed by a
quadrilateral insertion at each), leaving a boundary with exactly two
angles below pi that halve its length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .errors import InfeasibleParameters, NonConvergence, ValidationError
from .model import (ModelPoint, geom, solve_sss, solve_sas, solve_asa,
                    KAPPA_ZERO_TOL)
from .surfcomplex import (Face, Gluing, SurfaceComplex, face_from_embedded,
                          euler_and_orientability, scale_metric,
                          boundary_angle, gauss_bonnet_audit)
from .surgery import subdivide_edges, cut_along, glue_boundary, _locate_on_edge
from .curves import SurfaceCurve, CurveSegment, curve_hausdorff
from .engine import (trace, close_up_check, almost_geodesic_check,
                     enumerate_simple_closed, _ray_param, _geo_tangent_at,
                     _ang_ccw, _mp)


# ---------------------------------------------------------------------------
# exact spherical trigonometry vs printed expansions


CLAIMED_ORDERS = {"gamma": 4.0, "tan_phi": 4.0, "cos_alpha": 4.0,
                  "cos_beta": 4.0, "sin_rho_d": 1.0}

_RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True)
class TrigRow:
    name: str
    value: float
    expansion: float
    residual: float


@dataclass(frozen=True)
class TrigReport:
    epsilon: float
    lambda_ratio: float
    rows: dict

    def residual(self, name):
        return self.rows[name].residual


def _clamp1(x):
    return max(-1.0, min(1.0, x))


def trig_expansion_report(eps: float, lambda_ratio: float) -> TrigReport:
    """Exact values and cubic-truncation residuals of the five quantities.

    gamma is the half-angle at the apex of the replacement triangle,
    phi the crossing angle of a probe geodesic with a triangle leg,
    alpha/beta the derived self-intersection and return-crossing angles,
    and sin(rho*d) the normalized return distance.
    """
    if not 0.0 < eps <= 0.05:
        raise InfeasibleParameters("eps must lie in (0, 0.05]")
    if not 0.0 < lambda_ratio <= 1.0:
        raise InfeasibleParameters("lambda_ratio must lie in (0, 1]")
    # the residuals sit as low as 1e-17 at special lambda_ratio values,
    # far under double-precision cancellation noise; evaluate in
    # arbitrary precision so the 1e-14 floor test stays meaningful
    import mpmath as mp
    with mp.workdps(60):
        eps_m = mp.mpf(repr(eps))
        lam = mp.mpf(repr(lambda_ratio))
        rho = 1 + eps_m
        q = mp.pi / 4
        gamma = mp.asin(mp.sin((1 / rho) * mp.asin(mp.sin(q) * mp.sin(rho * eps_m)))
                        / mp.sin(eps_m))
        tan_phi = 1 / (mp.tan(gamma) * mp.cos(lam * eps_m))
        phi = mp.atan(tan_phi)
        cos_alpha = (-mp.cos(phi) * mp.cos(q)
                     + mp.sin(phi) * mp.sin(q) * mp.cos(rho * lam * eps_m))
        cos_beta = (-mp.cos(mp.pi - phi) * mp.cos(q)
                    + mp.sin(mp.pi - phi) * mp.sin(q) * mp.cos(rho * lam * eps_m))
        beta = mp.acos(cos_beta)
        sin_rho_d = mp.sin(rho * lam * eps_m) / mp.sin(beta) * mp.sin(phi)
        vals = {
            "gamma": (gamma, q - eps_m ** 3 / 6),
            "tan_phi": (tan_phi, 1 + lam * lam * eps_m * eps_m / 2 + eps_m ** 3 / 3),
            "cos_alpha": (cos_alpha, (mp.mpf(1) / 6 - lam * lam / 2) * eps_m ** 3),
            "cos_beta": (cos_beta, 1 - lam * lam * (eps_m ** 2 / 4 + eps_m ** 3 / 2)),
            "sin_rho_d": (sin_rho_d, mp.mpf(1)),
        }
        rows = {k: TrigRow(k, float(v), float(e), float(abs(v - e)))
                for k, (v, e) in vals.items()}
    return TrigReport(eps, lambda_ratio, rows)


def trig_ladder(eps0: float, lambda_ratio: float, rungs: int = 4):
    """Reports over the halving ladder eps0, eps0/2, ..."""
    return [trig_expansion_report(eps0 / 2 ** k, lambda_ratio)
            for k in range(rungs)]


def order_estimate(reports) -> dict:
    """Per-quantity convergence order from residual ratios on a ladder.

    Rungs whose residual sits below the floating-point floor are
    discarded; if fewer than two usable rungs remain the estimate is
    +inf (the residual vanished faster than measurable).
    """
    reports = list(reports)
    if len(reports) < 3:
        raise InfeasibleParameters("order estimate needs at least 3 rungs")
    out = {}
    for name in reports[0].rows:
        ests = []
        for r0, r1 in zip(reports, reports[1:]):
            a = r0.rows[name].residual
            b = r1.rows[name].residual
            if a < _RESIDUAL_FLOOR or b < _RESIDUAL_FLOOR:
                continue
            ests.append(math.log(a / b) / math.log(r0.epsilon / r1.epsilon))
        out[name] = sum(ests) / len(ests) if ests else math.inf
    return out


def orders_pass(orders: dict, slack: float = 0.3) -> bool:
    return all(orders[k] >= CLAIMED_ORDERS[k] - slack for k in CLAIMED_ORDERS)


# ---------------------------------------------------------------------------
# the geodesic-killing surgery


@dataclass
class PerturbationTrace:
    """Everything recorded about one triangle replacement.

    Marked points live in the chart of the host face (curvature
    rho**2); z/z'/u/v/v' describe the exact model-space probe geodesic
    entering the replaced triangle at parameter lambda_ratio.
    """
    epsilon: float
    rho: float
    lambda_ratio: float
    x: ModelPoint
    y: ModelPoint
    y_prime: ModelPoint
    z: ModelPoint
    z_prime: ModelPoint
    u: ModelPoint
    v: ModelPoint
    v_prime: ModelPoint
    gamma: float
    phi: float
    alpha: float
    beta: float
    d_vx: float
    apex_angle_old: float
    apex_angle_new: float
    host_face: str
    new_faces: tuple
    target_length: float
    closure_gap: float = math.inf
    closure_halt: str = ""
    meta: dict = field(default_factory=dict)


def _curve_nodes(curve):
    """(segment in, segment out) pairs at every inter-segment node."""
    segs = curve.segments
    return [(segs[i], segs[(i + 1) % len(segs)]) for i in range(len(segs))]


def _node_frames(s_in, s_out):
    """Candidate (face id, point, unit tangent) frames at a curve node."""
    frames = []
    g, S, E, v, d = s_out.geometry()
    frames.append((s_out.face, S, g.normalize_t(S, v), g))
    g, S, E, v, d = s_in.geometry()
    frames.append((s_in.face, E, g.normalize_t(E, _geo_tangent_at(g, S, v, d)), g))
    return frames


def _strictly_inside(face, x, margin):
    g = face.geom
    return all(g.side(e.plane, x) >= margin for e in face.edges)


def _ray_exit(face, x, d, t_min):
    """(t, edge, s, point) of the first clean boundary exit of a ray."""
    g = face.geom
    pl = g.geodesic(x, d)
    best = None
    for e, edge in enumerate(face.edges):
        for y in g.intersections(pl, edge.plane):
            t = _ray_param(g, x, d, y)
            if not t > t_min:
                continue
            s = edge.param_of(y)
            if 1e-6 <= s <= edge.length - 1e-6:
                if best is None or t < best[0]:
                    best = (t, e, s, y)
    return best


def _candidate(work, fid, x, u, side, eps, other_points):
    """Validate one (face, node, side) apex choice; return a scored plan."""
    face = work.faces[fid]
    g = face.geom
    n = g.left(x, u)
    if side < 0:
        n = tuple(-w for w in n)
    probe = g.exp(x, n, 0.25 * eps)
    if not face.contains(probe, tol=0.0):
        return None
    dp = g.rotate(x, n, math.pi / 4.0)
    dm = g.rotate(x, n, -math.pi / 4.0)
    yp = g.exp(x, dp, eps)
    ym = g.exp(x, dm, eps)
    margin = 0.2 * eps
    for pt in (yp, ym, g.exp(x, n, eps / math.sqrt(2.0))):
        if not _strictly_inside(face, pt, margin):
            return None
    try:
        e_x, t_x = _locate_on_edge(face, x)
    except ValidationError:
        return None
    Lx = face.edges[e_x].length
    edge_margin = max(2.5 * eps, 1e-3 * Lx)
    if not edge_margin <= t_x <= Lx - edge_margin:
        return None
    hit_p = _ray_exit(face, x, dp, 2.0 * eps)
    hit_m = _ray_exit(face, x, dm, 2.0 * eps)
    if hit_p is None or hit_m is None:
        return None
    sep = math.inf
    for fid2, pt in other_points:
        if fid2 == fid:
            sep = min(sep, g.dist(x, pt))
    if sep < 4.0 * eps:
        return None
    score = min(sep, 10.0) + 1e-3 * min(hit_p[0], hit_m[0])
    return {"fid": fid, "x": x, "u": u, "n": n, "dp": dp, "dm": dm,
            "yp": yp, "ym": ym, "e_x": e_x, "t_x": t_x,
            "hit_p": hit_p, "hit_m": hit_m, "score": score}


def _choose_apex(work, target, eps, others):
    """Grid-maximized apex choice along the target's edge crossings."""
    other_points = []
    for cur in others:
        other_points.extend(cur.sample_points(0.05))
    best = None
    for s_in, s_out in _curve_nodes(target):
        for fid, x, u, g in _node_frames(s_in, s_out):
            if fid not in work.faces:
                continue
            for side in (1, -1):
                cand = _candidate(work, fid, x, u, side, eps, other_points)
                if cand is not None and (best is None or cand["score"] > best["score"]):
                    best = cand
    if best is None:
        raise InfeasibleParameters(
            "no admissible triangle apex on the target: eps too large for "
            "the local faces or every crossing collides with another geodesic")
    return best


def _excise_and_replace(work, plan, eps, tag):
    """Split the host face around the isosceles triangle and swap it out.

    The face is divided by the two leg rays into three ring pieces (two
    side sectors meeting the boundary point x and the middle piece that
    carries the triangle base) plus the triangle itself, which is then
    rebuilt in curvature 1 with identical side lengths.
    """
    fid = plan["fid"]
    face = work.faces[fid]
    g = face.geom
    x = plan["x"]
    splits = {(fid, plan["e_x"]): [plan["t_x"]]}
    for hit in (plan["hit_p"], plan["hit_m"]):
        splits.setdefault((fid, hit[1]), []).append(hit[2])
    refined, _ = subdivide_edges(work, splits)
    f2 = refined.faces[fid]

    def corner_of(pt):
        for i, cx in enumerate(f2.corners):
            if g.dist(cx, pt) < 1e-7:
                return i
        raise ValidationError("subdivision did not produce the expected corner")

    ix = corner_of(x)
    iP = corner_of(plan["hit_p"][3])
    iM = corner_of(plan["hit_m"][3])
    nn = f2.n
    seq = [(ix + k) % nn for k in range(nn)]
    posP, posM = seq.index(iP), seq.index(iM)
    if posP < posM:
        w1, E1, p1 = plan["yp"], plan["hit_p"][3], posP
        w2, E2, p2 = plan["ym"], plan["hit_m"][3], posM
    else:
        w1, E1, p1 = plan["ym"], plan["hit_m"][3], posM
        w2, E2, p2 = plan["yp"], plan["hit_p"][3], posP
    C = f2.corners
    W = {i: g.from_chart(w.coords) for i, w in f2.edge_witness.items()}

    a_id, m_id, b_id, t_id = (f"{fid}.{tag}{s}" for s in ("a", "m", "b", "t"))
    corA = [x] + [C[seq[k]] for k in range(1, p1 + 1)] + [w1]
    witA = {j: W[seq[j]] for j in range(p1) if seq[j] in W}
    corM = [w1] + [C[seq[k]] for k in range(p1, p2 + 1)] + [w2]
    witM = {1 + (j - p1): W[seq[j]] for j in range(p1, p2) if seq[j] in W}
    corB = [x, w2] + [C[seq[k]] for k in range(p2, nn)]
    witB = {2 + (j - p2): W[seq[j]] for j in range(p2, nn) if seq[j] in W}
    A = face_from_embedded(a_id, face.kappa, corA, witA)
    M = face_from_embedded(m_id, face.kappa, corM, witM)
    B = face_from_embedded(b_id, face.kappa, corB, witB)

    # the replacement: same side lengths, curvature 1
    base = g.dist(w1, w2)
    sol = solve_sss(1.0, base, eps, eps)
    g1 = geom(1.0)
    apex = (0.0, 0.0, 1.0)
    d0 = (1.0, 0.0, 0.0)
    c1 = g1.exp(apex, d0, eps)
    c2 = g1.exp(apex, g1.rotate(apex, d0, sol.A), eps)
    if abs(g1.dist(c1, c2) - base) > 1e-11:
        raise ValidationError("replacement triangle sides failed to match")
    T = face_from_embedded(t_id, 1.0, [apex, c1, c2])

    remap = {}
    for j in range(p1):
        remap[seq[j]] = (a_id, j)
    for j in range(p1, p2):
        remap[seq[j]] = (m_id, 1 + (j - p1))
    for j in range(p2, nn):
        remap[seq[j]] = (b_id, 2 + (j - p2))
    gl = []
    for gg in refined.gluings:
        fa, ea, fb, eb = gg.face_a, gg.edge_a, gg.face_b, gg.edge_b
        if fa == fid:
            fa, ea = remap[ea]
        if fb == fid:
            fb, eb = remap[eb]
        gl.append(Gluing(fa, ea, fb, eb, gg.reversed, gg.id))
    kM = p2 - p1
    gl.extend([
        Gluing(a_id, p1, m_id, 0, True, f"{tag}r1"),
        Gluing(m_id, kM + 1, b_id, 1, True, f"{tag}r2"),
        Gluing(a_id, p1 + 1, t_id, 0, True, f"{tag}l1"),
        Gluing(m_id, kM + 2, t_id, 1, True, f"{tag}base"),
        Gluing(b_id, 0, t_id, 2, True, f"{tag}l2"),
    ])
    faces = [f for fid2, f in refined.faces.items() if fid2 != fid]
    faces.extend([A, M, B, T])
    marked = {k: v for k, v in refined.marked_curves.items()
              if all(s.face != fid for s in v.segments)}
    out = SurfaceComplex(faces, gl, marked)
    info = {"w1": w1, "w2": w2, "apex_new": sol.A,
            "new_faces": (a_id, m_id, b_id, t_id)}
    return out, info


def _probe_quantities(g, plan, eps, lam, apex_new):
    """Model-space probe data: the geodesic entering the triangle at
    distance lam*eps from the apex, continued outside until it closes
    on itself and until it returns to the target circle."""
    x, u, n = plan["x"], plan["u"], plan["n"]
    dp, dm = plan["dp"], plan["dm"]
    z = g.exp(x, dp, lam * eps)
    zp = g.exp(x, dm, lam * eps)
    gamma = 0.5 * apex_new
    # crossing angle with the leg, solved inside the curvature-1 triangle
    tan_phi = 1.0 / (math.tan(gamma) * math.cos(lam * eps))
    phi = math.atan(tan_phi)

    def branch(zc, leg_plane):
        u_leg, _ = g.log(zc, x)
        for sgn in (1.0, -1.0):
            d = g.rotate(zc, u_leg, sgn * (math.pi - phi))
            probe = g.exp(zc, d, 4.0 * eps)
            inner = g.side(leg_plane, g.exp(x, n, 0.5 * eps))
            if g.side(leg_plane, probe) * inner < 0.0:
                return d
        raise ValidationError("probe branch direction is ambiguous")

    pl_p = g.geodesic(x, dp)
    pl_m = g.geodesic(x, dm)
    d1 = branch(z, pl_p)
    d2 = branch(zp, pl_m)
    b1 = g.geodesic(z, d1)
    b2 = g.geodesic(zp, d2)

    def first_hit(zc, d, pl_other):
        cands = [(abs(_ray_param(g, zc, d, q)), _ray_param(g, zc, d, q), q)
                 for q in g.intersections(g.geodesic(zc, d), pl_other)]
        cands = [(t, q) for _, t, q in cands if t > 1e-9]
        return min(cands)

    t_u, u_pt = first_hit(z, d1, b2)
    pl_g = g.geodesic(x, u)
    t_v, v_pt = first_hit(z, d1, pl_g)
    _, vp_pt = first_hit(zp, d2, pl_g)
    tan_u1 = _geo_tangent_at(g, z, d1, t_u)
    t_u2 = _ray_param(g, zp, d2, u_pt)
    tan_u2 = _geo_tangent_at(g, zp, d2, t_u2)
    alpha = 0.5 * math.acos(_clamp1(g.dot_t(tan_u1, tan_u2)))
    tan_v = _geo_tangent_at(g, z, d1, t_v)
    tan_g = _geo_tangent_at(g, x, u, _ray_param(g, x, u, v_pt))
    beta = math.acos(_clamp1(abs(g.dot_t(tan_v, tan_g))))
    d_vx = g.dist(v_pt, x)
    return {"z": z, "z_prime": zp, "u": u_pt, "v": v_pt, "v_prime": vp_pt,
            "gamma": gamma, "phi": phi, "alpha": alpha, "beta": beta,
            "d_vx": d_vx}


def _geodesic_marked_curves(c):
    out = []
    for name, cur in c.marked_curves.items():
        if not cur.closed:
            continue
        if not close_up_check(c, cur).closed:
            continue
        if almost_geodesic_check(c, cur):
            continue
        out.append(cur)
    return out


def ldlc_perturb(P: SurfaceComplex, a: float, eps: float,
                 targets=None, grid: int = 10, lambda_ratio: float = 0.5):
    """Kill the target simple closed geodesics of a round complex.

    Distances are divided by rho = 1 + eps (curvature becomes rho**2);
    each target then loses a small isosceles triangle (legs eps, apex
    angle pi/2, symmetric about the normal at the chosen point), which
    is rebuilt at curvature 1 with the same side lengths.  The apex and
    leg endpoints become cone vertices, so the target no longer closes.

    Returns (complex, [PerturbationTrace]).  With eps = 0 the input is
    returned untouched.  Targets default to the marked closed geodesics
    plus everything enumerate_simple_closed finds below cap a.
    """
    if not 0.0 < a < 2.0 * math.pi:
        raise InfeasibleParameters("cap a must lie in (0, 2*pi)")
    if eps < 0.0 or eps > 0.2:
        raise InfeasibleParameters("eps must lie in [0, 0.2]")
    if not P.closed:
        raise ValidationError("ldlc_perturb needs a closed complex")
    chi, _ = euler_and_orientability(P)
    if chi != 2:
        raise ValidationError("ldlc_perturb needs a sphere-like complex (chi = 2)")
    for f in P.faces.values():
        if abs(f.kappa - 1.0) > 1e-12:
            raise ValidationError("ldlc_perturb needs curvature-1 faces")
    if eps == 0.0:
        return P, []
    rho = 1.0 + eps
    if targets is None:
        targets = _geodesic_marked_curves(P)
        enum, _ = enumerate_simple_closed(P, cap=a, grid=grid)
        for cur in enum:
            if all(curve_hausdorff(P, cur, t, 0.05) > 0.1 for t in targets):
                targets.append(cur)
    if not targets:
        raise InfeasibleParameters("no target geodesics to kill")

    work = scale_metric(P, rho)

    # transported copies of the targets (chart coords are scale-free on
    # curved faces, only the curvature tag moves)
    def transport(cur):
        segs = []
        for s in cur.segments:
            k2 = work.faces[s.face].kappa
            mk = lambda p: None if p is None else ModelPoint(k2, p.coords)
            segs.append(CurveSegment(s.face, mk(s.entry), mk(s.exit), mk(s.mid)))
        return SurfaceCurve(segs, cur.closed, cur.crossing_word)

    scaled_targets = [transport(t) for t in targets]
    traces = []
    plans = []
    for i, tgt in enumerate(scaled_targets):
        others = scaled_targets[:i] + scaled_targets[i + 1:]
        plan = _choose_apex(work, tgt, eps, others)
        g = work.faces[plan["fid"]].geom
        work, info = _excise_and_replace(work, plan, eps, f"k{i}")
        probe = _probe_quantities(g, plan, eps, lambda_ratio, info["apex_new"])
        k2 = rho * rho
        mp = lambda pt: ModelPoint(k2, g.to_chart(pt))
        tr = PerturbationTrace(
            epsilon=eps, rho=rho, lambda_ratio=lambda_ratio,
            x=mp(plan["x"]), y=mp(plan["yp"]), y_prime=mp(plan["ym"]),
            z=mp(probe["z"]), z_prime=mp(probe["z_prime"]),
            u=mp(probe["u"]), v=mp(probe["v"]), v_prime=mp(probe["v_prime"]),
            gamma=probe["gamma"], phi=probe["phi"], alpha=probe["alpha"],
            beta=probe["beta"], d_vx=probe["d_vx"],
            apex_angle_old=0.5 * math.pi, apex_angle_new=info["apex_new"],
            host_face=plan["fid"], new_faces=info["new_faces"],
            target_length=tgt.length * rho)
        plans.append((tr, tgt))
        traces.append(tr)

    work.require_valid()
    # the former geodesics must now fail to close: re-trace each from a
    # surviving mid-segment state for its former (unscaled) length
    for tr, tgt in plans:
        seg = None
        for s in sorted(tgt.segments, key=lambda s: -s.geometry()[4]):
            if s.face in work.faces:
                seg = s
                break
        if seg is None:
            continue
        g, S, E, v, d = seg.geometry()
        mid = g.exp(S, v, 0.5 * d)
        dmid = _geo_tangent_at(g, S, v, 0.5 * d)
        try:
            t = trace(work, seg.face, g.to_chart(mid),
                      g.tangent_to_chart(mid, dmid), tr.target_length)
            tr.closure_halt = t.halt_reason
            if t.halt_reason == "max_len":
                rep = close_up_check(work, t)
                tr.closure_gap = rep.pos_gap + rep.angle_gap
            else:
                # ran into a cone vertex or the boundary: short of closing
                # by at least the untraced remainder
                tr.closure_gap = tr.target_length - t.length
        except Exception as exc:          # pragma: no cover - defensive
            tr.closure_gap = math.inf
            tr.closure_halt = type(exc).__name__
    return work, traces


# ---------------------------------------------------------------------------
# boundary-angle surgery on polyhedral disks

_LAD_FRACTIONS = (0.37, 0.61, 0.23, 0.79, 0.47)


def _with_gluings(c, extra, drop=()):
    dropped = set(drop)
    gl = [g for g in c.gluings if g.id not in dropped] + list(extra)
    return SurfaceComplex(list(c.faces.values()), gl,
                          marked_curves=dict(c.marked_curves) or None)


def _faces_with_corner(c, prefix, x, tol=1e-9):
    """(fid, corner index) pairs among faces descended from prefix."""
    out = []
    for fid, f in c.faces.items():
        if fid != prefix and not fid.startswith(prefix + "."):
            continue
        for i, corner in enumerate(f.corners):
            if f.geom.dist(x, corner) < tol:
                out.append((fid, i))
    return out


def _matching_edges(c, prefixes, P, Q, unglued, tol=1e-7):
    """Edges running between embedded points P and Q.

    Only faces equal to or descended from the given prefixes are
    scanned (their pieces inherit the parent chart, so coordinates
    stay comparable).  Returns (fid, e, starts_at_P) triples.
    """
    out = []
    for fid, f in c.faces.items():
        if not any(fid == p or fid.startswith(p + ".") for p in prefixes):
            continue
        for e in range(f.n):
            if unglued and (fid, e) in c.edge_gluing:
                continue
            S, E = f.edges[e].S, f.edges[e].E
            g = f.geom
            if g.dist(S, P) < tol and g.dist(E, Q) < tol:
                out.append((fid, e, True))
            elif g.dist(S, Q) < tol and g.dist(E, P) < tol:
                out.append((fid, e, False))
    return out


def _glue_matched(c, prefixes, P, Q, gid):
    """Glue the (exactly two) unglued edges running between P and Q."""
    hits = _matching_edges(c, prefixes, P, Q, unglued=True)
    if len(hits) != 2:
        raise ValidationError(f"expected 2 cut banks between the points, "
                              f"found {len(hits)}")
    (fa, ea, da), (fb, eb, db) = hits
    return _with_gluings(c, [Gluing(fa, ea, fb, eb, da != db, gid)])


def _sweep_around(c, fid, j, d0, delta):
    """Rotate a tangent ray ccw around the corner vertex by delta.

    Walks the faces of the vertex orbit; returns (face id, corner index,
    direction) of the rotated ray in the chart of the face it lands in.
    """
    from .engine import _ang_ccw
    f = c.faces[fid]
    g = f.geom
    v = f.corners[j]
    d = g.normalize_t(v, d0)
    pos = _ang_ccw(g, v, f.edges[j].tan_start, d)
    sign = 1.0
    budget = delta
    for _ in range(8 * len(c.faces) + 8):
        theta = f.interior_angle(j)
        if pos > theta + 1e-9:
            raise ValidationError("sweep reference ray left its wedge")
        avail = (theta - pos) if sign > 0 else pos
        if budget <= avail + 1e-12:
            return f.id, j, g.rotate(v, d, sign * budget)
        budget -= avail
        e_cross = (j - 1) % f.n if sign > 0 else j
        gl = c.edge_gluing.get((f.id, e_cross))
        if gl is None:
            raise InfeasibleParameters("vertex sweep reached the boundary")
        at_end = e_cross != j            # v sits at the end of the in-edge
        if (gl.face_a, gl.edge_a) == (f.id, e_cross):
            fid2, e2 = gl.face_b, gl.edge_b
        else:
            fid2, e2 = gl.face_a, gl.edge_a
        at_start2 = (at_end and gl.reversed) or (not at_end and not gl.reversed)
        f = c.faces[fid2]
        g = f.geom
        if at_start2:
            j = e2
            v = f.corners[j]
            d = f.edges[e2].tan_start
            sign, pos = 1.0, 0.0
        else:
            j = (e2 + 1) % f.n
            v = f.corners[j]
            edge = f.edges[e2]
            d = g.normalize_t(v, tuple(-u for u in edge.tangent_at(edge.length)))
            sign, pos = -1.0, f.interior_angle(j)
    raise ValidationError("vertex sweep did not terminate")


def _interior_vertex_at(c, fid, ci, min_deficit):
    """Deficit 2*pi - theta if corner (fid, ci) is an interior cone vertex."""
    i = c.orbit_index(fid, ci)
    if c.is_boundary_vertex(i):
        return None
    deficit = 2.0 * math.pi - c.vertex_theta(i)
    if deficit < min_deficit:
        return None
    return deficit


def _reversed_curve(cur):
    segs = [CurveSegment(s.face, s.exit, s.entry, s.mid)
            for s in reversed(cur.segments)]
    return segs


def _grazed_cone_vertex(c, seg, skip_orbit=None):
    """True if the segment exits within 1e-7 of a corner that is a genuine
    cone point or a boundary vertex.  Interior corners with full angle 2*pi
    (seam breakpoints left behind by earlier welds) are geometrically
    transparent and safe to pass, as is the orbit the ray starts from."""
    fs = c.faces[seg.face]
    x = fs.geom.from_chart(seg.exit.coords)
    for ci, corner in enumerate(fs.corners):
        if fs.geom.dist(x, corner) >= 1e-7:
            continue
        orbit = c.orbit_index(seg.face, ci)
        if orbit == skip_orbit:
            continue
        if c.is_boundary_vertex(orbit):
            return True
        if abs(2.0 * math.pi - c.vertex_theta(orbit)) > 1e-9:
            return True
    return False


def _trace_digon_side(c, fid, q, direction, length, orbit_w):
    """One digon side from corner q; verified and snapped to end at w."""
    f = c.faces[fid]
    g = f.geom
    cur = trace(c, fid, g.to_chart(q), g.tangent_to_chart(q, direction),
                length, vertex_tol=0.0)
    if cur.halt_reason not in ("max_len", "stuck"):
        raise InfeasibleParameters(f"digon side hit {cur.halt_reason}")
    orbit_q = None
    for ci, corner in enumerate(f.corners):
        if g.dist(q, corner) < 1e-9:
            orbit_q = c.orbit_index(fid, ci)
            break
    for s in cur.segments[:-1]:
        if _grazed_cone_vertex(c, s, skip_orbit=orbit_q):
            raise InfeasibleParameters("digon side grazes a vertex")
    last = cur.segments[-1]
    fl = c.faces[last.face]
    end = fl.geom.from_chart(last.exit.coords)
    snapped = None
    for ci, corner in enumerate(fl.corners):
        if (fl.geom.dist(end, corner) < 1e-7
                and c.orbit_index(last.face, ci) == orbit_w):
            snapped = corner
            break
    if snapped is None:
        raise InfeasibleParameters("digon side missed the far vertex")
    cur.segments[-1] = CurveSegment(last.face, last.entry,
                                    _mp(fl.geom, fl.kappa, snapped), last.mid)
    return cur


def _components(c):
    parent = {fid: fid for fid in c.faces}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in c.gluings:
        ra, rb = find(g.face_a), find(g.face_b)
        if ra != rb:
            parent[ra] = rb
    comps = {}
    for fid in c.faces:
        comps.setdefault(find(fid), []).append(fid)
    return list(comps.values())


def _disk_shape_ok(c):
    rep = c.validate()
    if not rep.ok:
        return False
    chi, orient = euler_and_orientability(c)
    try:
        ncyc = len(c.boundary_cycles())
    except ValidationError:
        return False
    return orient and chi == 1 and ncyc == 1


def _interior_deficits(c):
    """(deficit, orbit index) of interior cone vertices, largest first."""
    out = []
    for i in range(c.V):
        if c.is_boundary_vertex(i):
            continue
        d = 2.0 * math.pi - c.vertex_theta(i)
        if d > 1e-12:
            out.append((d, i))
    out.sort(reverse=True)
    return out


def _probe_pass(c, fidq, q, dirv, orbit, max_len):
    """First passage of the geodesic from q beside the target vertex orbit.

    Returns (signed offset, arc length before the passage face, face id,
    corner index, distance from the face entry to the vertex, entry
    point, entry tangent), or None when the trace never gets there.
    """
    g = c.faces[fidq].geom
    try:
        cur = trace(c, fidq, g.to_chart(q), g.tangent_to_chart(q, dirv),
                    max_len, vertex_tol=0.0)
    except NonConvergence:
        return None
    best = None
    acc = 0.0
    for s in cur.segments:
        fs = c.faces[s.face]
        gg, S, E, u, d = s.geometry()
        for ci in range(fs.n):
            if c.orbit_index(s.face, ci) != orbit:
                continue
            v = fs.corners[ci]
            uu, dd = gg.log(S, v)
            if dd < 1e-12:
                continue
            ang = _ang_ccw(gg, S, u, uu)
            if dd * math.cos(ang) >= -1e-9:
                off = gg.side(gg.geodesic(S, u), v)
                if best is None or abs(off) < abs(best[0]):
                    best = (off, acc, s.face, ci, dd, S, u)
        acc += d
    return best


def _aim_at_vertex(c, prefix, q, orbit, max_len):
    """Shoot from the corner point q until a geodesic hits the vertex orbit.

    Scans each wedge at q for a sign change of the passage offset and
    bisects the direction angle.  Returns the shortest clean connection
    as (direction at q, r3, terminal face, corner, direction v -> q) or
    None.
    """
    roots = []
    for fidq, cq in _faces_with_corner(c, prefix, q):
        f = c.faces[fidq]
        g = f.geom
        qq = f.corners[cq]
        base = f.edges[cq].tan_start
        th = f.interior_angle(cq)
        m = 48

        def offset(a):
            return _probe_pass(c, fidq, qq, g.rotate(qq, base, a), orbit,
                               max_len)

        samples = [(th * (i + 0.5) / m, offset(th * (i + 0.5) / m))
                   for i in range(m)]
        for (a0, r0), (a1, r1) in zip(samples, samples[1:]):
            if r0 is None or r1 is None or r0[0] * r1[0] >= 0:
                continue
            lo, hi, flo = a0, a1, r0[0]
            res = r0
            ok = True
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                rm = offset(mid)
                if rm is None:
                    ok = False
                    break
                res = rm
                if rm[0] * flo > 0:
                    lo, flo = mid, rm[0]
                else:
                    hi = mid
            if not ok or abs(res[0]) > 1e-7:
                continue
            off, acc, ft, ci, dd, S, u = res
            fterm = c.faces[ft]
            gg = fterm.geom
            v = fterm.corners[ci]
            d_in = _geo_tangent_at(gg, S, u, dd)
            d_vq = gg.normalize_t(v, tuple(-x for x in d_in))
            a_star = 0.5 * (lo + hi)
            roots.append((acc + dd, g.rotate(qq, base, a_star),
                          ft, ci, d_vq))
    if not roots:
        return None
    roots.sort(key=lambda r: r[0])
    r3, dirv, ft, ci, d_vq = roots[0]
    return dirv, r3, ft, ci, d_vq


def _wedge_containing(c, prefix, x, d):
    """Face whose wedge at the corner point x strictly contains direction d."""
    for fidq, cq in _faces_with_corner(c, prefix, x):
        f = c.faces[fidq]
        ang = _ang_ccw(f.geom, f.corners[cq], f.edges[cq].tan_start, d)
        if 1e-9 < ang < f.interior_angle(cq) - 1e-9:
            return fidq, cq
    raise InfeasibleParameters("direction is not interior to any wedge")


def _insert_one(c, fid, e, s_on_edge, beta, tag):
    """One boundary-angle insertion at param s of boundary edge (fid, e).

    Slits inward from p, excises a thin digon around an interior cone
    vertex to move deficit beta onto the slit tip, and seals the slit
    with a kite whose far corner becomes the new boundary angle of
    measure just under pi.  Returns (complex, info).
    """
    f0 = c.faces[fid]
    g = f0.geom
    kappa = f0.kappa
    if (fid, e) in c.edge_gluing:
        raise ValidationError("insertion site is not a boundary edge")
    edge = f0.edges[e]
    if min(s_on_edge, edge.length - s_on_edge) < 1e-3 * edge.length:
        raise InfeasibleParameters("insertion point too close to a corner")
    p = edge.point_at(s_on_edge)
    n = g.left(p, edge.tangent_at(s_on_edge))
    hit = _ray_exit(f0, p, n, 1e-9)
    if hit is None:
        raise InfeasibleParameters("normal segment hits a vertex")
    t_exit = hit[0]
    E = hit[3]
    t = 0.5 * min(0.1, t_exit)
    q = g.exp(p, n, t)

    # slit: cut the whole normal chord, reclose its [q, E] part
    slit = SurfaceCurve([CurveSegment(fid, _mp(g, kappa, p), _mp(g, kappa, E))],
                        closed=False)
    c = cut_along(c, slit)
    copies = _matching_edges(c, [fid], p, E, unglued=True)
    if len(copies) != 2:
        raise ValidationError("slit did not produce two banks")
    splits = {}
    for fa, ea, _d in copies:
        splits[(fa, ea)] = [c.faces[fa].edges[ea].param_of(q)]
    c, _ = subdivide_edges(c, splits)
    c = _glue_matched(c, [fid], q, E, f"{tag}.seam")

    # aim a geodesic from the slit tip at an interior cone vertex
    probe_len = 4.0 * sum(fc.edges[k].length for fc in c.faces.values()
                          for k in range(fc.n))
    root = None
    for deficit, orbit in _interior_deficits(c):
        if deficit <= 2.0 * beta:
            break
        root = _aim_at_vertex(c, fid, q, orbit, probe_len)
        if root is not None:
            break
    if root is None:
        raise InfeasibleParameters(
            "no interior cone vertex is cleanly visible from the slit tip")
    dirv, r3, ft, ci, d_vq = root
    theta_v = c.vertex_theta(c.orbit_index(ft, ci))

    # digon width: angle beta/2 at q on each side
    def excess(s):
        return solve_sas(kappa, b=r3, A=0.5 * theta_v, c=s).C - 0.5 * beta

    lo = 1e-9 * r3
    if excess(r3) < 0 or excess(lo) > 0:
        raise InfeasibleParameters("vertex deficit too small for the digon")
    s_w = brentq(excess, lo, r3, xtol=1e-15, rtol=8.9e-16)
    sol = solve_sas(kappa, b=r3, A=0.5 * theta_v, c=s_w)
    l_gam = sol.a

    # place the digon apex w by sweeping half the cone angle around v
    fw_id, jw, dir_w = _sweep_around(c, ft, ci, d_vq, 0.5 * theta_v)
    fw = c.faces[fw_id]
    gw = fw.geom
    curw = trace(c, fw_id, gw.to_chart(fw.corners[jw]),
                 gw.tangent_to_chart(fw.corners[jw], dir_w), s_w,
                 vertex_tol=0.0)
    if curw.halt_reason != "max_len":
        raise InfeasibleParameters("apex ray leaves the surface")
    orbit_v = c.orbit_index(ft, ci)
    for s in curw.segments[:-1]:
        if _grazed_cone_vertex(c, s, skip_orbit=orbit_v):
            raise InfeasibleParameters("apex ray grazes a vertex")
    lastw = curw.segments[-1]
    fw_id = lastw.face
    fw = c.faces[fw_id]
    gw = fw.geom
    _gg, Sw, w, uw, dw = lastw.geometry()
    if min(gw.dist(w, co) for co in fw.corners) < 1e-7:
        raise InfeasibleParameters("digon apex lands on a vertex")
    on_edge = None
    for ew in range(fw.n):
        edw = fw.edges[ew]
        sw_par = edw.param_of(w)
        if 1e-7 < sw_par < edw.length - 1e-7 and \
                gw.dist(w, edw.point_at(sw_par)) < 1e-8:
            on_edge = (ew, sw_par)
            break
    if on_edge is not None:
        # apex sits on an existing edge (e.g. an earlier weld seam):
        # subdividing at w already makes it a corner on both banks
        ew, sw_par = on_edge
        if (fw_id, ew) not in c.edge_gluing:
            raise InfeasibleParameters("digon apex lands on the boundary")
        w = fw.edges[ew].point_at(sw_par)
        c, _ = subdivide_edges(c, {(fw_id, ew): [sw_par]})
    elif _strictly_inside(fw, w, 1e-9):
        # make w a corner: cut a transversal chord through it and reclose
        dir_at_w = _geo_tangent_at(gw, Sw, uw, dw)
        perp = gw.left(w, dir_at_w)
        h1 = _ray_exit(fw, w, perp, 1e-9)
        h2 = _ray_exit(fw, w, gw.normalize_t(w, tuple(-x for x in perp)),
                       1e-9)
        if h1 is None or h2 is None:
            raise InfeasibleParameters("apex pre-cut exits at a vertex")
        A, B = h1[3], h2[3]
        c = cut_along(c, SurfaceCurve(
            [CurveSegment(fw_id, _mp(gw, kappa, A), _mp(gw, kappa, B),
                          _mp(gw, kappa, w))], closed=False))
        c = _glue_matched(c, [fw_id], A, B, f"{tag}.wseam")
        ga, gb, _gd = _matching_edges(c, [fw_id], A, B, unglued=False)[0]
        c, _ = subdivide_edges(c,
                               {(ga, gb): [c.faces[ga].edges[gb].param_of(w)]})
    else:
        raise InfeasibleParameters("digon apex lands outside its face")
    wf = _faces_with_corner(c, fw_id, w)
    if not wf:
        raise ValidationError("apex corner missing after pre-cut")
    orbit_w = c.orbit_index(*wf[0])

    # digon sides, traced on the surface itself
    sides = []
    for sgn in (-1.0, 1.0):
        d_i = g.rotate(q, dirv, sgn * 0.5 * beta)
        fq_i, _cq_i = _wedge_containing(c, fid, q, d_i)
        sides.append(_trace_digon_side(c, fq_i, q, d_i, l_gam - 1e-9, orbit_w))
    g1, g2 = sides

    digon = SurfaceCurve(list(g1.segments) + _reversed_curve(g2), closed=True)
    c2 = cut_along(c, digon, allow_vertices=True)
    comps = _components(c2)
    if len(comps) != 2:
        raise InfeasibleParameters("digon excision did not separate a lens")
    keep = max(comps, key=lambda fl: sum(c2.faces[i].area() for i in fl))
    keepset = set(keep)
    kept = SurfaceComplex([c2.faces[i] for i in keep],
                          [gl for gl in c2.gluings if gl.face_a in keepset])

    # weld the kept banks of the two digon sides onto each other
    arcs = []
    for gi in (g1, g2):
        arc = []
        for s in gi.segments:
            _gg, S, Ex, _u, _d = s.geometry()
            hitsb = _matching_edges(kept, [s.face], S, Ex, unglued=True)
            if len(hitsb) != 1:
                raise ValidationError("digon bank edge not found")
            arc.append(hitsb[0])
        arcs.append(arc)
    kept = glue_boundary(kept, [arcs[0]], None, [arcs[1]])

    # kite abcb': right angles at b, b', angle beta at a; a seals q, b/b'
    # seal the two slit images of p, c sticks out as the new boundary angle
    sol2 = solve_asa(kappa, A=0.5 * beta, c=t, B=0.5 * math.pi)
    kid = f"{tag}.kite"
    kg = geom(kappa)
    if kg.sign == 0:
        a0, ax = (0.0, 0.0), (1.0, 0.0)
    else:
        a0, ax = (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)
    pb = kg.exp(a0, kg.rotate(a0, ax, -0.5 * beta), t)
    pc = kg.exp(a0, ax, sol2.b)
    pb2 = kg.exp(a0, kg.rotate(a0, ax, 0.5 * beta), t)
    kite = face_from_embedded(kid, kappa, [a0, pb, pc, pb2])
    slit_banks = _matching_edges(kept, [fid], p, q, unglued=True)
    if len(slit_banks) != 2:
        raise ValidationError("slit banks missing before kite insertion")
    final = None
    for h0, h3 in (slit_banks, slit_banks[::-1]):
        gl0 = Gluing(kid, 0, h0[0], h0[1], h0[2], f"{tag}.k0")
        gl3 = Gluing(kid, 3, h3[0], h3[1], not h3[2], f"{tag}.k3")
        cand = SurfaceComplex(list(kept.faces.values()) + [kite],
                              list(kept.gluings) + [gl0, gl3])
        if _disk_shape_ok(cand):
            final = cand
            break
    if final is None:
        raise ValidationError("kite insertion failed to validate")
    info = dict(kite=kid, corner=2, t=t, delta=sol2.a, angle=2.0 * sol2.C,
                r3=r3, theta_v=theta_v)
    return final, info


def _boundary_layout(c):
    cyc = c.boundary_cycles()
    if len(cyc) != 1:
        raise ValidationError("input is not a disk (boundary is not one cycle)")
    lay = []
    pos = 0.0
    for fid, e, fwd in cyc[0]:
        L = c.faces[fid].edges[e].length
        lay.append((fid, e, fwd, pos, pos + L))
        pos += L
    return lay, pos


def _point_on_layout(c, lay, total, u):
    u %= total
    for fid, e, fwd, t0, t1 in lay:
        if t0 - 1e-12 <= u <= t1 + 1e-12:
            L = t1 - t0
            s = (u - t0) if fwd else (t1 - u)
            return fid, e, min(max(s, 0.0), L)
    raise ValidationError("arc position out of range")


def _relocate_boundary(c, fid0, x):
    """Boundary site (fid, e, s) of an embedded point after face cuts."""
    for fid, f in c.faces.items():
        if fid != fid0 and not fid.startswith(fid0 + "."):
            continue
        for e in range(f.n):
            if (fid, e) in c.edge_gluing:
                continue
            edge = f.edges[e]
            if abs(f.geom.side(edge.plane, x)) > 1e-7:
                continue
            s = edge.param_of(x)
            if 1e-9 <= s <= edge.length - 1e-9:
                return fid, e, s
    raise InfeasibleParameters("could not relocate the antipodal point")


def _audit_lad(c, info1, info2, beta, L0):
    c.require_valid()
    lay, Lb = _boundary_layout(c)
    orbs = {}
    for info in (info1, info2):
        orb = c.orbit_index(info["kite"], info["corner"])
        th = boundary_angle(c, orb)
        if abs(th - info["angle"]) > 1e-9 or th >= math.pi:
            raise ValidationError("inserted boundary angle is off")
        orbs[orb] = info
    predicted = L0 + 2.0 * (info1["delta"] + info2["delta"])
    if abs(Lb - predicted) > 1e-9 * (1.0 + Lb):
        raise ValidationError("boundary length drifted during insertion")
    pos = []
    for fid, e, fwd, _t0, t1 in lay:
        corner = (e + 1) % c.faces[fid].n if fwd else e
        orbj = c.orbit_index(fid, corner)
        if orbj in orbs:
            pos.append(t1 % Lb)
    if len(pos) != 2:
        raise ValidationError("expected exactly two inserted boundary angles")
    arc = abs(pos[1] - pos[0])
    if abs(arc - (Lb - arc)) > 1e-8:
        raise ValidationError("inserted angles do not halve the boundary")


def lad_add_boundary_angles(D: SurfaceComplex, beta: float = 1e-3) -> SurfaceComplex:
    """Give a convex polyhedral disk two boundary angles of measure < pi.

    Performs, at two boundary-antipodal points, a slit + digon excision
    that moves cone deficit beta from an interior vertex to the slit
    tip, then seals each slit with a kite quadrilateral whose outer
    corner carries the new angle (pi - beta up to curvature of the kite
    itself).  The two new corners halve the resulting boundary length;
    the audit checks that split to 1e-8 and the angle values to 1e-9.
    """
    if D.closed:
        raise ValidationError("input is closed; expected a disk with boundary")
    kappas = {f.kappa for f in D.faces.values()}
    if len(kappas) != 1:
        raise ValidationError("mixed-curvature input")
    kappa = kappas.pop()
    lay, L0 = _boundary_layout(D)
    chi, orient = euler_and_orientability(D)
    if chi != 1 or not orient:
        raise ValidationError("input is not a disk")
    for i in range(D.V):
        if D.is_boundary_vertex(i) and D.vertex_theta(i) > math.pi + 1e-9:
            raise ValidationError("boundary has a reflex angle; disk must be convex")
    deficits = _interior_deficits(D)
    if not deficits:
        if kappa > KAPPA_ZERO_TOL:
            raise InfeasibleParameters("half-sphere input: no interior vertex")
        raise ValidationError("no interior vertex")
    if deficits[0][0] <= 3.0 * beta:
        raise InfeasibleParameters(
            "interior cone deficits too small for the requested angle")
    last = None
    for frac in _LAD_FRACTIONS:
        u_p = frac * L0
        try:
            site1 = _point_on_layout(D, lay, L0, u_p)
            c1, info1 = _insert_one(D, *site1, beta, "lad1")
            fid0, e0, s0 = _point_on_layout(D, lay, L0, u_p + 0.5 * L0)
            p2 = D.faces[fid0].edges[e0].point_at(s0)
            site2 = _relocate_boundary(c1, fid0, p2)
            c2, info2 = _insert_one(c1, *site2, beta, "lad2")
            _audit_lad(c2, info1, info2, beta, L0)
        except (InfeasibleParameters, ValidationError) as exc:
            last = exc
            continue
        return c2
    raise last
