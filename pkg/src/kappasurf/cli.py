"""Command-line front end.

Subcommands: build, trace, find, audit, perturb, expansion-check, gh,
converge, render.  Reports go to stdout (tabular text, or JSON with
--json); --out writes the main artifact (surface document or SVG).
Exit codes: 0 success, 2 validation failure, 3 infeasible parameters,
4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys

import numpy as np

from . import constructions as cons
from . import compare, engine, io, perturb, svg
from .errors import (KappasurfError, ValidationError, InfeasibleParameters,
                     NonConvergence)
from .surfcomplex import gauss_bonnet_audit, euler_and_orientability

_BUILDERS = {
    "flat": lambda a: cons.build_flat_space(a.get("kind", "torus"),
                                            a.get("a", 1.0), a.get("b", 1.0),
                                            a.get("shear", 0.0)),
    "cylinder": lambda a: cons.build_cylinder_C(a.get("lam", 1.0),
                                                a.get("eps", 0.3),
                                                a.get("kappa", -1.0))[0],
    "mobius": lambda a: cons.build_mobius_M(a.get("kappa", -1.0),
                                            a.get("lam", 1.0),
                                            a.get("eps", 0.3))[0],
    "digon": lambda a: cons.build_digon_surface_S(a.get("alpha", math.pi)),
    "octants": lambda a: cons.build_sphere_octants(),
    "lunes": lambda a: cons.build_sphere_lunes(int(a.get("n", 4))),
    "projective": lambda a: cons.build_projective_sphere(a.get("theta", math.pi)),
    "crosscap": lambda a: cons.build_crosscap_strip(a.get("kappa", 0.0),
                                                    int(a.get("m", 3)),
                                                    a.get("lam", 1.0),
                                                    a.get("eps", 0.1))[0],
    "hyperbolic": lambda a: cons.build_closed_hyperbolic(a.get("lam", 1.0),
                                                         a.get("eps", 0.3),
                                                         a.get("kappa", -1.0)),
}


def _parse_kv(pairs):
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise ValidationError(f"expected key=value, got {p!r}")
        k, v = p.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def _load(path):
    with open(path, "r", encoding="utf-8") as f:
        return io.parse_spec(f.read())


def _write_out(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _emit(args, report, lines):
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True, default=float))
    else:
        for ln in lines:
            print(ln)


def _word(word):
    return " ".join(f"{gid}{'+' if sgn > 0 else '-'}" for gid, sgn in word)


def _coords(s):
    return tuple(float(t) for t in s.split(","))


def cmd_build(args):
    if args.constructor not in _BUILDERS:
        raise ValidationError(f"unknown constructor {args.constructor!r}; "
                              f"choose from {sorted(_BUILDERS)}")
    c = _BUILDERS[args.constructor](_parse_kv(args.params))
    _write_out(args, io.serialize_spec(c))
    if args.out:
        print(f"wrote {args.out}: {len(c.faces)} faces, "
              f"{len(c.gluings)} gluings, "
              f"{len(c.marked_curves or {})} marked curves")
    return 0


def cmd_trace(args):
    c = _load(args.spec)
    cur = engine.trace(c, args.face, _coords(args.point), _coords(args.direction),
                       args.max_len, vertex_tol=1e-9 * args.tol_scale)
    rep = {"length": cur.length, "halt": cur.halt_reason,
           "segments": len(cur.segments),
           "crossing_word": _word(cur.crossing_word).split()}
    _emit(args, rep, [f"length      {cur.length:.12g}",
                      f"halt        {cur.halt_reason}",
                      f"segments    {len(cur.segments)}",
                      "word        " + _word(cur.crossing_word)])
    return 0


def cmd_find(args):
    c = _load(args.spec)
    if args.mode == "shortest":
        cur = engine.shortest_noncontractible(c)
        rep = {"length": cur.length, "word": _word(cur.crossing_word).split()}
        _emit(args, rep, [f"shortest noncontractible length {cur.length:.12g}",
                          "word " + _word(cur.crossing_word)])
        return 0
    curves, flagged = engine.enumerate_simple_closed(
        c, args.cap, grid=args.grid, vertex_tol=1e-9 * args.tol_scale)
    rows = [{"length": g.length, "word": _word(g.crossing_word).split()} for g in curves]
    rep = {"count": len(curves), "flagged": len(flagged), "geodesics": rows}
    lines = [f"simple closed geodesics below {args.cap}: {len(curves)} "
             f"({len(flagged)} vertex-passing flagged)"]
    for r in rows:
        lines.append(f"  length {r['length']:.12g}  word " + " ".join(r["word"]))
    _emit(args, rep, lines)
    return 0


def cmd_audit(args):
    c = _load(args.spec)
    rep = c.validate()
    out = {"ok": rep.ok, "closed": rep.closed}
    lines = [f"valid   {rep.ok}", f"closed  {rep.closed}"]
    if c.closed:
        chi, orient = euler_and_orientability(c)
        total, target, resid = gauss_bonnet_audit(c)
        out.update({"chi": chi, "orientable": orient,
                    "curvature": total, "gauss_bonnet_residual": resid})
        lines += [f"chi     {chi} ({'orientable' if orient else 'non-orientable'})",
                  f"total curvature {total:.12g} vs 2*pi*chi {target:.12g} "
                  f"(residual {resid:.3g})"]
    else:
        out["boundary_cycles"] = len(c.boundary_cycles())
        lines.append(f"boundary cycles {len(c.boundary_cycles())}")
    _emit(args, out, lines)
    if not rep.ok:
        raise ValidationError("; ".join(map(str, rep.mismatches + rep.msgs))
                              if hasattr(rep, "mismatches") else "complex invalid")
    return 0


def cmd_perturb(args):
    c = _load(args.spec)
    if args.mode == "ldlc":
        out, traces = perturb.ldlc_perturb(c, args.cap, args.eps,
                                           grid=args.grid,
                                           lambda_ratio=args.lambda_ratio)
        rep = {"targets": [{"host_face": t.host_face, "gamma": t.gamma,
                            "closure_gap": t.closure_gap} for t in traces]}
        lines = [f"perturbed {len(traces)} geodesics at eps={args.eps}"]
        for t in traces:
            lines.append(f"  host {t.host_face}  gamma {t.gamma:.9g}  "
                         f"closure gap {t.closure_gap:.6g}")
    else:
        out = perturb.lad_add_boundary_angles(c, beta=args.beta)
        rep = {"boundary_cycles": len(out.boundary_cycles())}
        lines = [f"added two boundary angles (beta={args.beta})"]
    _write_out(args, io.serialize_spec(out))
    _emit(args, rep, lines if args.out else [])
    return 0


def cmd_expansion_check(args):
    reports = perturb.trig_ladder(args.eps0, args.lambda_ratio, rungs=args.rungs)
    orders = perturb.order_estimate(reports)
    ok = perturb.orders_pass(orders)
    rep = {"orders": orders, "claimed": perturb.CLAIMED_ORDERS, "pass": ok}
    lines = [f"lambda_ratio {args.lambda_ratio}  ladder from eps0={args.eps0}"]
    for name in sorted(orders):
        lines.append(f"  {name:10s} order {orders[name]:.3f}  "
                     f"(claimed {perturb.CLAIMED_ORDERS[name]})")
    lines.append(f"pass: {ok}")
    _emit(args, rep, lines)
    if not ok:
        raise NonConvergence("observed expansion orders fall short of claims")
    return 0


def cmd_gh(args):
    from .sampling import intrinsic_sample
    A = intrinsic_sample(_load(args.spec_a), args.h)
    B = intrinsic_sample(_load(args.spec_b), args.h)
    lb = compare.gh_lower_bound(A, B)
    rep = {"gh_lower_bound": lb, "diameter_a": A.diameter(),
           "diameter_b": B.diameter(), "h": args.h,
           "note_a": A.note, "note_b": B.note}
    _emit(args, rep, [f"diameter A {A.diameter():.9g}   ({A.note})",
                      f"diameter B {B.diameter():.9g}   ({B.note})",
                      f"GH lower bound {lb:.9g}"])
    return 0


def cmd_converge(args):
    c = _load(args.spec)
    ladder = [float(t) for t in args.params.split(",")]
    if args.family == "graft":
        fam = lambda e: cons.graft_cylinders(c, args.curve, args.p, e)[0]
    else:
        fam = lambda e: perturb.ldlc_perturb(c, args.cap, e, grid=args.grid)[0]
    rep = compare.convergence_report(fam, ladder, c, h=args.h)
    out = {"h": rep.h, "passed": rep.passed,
           "rows": [{"parameter": r.parameter, "distortion": r.distortion,
                     "gh_lower_bound": r.gh_bound, "pairs": r.pairs}
                    for r in rep.rows]}
    lines = [f"{'param':>10s} {'distortion':>12s} {'gh_bound':>12s} {'pairs':>6s}"]
    for r in rep.rows:
        lines.append(f"{r.parameter:10.6g} {r.distortion:12.6g} "
                     f"{r.gh_bound:12.6g} {r.pairs:6d}")
    lines.append(f"monotone decreasing: {rep.passed}")
    _emit(args, out, lines)
    if not rep.passed:
        raise NonConvergence("distortion did not decrease along the ladder")
    return 0


def cmd_render(args):
    c = _load(args.spec)
    _write_out(args, svg.render_svg(c))
    if args.out:
        print(f"wrote {args.out}")
    return 0


def make_parser():
    p = argparse.ArgumentParser(prog="kappasurf",
                                description=__doc__.splitlines()[0])
    p.add_argument("--tol-scale", type=float, default=1.0,
                   help="multiply default tolerances")
    p.add_argument("--grid", type=int, default=10,
                   help="search grid density for enumeration")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for all randomized steps")
    p.add_argument("--out", default=None, help="output file")
    p.add_argument("--json", action="store_true",
                   help="machine-readable report on stdout")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("build", help="run a named constructor")
    q.add_argument("constructor")
    q.add_argument("params", nargs="*", metavar="key=value")
    q.set_defaults(fn=cmd_build)

    q = sub.add_parser("trace", help="shoot one geodesic")
    q.add_argument("spec")
    q.add_argument("--face", required=True)
    q.add_argument("--point", required=True, help="chart coords x,y[,z]")
    q.add_argument("--direction", required=True, help="chart tangent x,y[,z]")
    q.add_argument("--max-len", type=float, default=10.0)
    q.set_defaults(fn=cmd_trace)

    q = sub.add_parser("find", help="enumerate simple closed geodesics")
    q.add_argument("spec")
    q.add_argument("--cap", type=float, default=5.0)
    q.add_argument("--mode", choices=("enumerate", "shortest"),
                   default="enumerate")
    q.set_defaults(fn=cmd_find)

    q = sub.add_parser("audit", help="validate + Gauss-Bonnet + chi")
    q.add_argument("spec")
    q.set_defaults(fn=cmd_audit)

    q = sub.add_parser("perturb", help="curvature-moving surgery")
    q.add_argument("spec")
    q.add_argument("--mode", choices=("ldlc", "lad"), default="ldlc")
    q.add_argument("--eps", type=float, default=0.01)
    q.add_argument("--cap", type=float, default=5.0)
    q.add_argument("--lambda-ratio", type=float, default=0.5)
    q.add_argument("--beta", type=float, default=1e-5)
    q.set_defaults(fn=cmd_perturb)

    q = sub.add_parser("expansion-check", help="Taylor-order audit of the "
                                               "triangle-excision quantities")
    q.add_argument("--eps0", type=float, default=0.02)
    q.add_argument("--lambda-ratio", type=float, default=1.0)
    q.add_argument("--rungs", type=int, default=4)
    q.set_defaults(fn=cmd_expansion_check)

    q = sub.add_parser("gh", help="compare two sampled surfaces")
    q.add_argument("spec_a")
    q.add_argument("spec_b")
    q.add_argument("--h", type=float, default=0.1)
    q.set_defaults(fn=cmd_gh)

    q = sub.add_parser("converge", help="distortion ladder for a surgery family")
    q.add_argument("spec")
    q.add_argument("--family", choices=("graft", "ldlc"), default="graft")
    q.add_argument("--params", default="0.2,0.1,0.05")
    q.add_argument("--curve", default="soul")
    q.add_argument("--p", type=int, default=1)
    q.add_argument("--cap", type=float, default=5.0)
    q.add_argument("--h", type=float, default=0.15)
    q.set_defaults(fn=cmd_converge)

    q = sub.add_parser("render", help="SVG chart drawing")
    q.add_argument("spec")
    q.set_defaults(fn=cmd_render)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    random.seed(args.seed)
    np.random.seed(args.seed % (2 ** 32))
    try:
        return args.fn(args)
    except ValidationError as e:
        print(f"validation failure: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"validation failure: {e}", file=sys.stderr)
        return 2
    except InfeasibleParameters as e:
        print(f"infeasible parameters: {e}", file=sys.stderr)
        return 3
    except NonConvergence as e:
        print(f"non-convergence: {e}", file=sys.stderr)
        return 4
    except KappasurfError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
