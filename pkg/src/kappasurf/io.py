"""Text serialization of surface complexes and their marked curves.

One human-readable, versioned document format:

    kappasurf 1
    face <id> kappa <value>
      corner <x> <y> [<z>]
      witness <edge index> <x> <y> <z>
    glue <face_a> <edge_a> <face_b> <edge_b> <fwd|rev> <gluing id>
    curve <name> <open|closed> halt <reason> simple <0|1|?>
      word <token> ...
      seg <face> entry <coords> exit <coords> [mid <coords>]

Corners and curve points are chart coordinates; numbers use 17
significant digits, so parse(serialize(c)) reproduces every double
exactly and serialize is a byte-identical round trip.  Blank lines and
'#' comments are ignored on input.
"""

from __future__ import annotations

from .errors import ValidationError
from .model import ModelPoint
from .surfcomplex import Face, Gluing, SurfaceComplex
from .curves import CurveSegment, SurfaceCurve

FORMAT_NAME = "kappasurf"
FORMAT_VERSION = 1


def _num(x):
    return f"{float(x):.17g}"


def _token(s, what):
    s = str(s)
    if not s or any(ch.isspace() for ch in s):
        raise ValidationError(f"{what} {s!r} cannot be serialized: needs to be a "
                              "nonempty whitespace-free token")
    return s


def serialize_spec(c: SurfaceComplex) -> str:
    lines = [f"{FORMAT_NAME} {FORMAT_VERSION}"]
    for fid in sorted(c.faces):
        f = c.faces[fid]
        lines.append(f"face {_token(fid, 'face id')} kappa {_num(f.kappa)}")
        for p in f.boundary:
            lines.append("  corner " + " ".join(_num(v) for v in p.coords))
        for i in sorted(f.edge_witness):
            w = f.edge_witness[i]
            lines.append(f"  witness {i} " + " ".join(_num(v) for v in w.coords))
    for g in sorted(c.gluings, key=lambda g: g.id):
        lines.append(f"glue {_token(g.face_a, 'face id')} {g.edge_a} "
                     f"{_token(g.face_b, 'face id')} {g.edge_b} "
                     f"{'rev' if g.reversed else 'fwd'} {_token(g.id, 'gluing id')}")
    for name in sorted(c.marked_curves or {}):
        cur = c.marked_curves[name]
        simple = "?" if cur.simple is None else str(int(cur.simple))
        lines.append(f"curve {_token(name, 'curve name')} "
                     f"{'closed' if cur.closed else 'open'} "
                     f"halt {_token(cur.halt_reason or 'ok', 'halt reason')} "
                     f"simple {simple}")
        if cur.crossing_word:
            lines.append("  word " + " ".join(
                _token(gid, "word token") + ("+" if sgn > 0 else "-")
                for gid, sgn in cur.crossing_word))
        for s in cur.segments:
            parts = [f"  seg {_token(s.face, 'face id')}",
                     "entry " + " ".join(_num(v) for v in s.entry.coords),
                     "exit " + " ".join(_num(v) for v in s.exit.coords)]
            if s.mid is not None:
                parts.append("mid " + " ".join(_num(v) for v in s.mid.coords))
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text):
        self.items = []
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                self.items.append((n, line.split()))
        self.k = 0

    def peek(self):
        return self.items[self.k] if self.k < len(self.items) else (None, None)

    def take(self):
        n, toks = self.peek()
        self.k += 1
        return n, toks


def _floats(n, toks, what):
    try:
        vals = tuple(float(t) for t in toks)
    except ValueError:
        raise ValidationError(f"line {n}: bad number in {what}")
    if len(vals) not in (2, 3):
        raise ValidationError(f"line {n}: {what} needs 2 or 3 coordinates")
    return vals


def _curve_points(n, toks, kappa):
    """Parse 'entry <c..> exit <c..> [mid <c..>]' keyword groups."""
    groups, key = {}, None
    for t in toks:
        if t in ("entry", "exit", "mid"):
            key = t
            groups[key] = []
        elif key is None:
            raise ValidationError(f"line {n}: expected entry/exit/mid, got {t!r}")
        else:
            groups[key].append(t)
    if "entry" not in groups or "exit" not in groups:
        raise ValidationError(f"line {n}: curve segment needs entry and exit")
    out = {}
    for key, toks2 in groups.items():
        out[key] = ModelPoint(kappa, _floats(n, toks2, f"segment {key}"))
    return out


def parse_spec(text: str) -> SurfaceComplex:
    r = _Reader(text)
    n, toks = r.take()
    if toks is None or len(toks) != 2 or toks[0] != FORMAT_NAME:
        raise ValidationError(f"line {n or 1}: missing '{FORMAT_NAME} <version>' header")
    if toks[1] != str(FORMAT_VERSION):
        raise ValidationError(f"line {n}: unsupported format version {toks[1]}")

    faces, gluings, curves = [], [], {}
    while True:
        n, toks = r.take()
        if toks is None:
            break
        if toks[0] == "face":
            if len(toks) != 4 or toks[2] != "kappa":
                raise ValidationError(f"line {n}: expected 'face <id> kappa <value>'")
            fid = toks[1]
            try:
                kappa = float(toks[3])
            except ValueError:
                raise ValidationError(f"line {n}: bad kappa for face {fid}")
            corners, witnesses = [], {}
            while True:
                n2, toks2 = r.peek()
                if toks2 is None or toks2[0] not in ("corner", "witness"):
                    break
                r.take()
                if toks2[0] == "corner":
                    corners.append(ModelPoint(kappa, _floats(n2, toks2[1:], "corner")))
                else:
                    try:
                        i = int(toks2[1])
                    except (ValueError, IndexError):
                        raise ValidationError(f"line {n2}: bad witness edge index")
                    witnesses[i] = ModelPoint(kappa, _floats(n2, toks2[2:], "witness"))
            try:
                faces.append(Face(fid, kappa, corners, witnesses))
            except ValidationError as e:
                raise ValidationError(f"line {n}: face {fid}: {e}")
        elif toks[0] == "glue":
            if len(toks) != 7 or toks[5] not in ("fwd", "rev"):
                raise ValidationError(
                    f"line {n}: expected 'glue <fa> <ea> <fb> <eb> fwd|rev <id>'")
            try:
                ea, eb = int(toks[2]), int(toks[4])
            except ValueError:
                raise ValidationError(f"line {n}: bad edge index in gluing")
            gluings.append(Gluing(toks[1], ea, toks[3], eb, toks[5] == "rev", toks[6]))
        elif toks[0] == "curve":
            if (len(toks) != 7 or toks[2] not in ("open", "closed")
                    or toks[3] != "halt" or toks[5] != "simple"
                    or toks[6] not in ("0", "1", "?")):
                raise ValidationError(
                    f"line {n}: expected 'curve <name> open|closed halt <r> simple 0|1|?'")
            name = toks[1]
            simple = None if toks[6] == "?" else toks[6] == "1"
            word, segs = (), []
            kappas = {f.id: f.kappa for f in faces}
            while True:
                n2, toks2 = r.peek()
                if toks2 is None or toks2[0] not in ("word", "seg"):
                    break
                r.take()
                if toks2[0] == "word":
                    for t in toks2[1:]:
                        if len(t) < 2 or t[-1] not in "+-":
                            raise ValidationError(
                                f"line {n2}: word token {t!r} must end in + or -")
                    word = tuple((t[:-1], 1 if t[-1] == "+" else -1)
                                 for t in toks2[1:])
                    continue
                if len(toks2) < 2 or toks2[1] not in kappas:
                    raise ValidationError(f"line {n2}: segment face unknown")
                pts = _curve_points(n2, toks2[2:], kappas[toks2[1]])
                segs.append(CurveSegment(toks2[1], pts["entry"], pts["exit"],
                                         pts.get("mid")))
            if not segs:
                raise ValidationError(f"line {n}: curve {name} has no segments")
            curves[name] = SurfaceCurve(segs, toks[2] == "closed", word,
                                        toks[4], simple)
        else:
            raise ValidationError(f"line {n}: unknown directive {toks[0]!r}")

    try:
        c = SurfaceComplex(faces, gluings, marked_curves=curves or None)
        c.require_valid()
    except ValidationError as e:
        raise ValidationError(f"document invalid: {e}")
    return c
