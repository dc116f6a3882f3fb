"""Sketch-and-extrude (SE) CAD sequence grammar.

A CAD model is a whitespace-tokenized textual program:

    model   := se+ "<eom>"
    se      := "sketch" face+ "extrude" eparams
    face    := "face" loop+
    loop    := "loop" curve+
    curve   := "line" X Y | "arc" X Y MX MY | "circle" CX CY R
    eparams := "theta" T "phi" P "gamma" G "origin" PX PY PZ
               "scale" S "dist" D1 D2
               "op" ("new"|"join"|"cut"|"intersect")
               "ext" ("one"|"sym"|"two")

All numerals are base-10 integers quantized to [0, 255].  Loops are
implicitly closed: the first curve starts at the endpoint of the last
curve, so no start point is ever written.  The ``<eom>`` terminator is
mandatory, which lets downstream consumers tell truncated generations
from complete ones.

Dequantization conventions (used by the geometry kernel):

* sketch coordinate  c -> (c - 128) / 128            in [-1, 1)
* scale              s -> s / 128                    in [0, 2)
* extrude distance   d -> (d - 128) / 128, then multiplied by the scale
* theta              t -> pi * t / 255               in [0, pi]
* phi, gamma         v -> 2 * pi * v / 255 - pi      in [-pi, pi]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .errors import (
    BadEnumLiteral,
    EmptyLoop,
    OutOfRangeNumber,
    TruncatedSequence,
    UnknownKeyword,
)

MASK_TOKEN = "<mask>"
EOM_TOKEN = "<eom>"

BOOL_OPS = ("new", "join", "cut", "intersect")
EXTENTS = ("one", "sym", "two")

QUANT_MIN = 0
QUANT_MAX = 255


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class Line:
    end_x: int
    end_y: int


@dataclass(frozen=True)
class Arc:
    end_x: int
    end_y: int
    mid_x: int
    mid_y: int


@dataclass(frozen=True)
class Circle:
    center_x: int
    center_y: int
    radius: int


Curve = Line | Arc | Circle


@dataclass(frozen=True)
class Loop:
    curves: tuple[Curve, ...]


@dataclass(frozen=True)
class Face:
    """One sketch region: loops[0] is the outer boundary, the rest are holes."""

    loops: tuple[Loop, ...]


@dataclass(frozen=True)
class Sketch:
    faces: tuple[Face, ...]


@dataclass(frozen=True)
class Extrusion:
    theta: int
    phi: int
    gamma: int
    origin_x: int
    origin_y: int
    origin_z: int
    scale: int
    dist_pos: int
    dist_neg: int
    bool_op: str
    extent: str


@dataclass(frozen=True)
class SePair:
    sketch: Sketch
    extrusion: Extrusion


@dataclass(frozen=True)
class CadModel:
    ses: tuple[SePair, ...]


# ---------------------------------------------------------------------------
# Tokenization


def tokenize(text: str) -> list[str]:
    """Split on runs of whitespace; empty input yields an empty list."""
    return text.split()


def detokenize(tokens) -> str:
    return " ".join(tokens)


# ---------------------------------------------------------------------------
# Dequantization


def dequantize_coord(v: int) -> float:
    return (v - 128) / 128.0


def dequantize_scale(v: int) -> float:
    return v / 128.0


def dequantize_dist(v: int) -> float:
    return (v - 128) / 128.0


def plane_rotation(extrusion: Extrusion):
    """Sketch-plane angles (theta, phi, gamma) in radians."""
    theta = math.pi * extrusion.theta / 255.0
    phi = 2.0 * math.pi * extrusion.phi / 255.0 - math.pi
    gamma = 2.0 * math.pi * extrusion.gamma / 255.0 - math.pi
    return theta, phi, gamma


# ---------------------------------------------------------------------------
# Parsing

_CURVE_KEYWORDS = ("line", "arc", "circle")


class _Cursor:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def _eof_index(self):
        return max(0, len(self.tokens) - 1)

    def peek(self):
        if self.i >= len(self.tokens):
            return None
        return self.tokens[self.i]

    def take(self):
        tok = self.peek()
        if tok is None:
            raise TruncatedSequence("input ended mid-model", self._eof_index())
        self.i += 1
        return tok

    def take_keyword(self, keyword):
        at = self.i
        tok = self.take()
        if tok != keyword:
            raise UnknownKeyword(f"expected '{keyword}', found '{tok}'", at)
        return tok

    def take_number(self):
        at = self.i
        tok = self.take()
        if not (tok.isascii() and tok.isdigit()):
            raise OutOfRangeNumber(f"expected integer in [0, 255], found '{tok}'", at)
        value = int(tok)
        if value > QUANT_MAX:
            raise OutOfRangeNumber(f"{value} > {QUANT_MAX}", at)
        return value

    def take_enum(self, allowed, what):
        at = self.i
        tok = self.take()
        if tok not in allowed:
            raise BadEnumLiteral(f"bad {what} literal '{tok}'", at)
        return tok


def _parse_curve(cur: _Cursor) -> Curve:
    kw = cur.take()
    if kw == "line":
        return Line(cur.take_number(), cur.take_number())
    if kw == "arc":
        return Arc(cur.take_number(), cur.take_number(), cur.take_number(), cur.take_number())
    if kw == "circle":
        return Circle(cur.take_number(), cur.take_number(), cur.take_number())
    raise UnknownKeyword(f"expected a curve keyword, found '{kw}'", cur.i - 1)


def _parse_loop(cur: _Cursor) -> Loop:
    cur.take_keyword("loop")
    curves = []
    while cur.peek() in _CURVE_KEYWORDS:
        curves.append(_parse_curve(cur))
    if not curves:
        raise EmptyLoop("loop has no curves", min(cur.i, cur._eof_index()))
    return Loop(tuple(curves))


def _parse_face(cur: _Cursor) -> Face:
    cur.take_keyword("face")
    loops = []
    while cur.peek() == "loop":
        loops.append(_parse_loop(cur))
    if not loops:
        raise EmptyLoop("face has no loops", min(cur.i, cur._eof_index()))
    return Face(tuple(loops))


def _parse_extrusion(cur: _Cursor) -> Extrusion:
    cur.take_keyword("theta")
    theta = cur.take_number()
    cur.take_keyword("phi")
    phi = cur.take_number()
    cur.take_keyword("gamma")
    gamma = cur.take_number()
    cur.take_keyword("origin")
    ox, oy, oz = cur.take_number(), cur.take_number(), cur.take_number()
    cur.take_keyword("scale")
    scale = cur.take_number()
    cur.take_keyword("dist")
    dist_pos, dist_neg = cur.take_number(), cur.take_number()
    cur.take_keyword("op")
    bool_op = cur.take_enum(BOOL_OPS, "boolean op")
    cur.take_keyword("ext")
    extent = cur.take_enum(EXTENTS, "extent")
    return Extrusion(theta, phi, gamma, ox, oy, oz, scale, dist_pos, dist_neg, bool_op, extent)


def _parse_se(cur: _Cursor) -> SePair:
    cur.take_keyword("sketch")
    faces = []
    while cur.peek() == "face":
        faces.append(_parse_face(cur))
    if not faces:
        raise EmptyLoop("sketch has no faces", min(cur.i, cur._eof_index()))
    cur.take_keyword("extrude")
    extrusion = _parse_extrusion(cur)
    return SePair(Sketch(tuple(faces)), extrusion)


def parse(text: str) -> CadModel:
    """Parse a serialized model.

    Raises a ParseError subclass carrying the 0-based index of the first
    offending token.  ``parse(serialize(m)) == m`` for every valid model.
    """
    tokens = tokenize(text)
    cur = _Cursor(tokens)
    if not tokens:
        raise TruncatedSequence("empty input", 0)
    ses = [_parse_se(cur)]
    while cur.peek() == "sketch":
        ses.append(_parse_se(cur))
    cur.take_keyword(EOM_TOKEN)
    if cur.peek() is not None:
        raise UnknownKeyword(f"trailing token '{cur.peek()}' after {EOM_TOKEN}", cur.i)
    return CadModel(tuple(ses))


def parse_se_fragment(text: str) -> SePair:
    """Parse a single "sketch ... ext X" fragment (no <eom>)."""
    cur = _Cursor(tokenize(text))
    se = _parse_se(cur)
    if cur.peek() is not None:
        raise UnknownKeyword(f"trailing token '{cur.peek()}'", cur.i)
    return se


def parse_loop_fragment(text: str) -> Loop:
    """Parse a single "loop ..." fragment."""
    cur = _Cursor(tokenize(text))
    loop = _parse_loop(cur)
    if cur.peek() is not None:
        raise UnknownKeyword(f"trailing token '{cur.peek()}'", cur.i)
    return loop


# ---------------------------------------------------------------------------
# Serialization


def _curve_tokens(curve: Curve):
    if isinstance(curve, Line):
        return ["line", str(curve.end_x), str(curve.end_y)]
    if isinstance(curve, Arc):
        return ["arc", str(curve.end_x), str(curve.end_y), str(curve.mid_x), str(curve.mid_y)]
    return ["circle", str(curve.center_x), str(curve.center_y), str(curve.radius)]


def se_tokens(se: SePair) -> list[str]:
    out = ["sketch"]
    for face in se.sketch.faces:
        out.append("face")
        for loop in face.loops:
            out.append("loop")
            for curve in loop.curves:
                out.extend(_curve_tokens(curve))
    e = se.extrusion
    out.extend(
        [
            "extrude",
            "theta", str(e.theta),
            "phi", str(e.phi),
            "gamma", str(e.gamma),
            "origin", str(e.origin_x), str(e.origin_y), str(e.origin_z),
            "scale", str(e.scale),
            "dist", str(e.dist_pos), str(e.dist_neg),
            "op", e.bool_op,
            "ext", e.extent,
        ]
    )
    return out


def loop_text(loop: Loop) -> str:
    out = ["loop"]
    for curve in loop.curves:
        out.extend(_curve_tokens(curve))
    return detokenize(out)


def se_text(se: SePair) -> str:
    return detokenize(se_tokens(se))


def serialize(model: CadModel) -> str:
    """Canonical single-space-separated text, always terminated by <eom>."""
    out = []
    for se in model.ses:
        out.extend(se_tokens(se))
    out.append(EOM_TOKEN)
    return detokenize(out)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class ValidationConfig:
    max_se: int | None = 3
    max_tokens: int | None = 1024


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    is_valid: bool
    errors: tuple[ValidationIssue, ...] = ()

    def codes(self):
        return [e.code for e in self.errors]


def _check_range(issues, path, name, value):
    if not isinstance(value, int) or isinstance(value, bool) or not (QUANT_MIN <= value <= QUANT_MAX):
        issues.append(ValidationIssue("OutOfRange", f"{path}.{name}", f"{name}={value!r} outside [0, 255]"))


def _validate_loop(issues, path, loop: Loop):
    if not loop.curves:
        issues.append(ValidationIssue("EmptyLoop", path, "loop has no curves"))
        return
    has_circle = any(isinstance(c, Circle) for c in loop.curves)
    if has_circle and len(loop.curves) != 1:
        issues.append(ValidationIssue("CircleNotAlone", path, "a circle must be the only curve in its loop"))
    if not has_circle and len(loop.curves) < 3:
        issues.append(
            ValidationIssue("TooFewCurves", path, "a non-circle loop needs at least 3 endpoints after closure")
        )
    for ci, curve in enumerate(loop.curves):
        cpath = f"{path}.curves[{ci}]"
        for f in fields(curve):
            _check_range(issues, cpath, f.name, getattr(curve, f.name))
        if isinstance(curve, Circle) and isinstance(curve.radius, int) and curve.radius < 1:
            issues.append(ValidationIssue("RadiusTooSmall", cpath, "circle radius must be >= 1"))


def validate(model: CadModel, config: ValidationConfig = ValidationConfig()) -> ValidationReport:
    """Check every structural invariant plus the config limits.

    All violations are reported, not only the first; errors here are data,
    not exceptions.
    """
    issues: list[ValidationIssue] = []
    if not model.ses:
        return ValidationReport(False, (ValidationIssue("EmptyModel", "ses", "model has no SE pairs"),))
    if config.max_se is not None and len(model.ses) > config.max_se:
        issues.append(
            ValidationIssue("TooManySe", "ses", f"{len(model.ses)} SE pairs exceed the limit of {config.max_se}")
        )
    for si, se in enumerate(model.ses):
        spath = f"ses[{si}]"
        if not se.sketch.faces:
            issues.append(ValidationIssue("EmptySketch", f"{spath}.sketch", "sketch has no faces"))
        for fi, face in enumerate(se.sketch.faces):
            fpath = f"{spath}.sketch.faces[{fi}]"
            if not face.loops:
                issues.append(ValidationIssue("EmptyFace", fpath, "face has no loops"))
            for li, loop in enumerate(face.loops):
                _validate_loop(issues, f"{fpath}.loops[{li}]", loop)
        e = se.extrusion
        epath = f"{spath}.extrusion"
        for name in ("theta", "phi", "gamma", "origin_x", "origin_y", "origin_z", "scale", "dist_pos", "dist_neg"):
            _check_range(issues, epath, name, getattr(e, name))
        if e.bool_op not in BOOL_OPS:
            issues.append(ValidationIssue("BadEnum", f"{epath}.bool_op", f"unknown bool_op {e.bool_op!r}"))
        if e.extent not in EXTENTS:
            issues.append(ValidationIssue("BadEnum", f"{epath}.extent", f"unknown extent {e.extent!r}"))
        if si == 0 and e.bool_op != "new":
            issues.append(ValidationIssue("FirstOpNotNew", f"{epath}.bool_op", "the first SE pair must use op new"))
    if config.max_tokens is not None:
        n_tokens = len(tokenize(serialize(model)))
        if n_tokens > config.max_tokens:
            issues.append(
                ValidationIssue("TooLong", "ses", f"serialization has {n_tokens} tokens > {config.max_tokens}")
            )
    return ValidationReport(not issues, tuple(issues))
