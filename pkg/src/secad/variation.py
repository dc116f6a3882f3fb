"""Rule-based design variations with machine-readable ground-truth diffs.

Every perturbation yields an EditRecord that re-applies exactly: feeding
the record and the original model to apply_record reproduces the edited
model token for token.  Records invert (add <-> delete, old <-> new), so
pair construction can reverse roles or chain two variants.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace

from .cad_seq import (
    Arc,
    CadModel,
    Circle,
    Extrusion,
    Face,
    Line,
    Loop,
    SePair,
    Sketch,
    ValidationConfig,
    loop_text,
    parse_loop_fragment,
    parse_se_fragment,
    se_text,
    serialize,
    validate,
)
from .errors import InvalidInput, NoApplicableEdit, NotEnoughVariants

EDIT_KINDS = (
    "add_se",
    "delete_se",
    "replace_primitive",
    "scale_loop",
    "translate_sketch",
    "change_extrude_dist",
    "change_bool_op",
)

PAIR_STRATEGIES = ("base_to_variant", "variant_to_base", "variant_to_variant")

_JITTERS = (16, 32, 64)
_SCALE_FACTORS = (0.5, 0.75, 1.5, 2.0)
_MAX_ATTEMPTS = 40


@dataclass(frozen=True)
class EditRecord:
    kind: str
    target: str
    old: object = None
    new: object = None
    shape: str = ""
    info: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "kind": self.kind,
            "target": self.target,
            "old": self.old,
            "new": self.new,
            "shape": self.shape,
            "info": dict(self.info),
        }

    @classmethod
    def from_json(cls, data):
        if data.get("kind") == "composite":
            return CompositeRecord.from_json(data)
        return cls(
            kind=data["kind"],
            target=data["target"],
            old=data.get("old"),
            new=data.get("new"),
            shape=data.get("shape", ""),
            info=dict(data.get("info", {})),
        )


@dataclass(frozen=True)
class CompositeRecord:
    """Two or more records applied in order (variant-to-variant pairs)."""

    steps: tuple[EditRecord, ...]
    kind: str = "composite"

    @property
    def shapes(self):
        return tuple(s.shape for s in self.steps)

    def to_json(self):
        return {"kind": "composite", "steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, data):
        return cls(steps=tuple(EditRecord.from_json(s) for s in data["steps"]))


def record_from_json(data):
    return EditRecord.from_json(data)


@dataclass(frozen=True)
class VariantSet:
    base: CadModel
    variants: tuple[CadModel, ...]
    records: tuple[EditRecord, ...]


@dataclass(frozen=True)
class VariationConfig:
    max_se: int = 3
    max_tokens: int = 1024
    check_geometry: bool = True
    probe_grid: int = 16

    def validation(self):
        return ValidationConfig(max_se=self.max_se, max_tokens=self.max_tokens)


# ---------------------------------------------------------------------------
# Shape classification (feeds the template captioner)


def classify_loop(loop: Loop) -> str:
    if isinstance(loop.curves[0], Circle):
        return "circle"
    if len(loop.curves) == 4 and all(isinstance(c, Line) for c in loop.curves):
        return "rectangle"
    return "polygon"


def classify_se(se: SePair) -> str:
    outer = classify_loop(se.sketch.faces[0].loops[0])
    if outer == "circle":
        return "cylinder"
    if outer == "rectangle":
        return "block"
    return "prism"


# ---------------------------------------------------------------------------
# Record application


def _se_index(target: str) -> int:
    m = re.match(r"ses\[(\d+)\]", target)
    if not m:
        raise InvalidInput(f"bad record target {target!r}")
    return int(m.group(1))


def _loop_path(target: str):
    m = re.match(r"ses\[(\d+)\]\.sketch\.faces\[(\d+)\]\.loops\[(\d+)\]$", target)
    if not m:
        raise InvalidInput(f"bad loop target {target!r}")
    return tuple(int(g) for g in m.groups())


def _with_se(model: CadModel, i: int, se: SePair) -> CadModel:
    ses = list(model.ses)
    ses[i] = se
    return CadModel(tuple(ses))


def _with_loop(model: CadModel, i: int, j: int, k: int, loop: Loop) -> CadModel:
    se = model.ses[i]
    faces = list(se.sketch.faces)
    loops = list(faces[j].loops)
    loops[k] = loop
    faces[j] = Face(tuple(loops))
    return _with_se(model, i, SePair(Sketch(tuple(faces)), se.extrusion))


def _expect(actual, recorded, what):
    if recorded is not None and actual != recorded:
        raise InvalidInput(f"record mismatch on {what}: found {actual!r}, recorded {recorded!r}")


def apply_record(model: CadModel, record) -> CadModel:
    """Apply an EditRecord (or CompositeRecord) to a model."""
    if isinstance(record, CompositeRecord):
        for step in record.steps:
            model = apply_record(model, step)
        return model

    kind = record.kind
    if kind == "add_se":
        i = _se_index(record.target)
        if not 0 <= i <= len(model.ses):
            raise InvalidInput(f"add_se index {i} out of range")
        ses = list(model.ses)
        ses.insert(i, parse_se_fragment(record.new))
        return CadModel(tuple(ses))
    if kind == "delete_se":
        i = _se_index(record.target)
        if not 0 <= i < len(model.ses):
            raise InvalidInput(f"delete_se index {i} out of range")
        _expect(se_text(model.ses[i]), record.old, record.target)
        ses = list(model.ses)
        del ses[i]
        if not ses:
            raise InvalidInput("delete_se would empty the model")
        return CadModel(tuple(ses))
    if kind in ("replace_primitive", "scale_loop"):
        i, j, k = _loop_path(record.target)
        _expect(loop_text(model.ses[i].sketch.faces[j].loops[k]), record.old, record.target)
        return _with_loop(model, i, j, k, parse_loop_fragment(record.new))
    if kind == "translate_sketch":
        i = _se_index(record.target)
        e = model.ses[i].extrusion
        _expect([e.origin_x, e.origin_y, e.origin_z], list(record.old), record.target)
        nx, ny, nz = record.new
        e2 = replace(e, origin_x=nx, origin_y=ny, origin_z=nz)
        return _with_se(model, i, SePair(model.ses[i].sketch, e2))
    if kind == "change_extrude_dist":
        m = re.match(r"ses\[(\d+)\]\.extrusion\.(dist_pos|dist_neg)$", record.target)
        if not m:
            raise InvalidInput(f"bad dist target {record.target!r}")
        i, fieldname = int(m.group(1)), m.group(2)
        e = model.ses[i].extrusion
        _expect(getattr(e, fieldname), record.old, record.target)
        e2 = replace(e, **{fieldname: record.new})
        return _with_se(model, i, SePair(model.ses[i].sketch, e2))
    if kind == "change_bool_op":
        i = _se_index(record.target)
        e = model.ses[i].extrusion
        _expect(e.bool_op, record.old, record.target)
        return _with_se(model, i, SePair(model.ses[i].sketch, replace(e, bool_op=record.new)))
    raise InvalidInput(f"unknown edit kind {kind!r}")


def invert_record(record):
    """The record that undoes this one (add <-> delete, old <-> new)."""
    if isinstance(record, CompositeRecord):
        return CompositeRecord(steps=tuple(invert_record(s) for s in reversed(record.steps)))
    info = dict(record.info)
    if "factor" in info:
        info["factor"] = 1.0 / info["factor"]
    if "delta" in info:
        info["delta"] = -info["delta"]
    if "old_shape" in info:
        info["old_shape"], info["new_shape"] = info["new_shape"], info["old_shape"]
    shape = record.shape
    if record.kind == "add_se":
        return EditRecord("delete_se", record.target, old=record.new, shape=shape, info=info)
    if record.kind == "delete_se":
        return EditRecord("add_se", record.target, new=record.old, shape=shape, info=info)
    if record.kind == "replace_primitive":
        shape = info.get("old_shape", shape)
    return EditRecord(record.kind, record.target, old=record.new, new=record.old, shape=shape, info=info)


# ---------------------------------------------------------------------------
# Individual perturbations (each may return None to reject the attempt)


def _bbox_of_loop(loop: Loop):
    xs, ys = [], []
    for c in loop.curves:
        if isinstance(c, Circle):
            xs.extend([c.center_x - c.radius, c.center_x + c.radius])
            ys.extend([c.center_y - c.radius, c.center_y + c.radius])
        else:
            xs.append(c.end_x)
            ys.append(c.end_y)
            if isinstance(c, Arc):
                xs.append(c.mid_x)
                ys.append(c.mid_y)
    return min(xs), min(ys), max(xs), max(ys)


def _rect_loop(x0, y0, x1, y1) -> Loop:
    return Loop(
        (
            Line(x1, y0),
            Line(x1, y1),
            Line(x0, y1),
            Line(x0, y0),
        )
    )


def _pick_loop(model, rng):
    paths = []
    for i, se in enumerate(model.ses):
        for j, face in enumerate(se.sketch.faces):
            for k in range(len(face.loops)):
                paths.append((i, j, k))
    return paths[rng.randrange(len(paths))]


def _edit_add_se(model, rng, config):
    if len(model.ses) >= config.max_se:
        return None
    anchor = model.ses[rng.randrange(len(model.ses))]
    ae = anchor.extrusion
    op = rng.choice(["join", "cut"])
    cx = 128 + rng.randint(-24, 24)
    cy = 128 + rng.randint(-24, 24)
    if rng.random() < 0.5:
        r = rng.randint(12, 36)
        loop = Loop((Circle(cx, cy, r),))
    else:
        hx, hy = rng.randint(12, 36), rng.randint(12, 36)
        loop = _rect_loop(cx - hx, cy - hy, cx + hx, cy + hy)
    jitter = lambda v, lim: min(255, max(0, v + rng.randint(-lim, lim)))
    e = Extrusion(
        theta=ae.theta,
        phi=ae.phi,
        gamma=ae.gamma,
        origin_x=jitter(ae.origin_x, 16),
        origin_y=jitter(ae.origin_y, 16),
        origin_z=jitter(ae.origin_z, 16),
        scale=max(48, ae.scale - rng.choice([16, 32, 48])) if op == "cut" else jitter(ae.scale, 16),
        dist_pos=rng.randint(150, 224),
        dist_neg=128,
        bool_op=op,
        extent="one",
    )
    se = SePair(Sketch((Face((loop,)),)), e)
    index = rng.randint(1, len(model.ses))
    ses = list(model.ses)
    ses.insert(index, se)
    edited = CadModel(tuple(ses))
    record = EditRecord(
        "add_se", f"ses[{index}]", new=se_text(se), shape=classify_se(se), info={"bool_op": op}
    )
    return edited, record


def _edit_delete_se(model, rng, config):
    if len(model.ses) < 2:
        return None
    index = rng.randint(1, len(model.ses) - 1)
    se = model.ses[index]
    ses = list(model.ses)
    del ses[index]
    record = EditRecord(
        "delete_se", f"ses[{index}]", old=se_text(se), shape=classify_se(se), info={"bool_op": se.extrusion.bool_op}
    )
    return CadModel(tuple(ses)), record


def _edit_replace_primitive(model, rng, config):
    i, j, k = _pick_loop(model, rng)
    loop = model.ses[i].sketch.faces[j].loops[k]
    x0, y0, x1, y1 = _bbox_of_loop(loop)
    old_shape = classify_loop(loop)
    if old_shape == "circle":
        new_loop = _rect_loop(x0, y0, x1, y1)
    else:
        r = min(x1 - x0, y1 - y0) // 2
        if r < 1:
            return None
        new_loop = Loop((Circle((x0 + x1) // 2, (y0 + y1) // 2, r),))
    new_shape = classify_loop(new_loop)
    edited = _with_loop(model, i, j, k, new_loop)
    record = EditRecord(
        "replace_primitive",
        f"ses[{i}].sketch.faces[{j}].loops[{k}]",
        old=loop_text(loop),
        new=loop_text(new_loop),
        shape=old_shape,
        info={"old_shape": old_shape, "new_shape": new_shape},
    )
    return edited, record


def _scale_coord(v, center, factor):
    return int(round(center + factor * (v - center)))


def _edit_scale_loop(model, rng, config):
    i, j, k = _pick_loop(model, rng)
    loop = model.ses[i].sketch.faces[j].loops[k]
    factor = rng.choice(_SCALE_FACTORS)
    x0, y0, x1, y1 = _bbox_of_loop(loop)
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    curves = []
    for c in loop.curves:
        if isinstance(c, Circle):
            r = int(round(c.radius * factor))
            if r < 1:
                return None
            curves.append(Circle(_scale_coord(c.center_x, cx, factor), _scale_coord(c.center_y, cy, factor), r))
        elif isinstance(c, Arc):
            curves.append(
                Arc(
                    _scale_coord(c.end_x, cx, factor),
                    _scale_coord(c.end_y, cy, factor),
                    _scale_coord(c.mid_x, cx, factor),
                    _scale_coord(c.mid_y, cy, factor),
                )
            )
        else:
            curves.append(Line(_scale_coord(c.end_x, cx, factor), _scale_coord(c.end_y, cy, factor)))
    new_loop = Loop(tuple(curves))
    nx0, ny0, nx1, ny1 = _bbox_of_loop(new_loop)
    if nx0 < 0 or ny0 < 0 or nx1 > 255 or ny1 > 255:
        return None
    if loop_text(new_loop) == loop_text(loop):
        return None
    edited = _with_loop(model, i, j, k, new_loop)
    record = EditRecord(
        "scale_loop",
        f"ses[{i}].sketch.faces[{j}].loops[{k}]",
        old=loop_text(loop),
        new=loop_text(new_loop),
        shape=classify_loop(loop),
        info={"factor": factor},
    )
    return edited, record


def _edit_translate_sketch(model, rng, config):
    i = rng.randrange(len(model.ses))
    e = model.ses[i].extrusion
    axis = rng.choice(["x", "y", "z"])
    delta = rng.choice(_JITTERS) * rng.choice([-1, 1])
    old = [e.origin_x, e.origin_y, e.origin_z]
    new = list(old)
    ai = "xyz".index(axis)
    new[ai] = old[ai] + delta
    if not 0 <= new[ai] <= 255:
        return None
    e2 = replace(e, origin_x=new[0], origin_y=new[1], origin_z=new[2])
    edited = _with_se(model, i, SePair(model.ses[i].sketch, e2))
    record = EditRecord(
        "translate_sketch",
        f"ses[{i}]",
        old=old,
        new=new,
        shape=classify_se(model.ses[i]),
        info={"axis": axis, "delta": delta},
    )
    return edited, record


def _edit_change_extrude_dist(model, rng, config):
    from .geometry.solid import sweep_interval

    i = rng.randrange(len(model.ses))
    e = model.ses[i].extrusion
    fieldname = "dist_neg" if (e.extent == "two" and rng.random() < 0.5) else "dist_pos"
    old = getattr(e, fieldname)
    delta = rng.choice(_JITTERS) * rng.choice([-1, 1])
    new = old + delta
    if not 0 <= new <= 255:
        return None
    e2 = replace(e, **{fieldname: new})
    try:
        lo0, hi0 = sweep_interval(e)
        lo1, hi1 = sweep_interval(e2)
    except Exception:
        return None
    edited = _with_se(model, i, SePair(model.ses[i].sketch, e2))
    record = EditRecord(
        "change_extrude_dist",
        f"ses[{i}].extrusion.{fieldname}",
        old=old,
        new=new,
        shape=classify_se(model.ses[i]),
        info={"grew": bool(hi1 - lo1 > hi0 - lo0)},
    )
    return edited, record


def _edit_change_bool_op(model, rng, config):
    if len(model.ses) < 2:
        return None
    i = rng.randint(1, len(model.ses) - 1)
    e = model.ses[i].extrusion
    options = [op for op in ("join", "cut", "intersect") if op != e.bool_op]
    new = rng.choice(options)
    edited = _with_se(model, i, SePair(model.ses[i].sketch, replace(e, bool_op=new)))
    record = EditRecord(
        "change_bool_op",
        f"ses[{i}]",
        old=e.bool_op,
        new=new,
        shape=classify_se(model.ses[i]),
    )
    return edited, record


_EDITORS = {
    "add_se": _edit_add_se,
    "delete_se": _edit_delete_se,
    "replace_primitive": _edit_replace_primitive,
    "scale_loop": _edit_scale_loop,
    "translate_sketch": _edit_translate_sketch,
    "change_extrude_dist": _edit_change_extrude_dist,
    "change_bool_op": _edit_change_bool_op,
}


def _applicable_kinds(model, config):
    kinds = []
    for kind in EDIT_KINDS:
        if kind == "add_se" and len(model.ses) >= config.max_se:
            continue
        if kind in ("delete_se", "change_bool_op") and len(model.ses) < 2:
            continue
        kinds.append(kind)
    return kinds


def _geometry_ok(model, config):
    if not config.check_geometry:
        return True
    from .geometry import assemble
    from .geometry.sampling import has_material

    try:
        return has_material(assemble(model), grid=config.probe_grid)
    except Exception:
        return False


def perturb(model: CadModel, seed: int, kind: str | None = None, config: VariationConfig = VariationConfig()):
    """One structural edit; returns (edited model, EditRecord).

    Deterministic in (model, seed).  With ``kind`` omitted, a kind is drawn
    uniformly among those applicable to this model on each attempt.
    """
    if kind is not None and kind not in EDIT_KINDS:
        raise InvalidInput(f"unknown edit kind {kind!r}")
    rng = random.Random(seed)
    applicable = _applicable_kinds(model, config)
    if kind is not None and kind not in applicable:
        raise NoApplicableEdit(f"{kind} is not applicable to this model")
    if not applicable:
        raise NoApplicableEdit("no edit kind applies to this model")
    base_text = serialize(model)
    for _ in range(_MAX_ATTEMPTS):
        chosen = kind or rng.choice(applicable)
        out = _EDITORS[chosen](model, rng, config)
        if out is None:
            continue
        edited, record = out
        if serialize(edited) == base_text:
            continue
        if not validate(edited, config.validation()).is_valid:
            continue
        if not _geometry_ok(edited, config):
            continue
        return edited, record
    raise NoApplicableEdit(f"no valid {kind or 'edit'} found after {_MAX_ATTEMPTS} attempts")


def make_variant_set(base: CadModel, k: int, seed: int, config: VariationConfig = VariationConfig()) -> VariantSet:
    variants = []
    records = []
    for v in range(k):
        edited, record = perturb(base, seed=seed * 7919 + v, config=config)
        variants.append(edited)
        records.append(record)
    return VariantSet(base=base, variants=tuple(variants), records=tuple(records))


def make_pairs(vset: VariantSet, strategy: str):
    """(original, edited, record) triples under one pairing strategy."""
    if strategy not in PAIR_STRATEGIES:
        raise InvalidInput(f"unknown strategy {strategy!r}")
    k = len(vset.variants)
    if k < 1 or (strategy == "variant_to_variant" and k < 2):
        raise NotEnoughVariants(f"{strategy} needs {'2' if strategy == 'variant_to_variant' else '1'}+ variants")
    if strategy == "base_to_variant":
        return [(vset.base, v, r) for v, r in zip(vset.variants, vset.records)]
    if strategy == "variant_to_base":
        return [(v, vset.base, invert_record(r)) for v, r in zip(vset.variants, vset.records)]
    pairs = []
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            record = CompositeRecord(steps=(invert_record(vset.records[a]), vset.records[b]))
            pairs.append((vset.variants[a], vset.variants[b], record))
    return pairs


# ---------------------------------------------------------------------------
# Procedural base models (desk-scale stand-in for a CAD corpus)


def _random_outer(rng):
    style = rng.random()
    cx, cy = 128 + rng.randint(-24, 24), 128 + rng.randint(-24, 24)
    if style < 0.35:
        r = rng.randint(16, 48)
        return Loop((Circle(cx, cy, r),)), ("circle", cx, cy, r)
    hx, hy = rng.randint(24, 56), rng.randint(24, 56)
    x0, y0, x1, y1 = cx - hx, cy - hy, cx + hx, cy + hy
    if style < 0.75:
        return _rect_loop(x0, y0, x1, y1), ("rect", cx, cy, min(hx, hy))
    bulge = rng.randint(8, 20)
    mid = (max(0, x0 - bulge), (y0 + y1) // 2)
    loop = Loop(
        (
            Line(x1, y0),
            Line(x1, y1),
            Line(x0, y1),
            Arc(x0, y0, mid[0], mid[1]),
        )
    )
    return loop, ("arc", cx, cy, min(hx, hy))


def _random_face(rng):
    outer, (kind, cx, cy, reach) = _random_outer(rng)
    loops = [outer]
    if kind in ("circle", "rect") and reach >= 14 and rng.random() < 0.3:
        hole_r = rng.randint(4, max(4, reach - 10))
        loops.append(Loop((Circle(cx, cy, hole_r),)))
    return Face(tuple(loops))


def _random_extrusion(rng, first):
    if rng.random() < 0.5:
        theta, phi, gamma = 0, 0, 0
    else:
        theta, phi, gamma = rng.randint(0, 255), rng.randint(0, 255), rng.randint(0, 255)
    extent = rng.choices(["one", "sym", "two"], weights=[0.6, 0.25, 0.15])[0]
    op = "new" if first else rng.choices(["join", "cut"], weights=[0.6, 0.4])[0]
    return Extrusion(
        theta=theta,
        phi=phi,
        gamma=gamma,
        origin_x=128 + rng.randint(-40, 40),
        origin_y=128 + rng.randint(-40, 40),
        origin_z=128 + rng.randint(-40, 40),
        scale=rng.randint(64, 112) if op == "cut" else rng.randint(96, 160),
        dist_pos=rng.randint(150, 224),
        dist_neg=rng.randint(150, 224) if extent == "two" else 128,
        bool_op=op,
        extent=extent,
    )


def random_model(rng: random.Random, config: VariationConfig = VariationConfig()) -> CadModel:
    """A random structurally valid model with 1..max_se SE pairs.

    When ``config.check_geometry`` is set the model is also guaranteed to
    enclose material on a coarse probe grid.
    """
    for _ in range(_MAX_ATTEMPTS):
        n_se = rng.choices(range(1, config.max_se + 1), weights=[0.5, 0.3, 0.2][: config.max_se])[0]
        ses = []
        for s in range(n_se):
            ses.append(SePair(Sketch((_random_face(rng),)), _random_extrusion(rng, s == 0)))
        model = CadModel(tuple(ses))
        if not validate(model, config.validation()).is_valid:
            continue
        if not _geometry_ok(model, config):
            continue
        return model
    raise NoApplicableEdit("random model generation failed repeatedly")
