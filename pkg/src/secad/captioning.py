"""Editing-instruction generation, triplet filtering, and dataset assembly.

The default captioner is deterministic: it turns ground-truth EditRecords
into short imperative sentences, so synthesized instructions are correct
by construction.  External vision/language backends can be plugged in via
the CaptionBackend interface; both paths run the same three-step scheme
(describe each model, identify the differences, compress them).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace as _dc_replace
from importlib import resources

from .cad_seq import CadModel, parse, serialize, tokenize
from .errors import DuplicateTriplet, EmptyCompletion, InvalidInput
from .masking import MaskedSequence, make_gt_mask
from .variation import (
    CompositeRecord,
    EditRecord,
    VariationConfig,
    classify_loop,
    classify_se,
    make_pairs,
    make_variant_set,
    random_model,
    record_from_json,
)

MODALITIES = ("visual", "sequence", "template")
SPLITS = ("train", "val", "test")

_SOURCE_BY_MODALITY = {"template": "template", "visual": "lvlm-visual", "sequence": "llm-sequence"}
_MODALITY_BY_SOURCE = {v: k for k, v in _SOURCE_BY_MODALITY.items()}

NOOP_PHRASES = (
    "no transformation is needed",
    "no change is needed",
    "no changes are needed",
    "nothing needs to change",
)


def load_prompt(name: str) -> str:
    return resources.files("secad.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class CaptionSteps:
    descriptions: tuple[str, str]
    raw_diff: str
    compressed: str


@dataclass(frozen=True)
class Instruction:
    text: str
    modality_source: str = "template"
    steps: CaptionSteps | None = None


@dataclass(frozen=True)
class EditTriplet:
    instruction: Instruction
    orig_text: str
    edit_text: str
    gt_mask: MaskedSequence
    record: EditRecord | CompositeRecord | None = None
    split: str = "train"

    def key(self):
        return (self.orig_text, self.instruction.text, self.edit_text)

    def to_json(self):
        return {
            "instruction": self.instruction.text,
            "orig": self.orig_text,
            "edit": self.edit_text,
            "mask": self.gt_mask.text(),
            "record": self.record.to_json() if self.record is not None else None,
            "split": self.split,
            "source": _SOURCE_BY_MODALITY[self.instruction.modality_source],
        }

    @classmethod
    def from_json(cls, data):
        record = data.get("record")
        return cls(
            instruction=Instruction(
                text=data["instruction"],
                modality_source=_MODALITY_BY_SOURCE.get(data.get("source", "template"), "template"),
            ),
            orig_text=data["orig"],
            edit_text=data["edit"],
            gt_mask=MaskedSequence(tuple(tokenize(data["mask"]))),
            record=record_from_json(record) if record else None,
            split=data.get("split", "train"),
        )


# ---------------------------------------------------------------------------
# Model descriptions and record templates


def describe_model(model: CadModel) -> str:
    """Deterministic structural summary of a model."""
    parts = []
    for i, se in enumerate(model.ses):
        shape = classify_se(se)
        holes = sum(len(f.loops) - 1 for f in se.sketch.faces)
        op = se.extrusion.bool_op
        bit = f"a {shape}"
        if holes:
            bit += f" with {holes} hole{'s' if holes > 1 else ''}"
        if i > 0:
            bit += f" ({op})"
        parts.append(bit)
    return f"The model has {len(model.ses)} sketch-and-extrude step{'s' if len(model.ses) > 1 else ''}: " + ", ".join(parts) + "."


def _sentence_add(record):
    if record.info.get("bool_op") == "cut":
        return f"Cut a {record.shape} shaped hole into the model."
    return f"Add a {record.shape}."


def _sentence_delete(record):
    return f"Remove the {record.shape}."


def _sentence_replace(record):
    old = record.info.get("old_shape", record.shape)
    new = record.info.get("new_shape", "shape")
    return f"Replace the {old} with a {new}."


def _sentence_scale(record):
    factor = record.info.get("factor", 1.0)
    verb = "Enlarge" if factor > 1.0 else "Shrink"
    return f"{verb} the {record.shape} to {factor:g} times its size."


def _sentence_translate(record):
    axis = record.info.get("axis", "x")
    delta = record.info.get("delta", 0)
    direction = "positive" if delta >= 0 else "negative"
    return f"Move the {record.shape} along the {direction} {axis}-axis by {abs(delta)} units."


def _sentence_dist(record):
    verb = "Increase" if record.info.get("grew", record.new > record.old) else "Decrease"
    return f"{verb} the extrusion height of the {record.shape}."


def _sentence_bool(record):
    return f"Change the {record.shape} from a {record.old} operation to a {record.new} operation."


_TEMPLATES = {
    "add_se": _sentence_add,
    "delete_se": _sentence_delete,
    "replace_primitive": _sentence_replace,
    "scale_loop": _sentence_scale,
    "translate_sketch": _sentence_translate,
    "change_extrude_dist": _sentence_dist,
    "change_bool_op": _sentence_bool,
}


def template_sentence(record) -> str:
    if isinstance(record, CompositeRecord):
        return " ".join(template_sentence(step) for step in record.steps)
    return _TEMPLATES[record.kind](record)


# ---------------------------------------------------------------------------
# Caption backends


class CaptionBackend:
    """Interface for difference-summarization backends."""

    def describe_image(self, image_png: bytes, prompt: str) -> str:
        raise NotImplementedError

    def describe_sequence(self, text: str, prompt: str) -> str:
        raise NotImplementedError

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


class HttpCaptionBackend(CaptionBackend):
    """Client for a hosted vision/language model.

    Wire format: POST {"prompt": str, "images": [b64 png, ...]?} -> {"text": str}.
    """

    def __init__(self, url: str, token: str = "", timeout: float = 120.0, max_retries: int = 3):
        self.url = url
        self.token = token
        self.timeout = timeout
        self.max_retries = max_retries

    def _post(self, payload) -> str:
        import time

        import httpx

        from .errors import BackendUnavailable

        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        last = None
        for attempt in range(self.max_retries):
            try:
                resp = httpx.post(self.url, json=payload, headers=headers, timeout=self.timeout)
                if resp.status_code == 200:
                    return resp.json()["text"]
                last = f"HTTP {resp.status_code}"
            except Exception as exc:
                last = str(exc)
            time.sleep(0.5 * 2**attempt)
        raise BackendUnavailable(f"caption backend at {self.url} failed: {last}")

    def describe_image(self, image_png, prompt):
        import base64

        return self._post({"prompt": prompt, "images": [base64.b64encode(image_png).decode("ascii")]})

    def describe_sequence(self, text, prompt):
        return self._post({"prompt": prompt})

    def complete(self, prompt):
        return self._post({"prompt": prompt})


class TemplateCaptioner(CaptionBackend):
    """Pure, deterministic backend driven by model structure alone."""

    def describe_image(self, image_png, prompt):
        return f"A rendered CAD model ({len(image_png)} bytes of image data)."

    def describe_sequence(self, text, prompt):
        return describe_model(parse(text))

    def complete(self, prompt):
        return prompt.rsplit(":", 1)[-1].strip()


def _structural_diff(orig: CadModel, edit: CadModel):
    """Best-effort EditRecord when no ground-truth record is available."""
    if len(edit.ses) > len(orig.ses):
        for i in range(len(edit.ses)):
            if i >= len(orig.ses) or serialize(CadModel((orig.ses[i],))) != serialize(CadModel((edit.ses[i],))):
                se = edit.ses[i]
                return EditRecord("add_se", f"ses[{i}]", shape=classify_se(se), info={"bool_op": se.extrusion.bool_op})
    if len(edit.ses) < len(orig.ses):
        for i in range(len(orig.ses)):
            if i >= len(edit.ses) or serialize(CadModel((orig.ses[i],))) != serialize(CadModel((edit.ses[i],))):
                return EditRecord("delete_se", f"ses[{i}]", shape=classify_se(orig.ses[i]))
    for i, (a, b) in enumerate(zip(orig.ses, edit.ses)):
        ea, eb = a.extrusion, b.extrusion
        if (ea.dist_pos, ea.dist_neg) != (eb.dist_pos, eb.dist_neg):
            grew = abs(eb.dist_pos - 128) + abs(eb.dist_neg - 128) > abs(ea.dist_pos - 128) + abs(ea.dist_neg - 128)
            return EditRecord(
                "change_extrude_dist", f"ses[{i}].extrusion.dist_pos",
                old=ea.dist_pos, new=eb.dist_pos, shape=classify_se(a), info={"grew": grew},
            )
        if (ea.origin_x, ea.origin_y, ea.origin_z) != (eb.origin_x, eb.origin_y, eb.origin_z):
            deltas = [eb.origin_x - ea.origin_x, eb.origin_y - ea.origin_y, eb.origin_z - ea.origin_z]
            ai = max(range(3), key=lambda k: abs(deltas[k]))
            return EditRecord(
                "translate_sketch", f"ses[{i}]",
                old=[ea.origin_x, ea.origin_y, ea.origin_z], new=[eb.origin_x, eb.origin_y, eb.origin_z],
                shape=classify_se(a), info={"axis": "xyz"[ai], "delta": deltas[ai]},
            )
        if ea.bool_op != eb.bool_op:
            return EditRecord("change_bool_op", f"ses[{i}]", old=ea.bool_op, new=eb.bool_op, shape=classify_se(a))
        if a.sketch != b.sketch:
            la = a.sketch.faces[0].loops[0]
            lb = b.sketch.faces[0].loops[0]
            for fa, fb in zip(a.sketch.faces, b.sketch.faces):
                for xa, xb in zip(fa.loops, fb.loops):
                    if xa != xb:
                        la, lb = xa, xb
            return EditRecord(
                "replace_primitive", f"ses[{i}].sketch.faces[0].loops[0]",
                shape=classify_loop(la), info={"old_shape": classify_loop(la), "new_shape": classify_loop(lb)},
            )
    return None


def stepwise_caption(pair, backend: CaptionBackend, modality: str = "sequence", record=None, images=None) -> Instruction:
    """Describe both models, identify the differences, compress them.

    ``pair`` is (original CadModel, edited CadModel).  The template backend
    keys the final sentence on the EditRecord (derived structurally when
    none is given); external backends run the three prompt stages.
    """
    if modality not in ("visual", "sequence"):
        raise InvalidInput(f"unknown modality {modality!r}")
    orig, edit = pair
    orig_text, edit_text = serialize(orig), serialize(edit)

    if isinstance(backend, TemplateCaptioner):
        rec = record if record is not None else _structural_diff(orig, edit)
        if rec is None:
            raise EmptyCompletion("no structural difference found to caption")
        descriptions = (describe_model(orig), describe_model(edit))
        raw_diff = f"Original: {descriptions[0]} Edited: {descriptions[1]}"
        text = template_sentence(rec)
        return Instruction(
            text=text,
            modality_source="template",
            steps=CaptionSteps(descriptions=descriptions, raw_diff=raw_diff, compressed=text),
        )

    if modality == "visual":
        if not images or len(images) != 2:
            raise InvalidInput("visual modality needs rendered images for both models")
        prompt = load_prompt("describe_visual")
        d0 = backend.describe_image(images[0], prompt)
        d1 = backend.describe_image(images[1], prompt)
    else:
        prompt = load_prompt("describe_sequence")
        d0 = backend.describe_sequence(orig_text, prompt.replace("[CAD sequence]", orig_text))
        d1 = backend.describe_sequence(edit_text, prompt.replace("[CAD sequence]", edit_text))
    if not d0.strip() or not d1.strip():
        raise EmptyCompletion("description stage returned empty text")

    diff_prompt = (
        load_prompt("identify_differences")
        .replace("[Original description]", d0)
        .replace("[Edited description]", d1)
        .replace("[Original CAD sequence]", orig_text)
        .replace("[Edited CAD sequence]", edit_text)
    )
    raw_diff = backend.complete(diff_prompt)
    if not raw_diff.strip():
        raise EmptyCompletion("difference stage returned empty text")

    compress_prompt = load_prompt("compress_instruction").replace("[Differences]", raw_diff)
    compressed = backend.complete(compress_prompt)
    if not compressed.strip():
        raise EmptyCompletion("compression stage returned empty text")

    return Instruction(
        text=compressed.strip(),
        modality_source=modality,
        steps=CaptionSteps(descriptions=(d0, d1), raw_diff=raw_diff, compressed=compressed.strip()),
    )


# ---------------------------------------------------------------------------
# Filtering


@dataclass(frozen=True)
class FilterConfig:
    max_sentences: int = 3
    max_masks: int = 5
    noop_phrases: tuple[str, ...] = NOOP_PHRASES


def count_sentences(text: str) -> int:
    return len([s for s in re.split(r"[.!?]+", text) if s.strip()])


def filter_triplet(triplet: EditTriplet, cfg: FilterConfig = FilterConfig()):
    """(accept, reason): sentence, mask-count, and no-op phrase rules."""
    if count_sentences(triplet.instruction.text) > cfg.max_sentences:
        return False, "TooManyInstructions"
    if triplet.gt_mask.mask_count > cfg.max_masks:
        return False, "TooManyMasks"
    lowered = triplet.instruction.text.lower()
    for phrase in cfg.noop_phrases:
        if phrase in lowered:
            return False, "NoOp"
    return True, None


# ---------------------------------------------------------------------------
# Triplets and datasets


def make_triplet(instruction: Instruction, orig: CadModel, edit: CadModel, record=None) -> EditTriplet:
    orig_text, edit_text = serialize(orig), serialize(edit)
    gt = make_gt_mask(tokenize(orig_text), tokenize(edit_text))
    return EditTriplet(instruction=instruction, orig_text=orig_text, edit_text=edit_text, gt_mask=gt, record=record)


def assign_splits(triplets, fractions=(0.9, 0.05, 0.05)):
    """Deterministic split by hash rank of the original text.

    Triplets sharing an original stay in one split; bucket sizes follow the
    fractions up to rounding.
    """
    groups: dict[str, list[int]] = {}
    for i, t in enumerate(triplets):
        groups.setdefault(t.orig_text, []).append(i)
    ranked = sorted(groups, key=lambda text: hashlib.sha1(text.encode("utf-8")).hexdigest())
    total = len(triplets)
    out = list(triplets)
    taken = 0
    cut_train = fractions[0] * total
    cut_val = (fractions[0] + fractions[1]) * total
    for text in ranked:
        members = groups[text]
        if taken < cut_train:
            split = "train"
        elif taken < cut_val:
            split = "val"
        else:
            split = "test"
        for i in members:
            out[i] = _dc_replace(out[i], split=split)
        taken += len(members)
    return out


def assemble_dataset(triplets, out_path=None, fractions=(0.9, 0.05, 0.05)):
    """Assign splits, reject duplicates, and optionally write JSONL."""
    seen = set()
    for t in triplets:
        key = t.key()
        if key in seen:
            raise DuplicateTriplet(f"duplicate triplet for instruction {t.instruction.text!r}")
        seen.add(key)
    out = assign_splits(triplets, fractions)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            for t in out:
                fh.write(json.dumps(t.to_json(), ensure_ascii=False) + "\n")
    return out


def load_dataset(path):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(EditTriplet.from_json(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# End-to-end synthesis


def synthesize(
    count: int,
    seed: int,
    config: VariationConfig = VariationConfig(),
    filter_cfg: FilterConfig = FilterConfig(),
    fractions=(0.9, 0.05, 0.05),
):
    """Deterministic triplet synthesis with the template captioner.

    Bases are procedural; each base gets a couple of variants; pairs cycle
    through the three pairing strategies; everything is filtered and
    deduplicated before split assignment.
    """
    import random as _random

    rng = _random.Random(seed)
    backend = TemplateCaptioner()
    triplets = []
    seen = set()
    group = 0
    while len(triplets) < count:
        group += 1
        base = random_model(rng, config)
        k = rng.choice([1, 2, 2, 3])
        try:
            vset = make_variant_set(base, k=k, seed=rng.randrange(1 << 30), config=config)
        except Exception:
            continue
        strategies = ["base_to_variant"]
        if group % 2 == 0:
            strategies.append("variant_to_base")
        if k >= 2 and group % 3 == 0:
            strategies.append("variant_to_variant")
        for strategy in strategies:
            pairs = make_pairs(vset, strategy)
            if strategy == "variant_to_variant":
                pairs = pairs[:2]
            for orig, edit, record in pairs:
                if len(triplets) >= count:
                    break
                instruction = stepwise_caption((orig, edit), backend, "sequence", record=record)
                triplet = make_triplet(instruction, orig, edit, record)
                ok, _reason = filter_triplet(triplet, filter_cfg)
                # one edit per (original, instruction): keeps supervision
                # unambiguous and scripted replay exact
                key = (triplet.orig_text, triplet.instruction.text)
                if not ok or key in seen:
                    continue
                seen.add(key)
                triplets.append(triplet)
    return assign_splits(triplets, fractions)
