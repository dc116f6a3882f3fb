"""secad: a toolkit for text-driven editing of sketch-and-extrude CAD models.

Subsystems: the sequence grammar (cad_seq), the membership-based geometry
kernel (geometry), LCS masking (masking), rule-based design variations
(variation), instruction synthesis and datasets (captioning), the
locate-then-infill engine (pipeline), the evaluation suite (metrics), and
the CLI / HTTP service layers (cli, service).
"""

from . import errors
from .cad_seq import (
    CadModel,
    ValidationConfig,
    ValidationReport,
    parse,
    serialize,
    tokenize,
    validate,
)
from .masking import Alignment, MaskedSequence, lcs, make_gt_mask, realize, verify_consistency
from .variation import EditRecord, VariantSet, apply_record, invert_record, make_pairs, perturb, random_model

__version__ = "0.1.0"

__all__ = [
    "errors",
    "CadModel",
    "ValidationConfig",
    "ValidationReport",
    "parse",
    "serialize",
    "tokenize",
    "validate",
    "Alignment",
    "MaskedSequence",
    "lcs",
    "make_gt_mask",
    "realize",
    "verify_consistency",
    "EditRecord",
    "VariantSet",
    "apply_record",
    "invert_record",
    "make_pairs",
    "perturb",
    "random_model",
    "__version__",
]
