"""Batch glue: run the editing pipeline over a test set and score it."""

from __future__ import annotations

import json

from .captioning import load_dataset
from .errors import ArityMismatch, LocatingFailed, SecadError
from .masking import MaskedSequence
from .metrics import EvalConfig, MetricsReport, evaluate
from .pipeline import Candidate, EditResult, ModelBackend, SamplingConfig, edit


def run_pipeline(testset, backend: ModelBackend, k: int = 5, sampling: SamplingConfig | None = None, retries: int = 3):
    """One EditResult per triplet; locating failures become k failed candidates."""
    results = []
    for triplet in testset:
        try:
            results.append(edit(triplet.orig_text, triplet.instruction.text, backend, k=k, sampling=sampling, retries=retries))
        except (LocatingFailed, SecadError) as exc:
            failed = Candidate(edit_text="", parse_ok=False, consistency_ok=False, error=exc.code)
            results.append(EditResult(masked=MaskedSequence(()), candidates=(failed,) * k, k=k))
    return results


def load_results(path, k: int | None = None):
    """Results JSONL: one line per example, {"candidates": [...]}; entries
    may be bare texts or {"edit_text": ...} objects."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            cands = []
            for c in data["candidates"]:
                text = c if isinstance(c, str) else c.get("edit_text", "")
                cands.append(Candidate(edit_text=text, parse_ok=True, consistency_ok=True))
            out.append(EditResult(masked=MaskedSequence(()), candidates=tuple(cands), k=len(cands)))
    if k is not None:
        for r in out:
            if r.k != k:
                raise ArityMismatch(f"results carry {r.k} candidates, expected {k}")
    return out


def save_results(results, path):
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")


def evaluate_files(
    testset_path,
    results_path=None,
    backend: ModelBackend | None = None,
    k: int = 5,
    sampling: SamplingConfig | None = None,
    seed: int = 0,
    n_points: int = 2000,
    embedding_backend=None,
) -> MetricsReport:
    """Score a testset from a results file, or by running the pipeline."""
    testset = load_dataset(testset_path)
    if results_path:
        results = load_results(results_path)
    else:
        if backend is None:
            raise ArityMismatch("need either a results file or a model backend")
        results = run_pipeline(testset, backend, k=k, sampling=sampling)
    cfg = EvalConfig(n_points=n_points, seed=seed, embedding_backend=embedding_backend)
    return evaluate(testset, results, cfg)
