"""Two-stage editing engine: locate the spans to change, then infill them.

The locating stage asks the backend for a masked copy of the original
sequence; inconsistent outputs are rejected and resampled.  The infilling
stage then generates full edited sequences, several per request, each
checked for parseability and for preserving the unmasked spans verbatim.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .cad_seq import CadModel, serialize, tokenize
from .captioning import load_prompt
from .errors import (
    BackendUnavailable,
    InconsistentMask,
    InvalidCandidate,
    InvalidInput,
    LocatingFailed,
    SecadError,
)
from .masking import MaskedSequence, can_realize, verify_consistency
from .store import SessionStore, atomic_write_text


@dataclass(frozen=True)
class SamplingConfig:
    temperature: float = 0.9
    top_p: float = 0.9
    max_tokens: int = 1024
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise InvalidInput("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise InvalidInput("top_p must be in (0, 1]")
        if self.max_tokens <= 0:
            raise InvalidInput("max_tokens must be positive")


class ModelBackend:
    def complete(self, prompt: str, sampling: SamplingConfig) -> str:
        raise NotImplementedError


class HttpBackend(ModelBackend):
    """POST {"prompt", "temperature", "top_p", "max_tokens"} -> {"text"}."""

    def __init__(self, url: str, token: str = "", timeout: float = 60.0, max_retries: int = 3):
        self.url = url
        self.token = token
        self.timeout = timeout
        self.max_retries = max_retries

    def complete(self, prompt, sampling):
        import httpx

        payload = {
            "prompt": prompt,
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "max_tokens": sampling.max_tokens,
        }
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last = None
        for attempt in range(self.max_retries):
            try:
                resp = httpx.post(self.url, json=payload, headers=headers, timeout=self.timeout)
                if resp.status_code == 200:
                    return resp.json()["text"]
                last = f"HTTP {resp.status_code}"
            except Exception as exc:  # connection errors, bad JSON
                last = str(exc)
            time.sleep(0.5 * 2**attempt)
        raise BackendUnavailable(f"backend at {self.url} failed: {last}")


class ScriptedBackend(ModelBackend):
    """Deterministic prompt -> completion map for tests and demos."""

    def __init__(self, responses: dict[str, str] | None = None, fallback=None):
        self.responses = dict(responses or {})
        self.fallback = fallback
        self.calls = 0

    def complete(self, prompt, sampling):
        self.calls += 1
        if prompt in self.responses:
            return self.responses[prompt]
        if self.fallback is not None:
            return self.fallback(prompt, sampling)
        raise BackendUnavailable("scripted backend has no response for this prompt")

    @classmethod
    def from_triplets(cls, triplets) -> "ScriptedBackend":
        """Program ground-truth responses for both stages of each triplet."""
        responses = {}
        for t in triplets:
            lp = build_locating_prompt(t.orig_text, t.instruction.text)
            responses[lp] = t.gt_mask.text()
            ip = build_infilling_prompt(t.orig_text, t.instruction.text, t.gt_mask.text())
            responses[ip] = t.edit_text
        return cls(responses)


class SequenceBackend(ModelBackend):
    """Replays a fixed list of completions in order."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.at = 0

    def complete(self, prompt, sampling):
        if self.at >= len(self.responses):
            raise BackendUnavailable("scripted response list exhausted")
        out = self.responses[self.at]
        self.at += 1
        return out


# ---------------------------------------------------------------------------
# Prompt construction (byte-stable, golden-file tested)

_LOCATING_TEMPLATE = load_prompt("locating")
_INFILLING_TEMPLATE = load_prompt("infilling")


def _as_text(orig) -> str:
    if isinstance(orig, CadModel):
        return serialize(orig)
    return orig


def build_locating_prompt(orig_text, instruction: str) -> str:
    orig_text = _as_text(orig_text)
    if not orig_text.strip() or not instruction.strip():
        raise InvalidInput("original sequence and instruction must be non-empty")
    return _LOCATING_TEMPLATE.replace("[Original CAD sequence]", orig_text).replace(
        "[Textual editing instruction]", instruction
    )


def build_infilling_prompt(orig_text, instruction: str, masked_text: str) -> str:
    orig_text = _as_text(orig_text)
    if not orig_text.strip() or not instruction.strip() or not masked_text.strip():
        raise InvalidInput("all prompt slots must be non-empty")
    masked = MaskedSequence.from_tokens(tokenize(masked_text))
    if not verify_consistency(tokenize(orig_text), masked):
        raise InconsistentMask("masked sequence is not the original with spans replaced")
    return (
        _INFILLING_TEMPLATE.replace("[Original CAD sequence]", orig_text)
        .replace("[Textual editing instruction]", instruction)
        .replace("[Masked CAD sequence]", masked_text)
    )


# ---------------------------------------------------------------------------
# Editing stages


@dataclass(frozen=True)
class Candidate:
    edit_text: str
    parse_ok: bool
    consistency_ok: bool
    error: str | None = None

    def to_json(self):
        return {
            "edit_text": self.edit_text,
            "parse_ok": self.parse_ok,
            "consistency_ok": self.consistency_ok,
            "error": self.error,
        }


@dataclass(frozen=True)
class EditResult:
    masked: MaskedSequence
    candidates: tuple[Candidate, ...]
    k: int

    def to_json(self):
        return {
            "masked": self.masked.text(),
            "k": self.k,
            "candidates": [c.to_json() for c in self.candidates],
        }


def locate(orig, instruction, backend: ModelBackend, sampling: SamplingConfig | None = None, retries: int = 3) -> MaskedSequence:
    """Generate a masked sequence; resample until it passes consistency."""
    sampling = sampling or SamplingConfig()
    orig_text = _as_text(orig)
    prompt = build_locating_prompt(orig_text, instruction)
    orig_tokens = tokenize(orig_text)
    attempts = max(1, retries + 1)
    for _ in range(attempts):
        completion = backend.complete(prompt, sampling)
        masked = MaskedSequence.from_tokens(tokenize(completion))
        if len(masked.tokens) and verify_consistency(orig_tokens, masked):
            return masked
    raise LocatingFailed(f"no consistent masked sequence after {attempts} attempts")


def infill(orig, instruction, masked: MaskedSequence, backend: ModelBackend, sampling: SamplingConfig | None = None) -> Candidate:
    """One full edited-sequence sample; flags record parse/consistency."""
    from .cad_seq import parse

    sampling = sampling or SamplingConfig()
    orig_text = _as_text(orig)
    prompt = build_infilling_prompt(orig_text, instruction, masked.text())
    completion = backend.complete(prompt, sampling)
    parse_ok = True
    error = None
    try:
        parse(completion)
    except SecadError as exc:
        parse_ok = False
        error = exc.code
    consistency_ok = can_realize(masked, tokenize(completion))
    return Candidate(edit_text=completion, parse_ok=parse_ok, consistency_ok=consistency_ok, error=error)


def edit(
    orig,
    instruction,
    backend: ModelBackend,
    k: int = 5,
    sampling: SamplingConfig | None = None,
    retries: int = 3,
    max_workers: int = 1,
) -> EditResult:
    """Locate once, then draw k infill candidates (never raising per-candidate)."""
    if k <= 0:
        raise InvalidInput("k must be >= 1")
    sampling = sampling or SamplingConfig()
    masked = locate(orig, instruction, backend, sampling, retries)

    def one(_i):
        try:
            return infill(orig, instruction, masked, backend, sampling)
        except SecadError as exc:
            return Candidate(edit_text="", parse_ok=False, consistency_ok=False, error=exc.code)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            candidates = tuple(pool.map(one, range(k)))
    else:
        candidates = tuple(one(i) for i in range(k))
    return EditResult(masked=masked, candidates=candidates, k=k)


# ---------------------------------------------------------------------------
# Selective dataset (human-picked best candidates)


class SelectiveDataset:
    """Append-mostly JSONL; one record per (session, annotator), newest wins."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def records(self):
        if not self.path.exists():
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def record(self, session_id: str, annotator: str, payload: dict) -> dict:
        entry = dict(payload)
        entry["session"] = session_id
        entry["annotator"] = annotator
        entry["ts"] = datetime.now(timezone.utc).isoformat()
        with self._lock:
            rows = [r for r in self.records() if not (r.get("session") == session_id and r.get("annotator") == annotator)]
            rows.append(entry)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            text = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
            atomic_write_text(self.path, text)
        return entry


def record_selection(
    sessions: SessionStore,
    selective: SelectiveDataset,
    session_id: str,
    candidate_index: int,
    annotator_id: str,
) -> dict:
    """Persist a human selection from the latest candidate set of a session."""
    session = sessions.get(session_id)
    if not session.history:
        raise InvalidCandidate("session has no candidates yet")
    entry = session.history[-1]
    if not 0 <= candidate_index < len(entry.candidates):
        raise InvalidCandidate(f"candidate index {candidate_index} out of range")
    candidate = entry.candidates[candidate_index]
    cand = candidate if isinstance(candidate, dict) else candidate.to_json()
    if not cand["parse_ok"]:
        raise InvalidCandidate("cannot select a candidate that failed to parse")
    payload = {
        "instruction": entry.instruction,
        "orig": entry.orig_text,
        "edit": cand["edit_text"],
        "mask": entry.masked_text,
        "record": None,
        "split": "train",
        "source": "human",
    }
    return selective.record(session_id, annotator_id, payload)
