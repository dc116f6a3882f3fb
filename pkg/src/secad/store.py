"""Flat-file persistence: sessions, service configuration.

Sessions are one JSON file each, written atomically (temp file + rename)
so a killed process never leaves an unreadable store.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .cad_seq import ValidationConfig, parse, serialize, validate
from .errors import InvalidInput, InvalidModel, SecadError, UnknownSession


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class HistoryEntry:
    instruction: str
    orig_text: str  # the model the instruction was applied to
    masked_text: str
    candidates: list  # [{edit_text, parse_ok, consistency_ok}]
    selection: dict | None = None  # {index, annotator, ts}


@dataclass
class EditSession:
    id: str
    orig_text: str
    current_text: str
    created: str
    updated: str
    history: list = field(default_factory=list)

    def to_json(self):
        data = asdict(self)
        data["history"] = [asdict(h) if isinstance(h, HistoryEntry) else h for h in self.history]
        return data

    @classmethod
    def from_json(cls, data):
        session = cls(
            id=data["id"],
            orig_text=data["orig_text"],
            current_text=data["current_text"],
            created=data["created"],
            updated=data["updated"],
        )
        session.history = [HistoryEntry(**h) for h in data.get("history", [])]
        return session


def atomic_write_text(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class SessionStore:
    """One JSON file per session under ``root/sessions``."""

    def __init__(self, root):
        self.root = Path(root)
        self.dir = self.root / "sessions"
        self.dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.RLock] = defaultdict(threading.RLock)
        self._guard = threading.Lock()

    def lock(self, session_id: str) -> threading.RLock:
        with self._guard:
            return self._locks[session_id]

    def _path(self, session_id: str) -> Path:
        return self.dir / f"{session_id}.json"

    def create(self, orig_text: str, validation: ValidationConfig | None = None) -> EditSession:
        try:
            model = parse(orig_text)
        except SecadError as exc:
            raise InvalidModel("original model does not parse", cause=exc)
        report = validate(model, validation or ValidationConfig(max_se=None))
        if not report.is_valid:
            raise InvalidModel("; ".join(f"{e.code} at {e.path}" for e in report.errors))
        canonical = serialize(model)
        now = _now()
        session = EditSession(
            id=uuid.uuid4().hex[:12],
            orig_text=canonical,
            current_text=canonical,
            created=now,
            updated=now,
        )
        self.save(session)
        return session

    def get(self, session_id: str) -> EditSession:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSession(f"no session {session_id!r}")
        with open(path, "r", encoding="utf-8") as fh:
            return EditSession.from_json(json.load(fh))

    def save(self, session: EditSession):
        session.updated = _now()
        atomic_write_text(self._path(session.id), json.dumps(session.to_json(), indent=2))

    def ids(self):
        return sorted(p.stem for p in self.dir.glob("*.json"))


def replay(session: EditSession) -> str:
    """Re-apply recorded selections from the original; returns the final text."""
    current = session.orig_text
    for entry in session.history:
        if entry.selection is None:
            continue
        candidate = entry.candidates[entry.selection["index"]]
        current = candidate["edit_text"] if isinstance(candidate, dict) else candidate.edit_text
        current = serialize(parse(current))
    return current


# ---------------------------------------------------------------------------
# Service configuration: a documented key = value file format


@dataclass
class StoreConfig:
    data_dir: str = "./data"
    selective_path: str = ""  # defaults to <data_dir>/selective.jsonl
    dataset_path: str = ""  # scripted-backend source, train/test JSONL
    backend: str = "scripted"  # "scripted" | "http"
    backend_url: str = ""
    backend_token: str = ""
    temperature: float = 0.9
    top_p: float = 0.9
    max_tokens: int = 1024
    k: int = 5
    points: int = 2000
    seed: int = 0
    ui_dir: str = ""  # static frontend build to mount at /ui

    def resolved_selective(self) -> Path:
        return Path(self.selective_path) if self.selective_path else Path(self.data_dir) / "selective.jsonl"


def load_config(path) -> StoreConfig:
    """Parse ``key = value`` lines; '#' starts a comment. Environment
    variables SECAD_BACKEND_URL / SECAD_BACKEND_TOKEN override the file."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInput(f"bad config line: {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in StoreConfig.__dataclass_fields__:
                raise InvalidInput(f"unknown config key {key!r}")
            values[key] = value
    cfg = StoreConfig()
    for key, value in values.items():
        current = getattr(cfg, key)
        if isinstance(current, bool):
            setattr(cfg, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(cfg, key, int(value))
        elif isinstance(current, float):
            setattr(cfg, key, float(value))
        else:
            setattr(cfg, key, value)
    url = os.environ.get("SECAD_BACKEND_URL")
    token = os.environ.get("SECAD_BACKEND_TOKEN")
    if url:
        cfg.backend_url = url
        cfg.backend = "http"
    if token:
        cfg.backend_token = token
    return cfg


def dump_config(cfg: StoreConfig, path):
    lines = ["# secad service configuration"]
    for name in StoreConfig.__dataclass_fields__:
        lines.append(f"{name} = {getattr(cfg, name)}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")
