"""HTTP service: sessions, instruction submission, candidate selection,
mesh/preview delivery, and batch evaluation.

All state flows through the flat-file stores; per-session operations are
serialized by in-process locks.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .cad_seq import parse, serialize
from .errors import InvalidCandidate, InvalidInput, SecadError, UnknownSession
from .geometry import export_obj, mesh, render_preview
from .pipeline import (
    EditResult,
    HttpBackend,
    ModelBackend,
    SamplingConfig,
    ScriptedBackend,
    SelectiveDataset,
    edit,
    record_selection,
)
from .store import EditSession, HistoryEntry, SessionStore, StoreConfig


class CreateSessionBody(BaseModel):
    orig_text: str


class InstructionBody(BaseModel):
    instruction: str
    k: int | None = None


class SelectionBody(BaseModel):
    index: int
    annotator: str = "anonymous"


class EvalBody(BaseModel):
    testset: str
    results: str | None = None
    k: int | None = None
    figures: bool = False
    out_dir: str | None = None


def build_backend(config: StoreConfig) -> ModelBackend:
    if config.backend == "http":
        if not config.backend_url:
            raise InvalidInput("backend=http requires backend_url")
        return HttpBackend(config.backend_url, token=config.backend_token)
    if config.backend == "scripted":
        if config.dataset_path and Path(config.dataset_path).exists():
            from .captioning import load_dataset

            return ScriptedBackend.from_triplets(load_dataset(config.dataset_path))
        return ScriptedBackend({})
    raise InvalidInput(f"unknown backend kind {config.backend!r}")


_STATUS = {
    "UnknownSession": 404,
    "InvalidModel": 400,
    "InvalidInput": 400,
    "InvalidCandidate": 400,
    "LocatingFailed": 502,
    "BackendUnavailable": 502,
}


def create_app(config: StoreConfig | None = None, backend: ModelBackend | None = None) -> FastAPI:
    config = config or StoreConfig()
    Path(config.data_dir).mkdir(parents=True, exist_ok=True)
    sessions = SessionStore(config.data_dir)
    selective = SelectiveDataset(config.resolved_selective())
    backend = backend if backend is not None else build_backend(config)
    sampling = SamplingConfig(temperature=config.temperature, top_p=config.top_p, max_tokens=config.max_tokens)

    app = FastAPI(title="secad", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.sessions = sessions
    app.state.selective = selective
    app.state.backend = backend
    app.state.config = config

    @app.exception_handler(SecadError)
    async def secad_error_handler(_request, exc: SecadError):
        return JSONResponse(status_code=_STATUS.get(exc.code, 400), content=exc.to_json())

    def session_json(session: EditSession):
        return session.to_json()

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = sessions.create(body.orig_text)
        return session_json(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_json(sessions.get(session_id))

    @app.post("/sessions/{session_id}/instructions")
    def submit_instruction(session_id: str, body: InstructionBody):
        k = body.k if body.k is not None else config.k
        with sessions.lock(session_id):
            session = sessions.get(session_id)
            result: EditResult = edit(session.current_text, body.instruction, backend, k=k, sampling=sampling)
            entry = HistoryEntry(
                instruction=body.instruction,
                orig_text=session.current_text,
                masked_text=result.masked.text(),
                candidates=[c.to_json() for c in result.candidates],
            )
            session.history.append(entry)
            sessions.save(session)
        return result.to_json()

    @app.post("/sessions/{session_id}/selection")
    def apply_selection(session_id: str, body: SelectionBody):
        with sessions.lock(session_id):
            session = sessions.get(session_id)
            record_selection(sessions, selective, session_id, body.index, body.annotator)
            entry = session.history[-1]
            candidate = entry.candidates[body.index]
            entry.selection = {"index": body.index, "annotator": body.annotator}
            session.current_text = serialize(parse(candidate["edit_text"]))
            sessions.save(session)
        return session_json(session)

    def _candidate_model(session_id: str, index: int):
        session = sessions.get(session_id)
        if not session.history:
            raise InvalidCandidate("session has no candidates")
        entry = session.history[-1]
        if not 0 <= index < len(entry.candidates):
            raise InvalidCandidate(f"candidate index {index} out of range")
        candidate = entry.candidates[index]
        if not candidate["parse_ok"]:
            raise InvalidCandidate("candidate failed to parse")
        return parse(candidate["edit_text"])

    @app.get("/sessions/{session_id}/candidates/{index}/mesh")
    def candidate_mesh(session_id: str, index: int):
        model = _candidate_model(session_id, index)
        return Response(content=export_obj(mesh(model)), media_type="text/plain")

    @app.get("/sessions/{session_id}/candidates/{index}/preview")
    def candidate_preview(session_id: str, index: int):
        model = _candidate_model(session_id, index)
        png = render_preview(mesh(model)).to_png()
        return Response(content=png, media_type="image/png")

    @app.get("/sessions/{session_id}/mesh")
    def current_mesh(session_id: str):
        session = sessions.get(session_id)
        return Response(content=export_obj(mesh(parse(session.current_text))), media_type="text/plain")

    @app.post("/eval")
    def run_eval(body: EvalBody):
        from .harness import evaluate_files

        report = evaluate_files(
            testset_path=body.testset,
            results_path=body.results,
            backend=backend,
            k=body.k or config.k,
            sampling=sampling,
            seed=config.seed,
            n_points=config.points,
        )
        if body.out_dir:
            from .metrics import save_report

            save_report(report, body.out_dir, figures=body.figures)
        return report.to_json()

    @app.get("/health")
    def health():
        return {"ok": True}

    if config.ui_dir and Path(config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def serve(config: StoreConfig, host: str = "127.0.0.1", port: int = 8008):
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
