"""HTTP JSON service over sessions, layout, evaluation and selection.

Session creation is synchronous with mock backends and asynchronous (202
plus a polling status endpoint) when HTTP backends are configured, since
real generation of a hundred images takes a while.  Layout documents are
rendered once at creation time, so repeated GETs are byte-identical.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import errors
from .backends import Backends
from .corpus import CorpusHandle
from .evaluation import build_criterion, common_pairs
from .session import SessionState, create_session, evaluate_session, select_images, SessionInput

ERROR_MAP: list[tuple[type, int, str]] = [
    (errors.EmptyKeyword, 400, "empty_keyword"),
    (errors.EmptySelection, 400, "empty_selection"),
    (errors.UnknownRecord, 400, "unknown_record"),
    (errors.InvalidRange, 400, "invalid_input"),
    (errors.NotFound, 404, "not_found"),
    (errors.BackendTimeout, 502, "backend_unavailable"),
    (errors.BackendUnavailable, 502, "backend_unavailable"),
    (errors.CorpusNotLoaded, 409, "corpus_not_loaded"),
    (errors.EmptyCorpus, 409, "corpus_not_loaded"),
    (errors.PipelineFailure, 500, "pipeline_failure"),
    (errors.PromptmapError, 500, "internal_error"),
]


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}}, status_code=status)


class SessionRequest(BaseModel):
    prompt: str
    gs_min: float = 7.5
    gs_max: float = 7.5
    n_generate: int = 4
    k_retrieve: int = 500
    seed: Optional[int] = None


class EvaluateRequest(BaseModel):
    keyword_a: str
    keyword_b: Optional[str] = None
    bins: int = 20


class SelectionRequest(BaseModel):
    record_ids: list[str]
    top_k: int = 10


class SessionEntry:
    def __init__(self):
        self.state: Optional[SessionState] = None
        self.layout_doc: Optional[dict] = None
        self.status = "pending"
        self.error: Optional[str] = None
        self.lock = threading.Lock()


def layout_document(session_id: str, state: SessionState) -> dict:
    representatives = set(state.lod.representatives.values())
    points = [
        {
            "id": rec.id,
            "x": state.layout[rec.id][0],
            "y": state.layout[rec.id][1],
            "source": rec.source,
            "level": state.record_levels[rec.id],
            "representative": rec.id in representatives,
            "image_url": f"/api/images/{rec.id}",
        }
        for rec in state.records
    ]
    keywords = [
        {
            "term": p.term.text,
            "x": p.position[0],
            "y": p.position[1],
            "level": p.level,
            "cluster_id": p.anchor_cluster,
            "image_ids": list(p.image_ids),
        }
        for p in state.placements
    ]
    return {
        "session_id": session_id,
        "levels": state.lod.levels,
        "points": points,
        "keywords": keywords,
    }


def selection_document(report) -> dict:
    return {
        "keywords": [
            {
                "term": s.term.text,
                "n": s.term.n,
                "tfidf": s.tfidf,
                "normalized": s.normalized,
                "cluster_id": s.cluster_id,
            }
            for s in report.keywords
        ],
        "incidence": [{"term": term, "record_id": rid} for term, rid in report.incidence],
        "guidance_histogram": {
            "lo": report.guidance_histogram.lo,
            "hi": report.guidance_histogram.hi,
            "counts": list(report.guidance_histogram.counts),
        },
        "prompts": [
            {
                "id": p.record_id,
                "prompt": p.prompt,
                "spans": [{"term": t, "start": s, "end": e} for t, s, e in p.spans],
            }
            for p in report.prompts
        ],
    }


def create_app(
    corpus: Optional[CorpusHandle],
    backends: Backends,
    index_dir: Optional[Path] = None,
    static_dir: Optional[Path] = None,
    default_seed: int = 0,
) -> FastAPI:
    app = FastAPI(title="promptmap", docs_url=None, redoc_url=None)
    sessions: dict[str, SessionEntry] = {}
    counter = threading.Lock()
    next_id = [0]

    @app.exception_handler(errors.PromptmapError)
    async def promptmap_error_handler(request: Request, exc: errors.PromptmapError):
        for etype, status, code in ERROR_MAP:
            if isinstance(exc, etype):
                return _error_response(status, code, str(exc))
        return _error_response(500, "internal_error", str(exc))

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return _error_response(400, "invalid_input", str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error_response(400, "invalid_input", str(exc))

    def get_entry(session_id: str) -> SessionEntry:
        entry = sessions.get(session_id)
        if entry is None:
            raise errors.NotFound(session_id)
        return entry

    def ready_state(session_id: str) -> SessionState:
        entry = get_entry(session_id)
        if entry.status == "failed":
            raise errors.PipelineFailure("create", entry.error)
        if entry.state is None:
            raise errors.NotFound(f"{session_id} (still pending)")
        return entry.state

    def run_create(session_id: str, entry: SessionEntry, session_input: SessionInput):
        try:
            state = create_session(session_input, corpus, backends)
            entry.state = state
            entry.layout_doc = layout_document(session_id, state)
            entry.status = "ready"
            return None
        except Exception as exc:
            entry.status = "failed"
            entry.error = str(exc)
            return exc

    @app.post("/api/sessions")
    def post_session(body: SessionRequest):
        session_input = SessionInput(
            prompt=body.prompt,
            gs_min=body.gs_min,
            gs_max=body.gs_max,
            n_generate=body.n_generate,
            k_retrieve=body.k_retrieve,
            rng_seed=default_seed if body.seed is None else body.seed,
        )
        session_input.validate()
        if body.k_retrieve > 0 and corpus is None:
            raise errors.CorpusNotLoaded("server started without a corpus index")
        with counter:
            next_id[0] += 1
            session_id = f"s{next_id[0]:04d}"
        entry = SessionEntry()
        sessions[session_id] = entry
        if backends.is_mock:
            exc = run_create(session_id, entry, session_input)
            if exc is not None:
                del sessions[session_id]
                raise exc
            return JSONResponse({"session_id": session_id}, status_code=201)
        thread = threading.Thread(
            target=run_create, args=(session_id, entry, session_input), daemon=True
        )
        thread.start()
        return JSONResponse({"session_id": session_id}, status_code=202)

    @app.get("/api/sessions/{session_id}/status")
    def get_status(session_id: str):
        entry = get_entry(session_id)
        payload = {"state": entry.status}
        if entry.error:
            payload["error"] = entry.error
        return payload

    @app.get("/api/sessions/{session_id}/layout")
    def get_layout(session_id: str):
        ready_state(session_id)
        return get_entry(session_id).layout_doc

    @app.post("/api/sessions/{session_id}/evaluate")
    def post_evaluate(session_id: str, body: EvaluateRequest):
        state = ready_state(session_id)
        entry = get_entry(session_id)
        criterion = build_criterion(body.keyword_a, body.keyword_b)
        with entry.lock:  # rating-cache insertion is the only mutation
            ratings, hist = evaluate_session(state, criterion, backends.embedder, body.bins)
        return {
            "criterion": {"a": criterion.keyword_a, "b": criterion.keyword_b},
            "ratings": [{"id": r.record_id, "s_bar": r.s_bar} for r in ratings],
            "histogram": {"lo": hist.lo, "hi": hist.hi, "counts": list(hist.counts)},
        }

    @app.post("/api/sessions/{session_id}/selection")
    def post_selection(session_id: str, body: SelectionRequest):
        state = ready_state(session_id)
        report = select_images(state, body.record_ids, body.top_k)
        return selection_document(report)

    @app.get("/api/images/{record_id}")
    def get_image(record_id: str):
        for entry in sessions.values():
            if entry.state is not None and record_id in entry.state.image_bytes:
                return Response(entry.state.image_bytes[record_id], media_type="image/png")
        if corpus is not None and index_dir is not None and record_id in corpus:
            rec = corpus.get_record(record_id)
            path = Path(index_dir) / rec.image_ref
            if path.exists():
                return Response(path.read_bytes(), media_type="image/png")
        raise errors.NotFound(record_id)

    @app.get("/api/common-pairs")
    def get_common_pairs():
        return common_pairs()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")

    return app
