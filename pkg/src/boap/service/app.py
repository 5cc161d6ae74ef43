"""HTTP surface of the live preference-session service.

Endpoint paths and payload shapes are frozen in ``contract/session-api.json``
(also served at ``/api/v1/contract``); the browser frontend derives every
request from that contract.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .sessions import SessionError, SessionStore

_CONTRACT_CANDIDATES = (
    Path(__file__).resolve().parents[3] / "contract" / "session-api.json",
    Path(__file__).resolve().parent / "session-api.json",
)


def load_contract() -> dict:
    for path in _CONTRACT_CANDIDATES:
        if path.exists():
            return json.loads(path.read_text())
    raise FileNotFoundError("session-api contract file not found")


def create_app(storage_dir: str | None = None, frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="preference-session-service", docs_url=None, redoc_url=None)
    store = SessionStore(storage_dir)
    contract = load_contract()
    app.state.store = store

    @app.exception_handler(SessionError)
    async def _session_error(_request: Request, exc: SessionError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.message})

    @app.get("/api/v1/contract")
    def get_contract():
        return contract

    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(request: Request):
        payload = await request.json()
        session = store.create(payload)
        return {"session_id": session.session_id}

    @app.get("/api/v1/sessions")
    def list_sessions():
        return {"sessions": store.list_ids()}

    @app.get("/api/v1/sessions/{session_id}")
    def get_state(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.state_view()

    @app.post("/api/v1/sessions/{session_id}/answers")
    async def submit_answers(session_id: str, request: Request):
        payload = await request.json()
        session = store.get(session_id)
        with session.lock:
            return session.submit(payload)

    @app.get("/api/v1/sessions/{session_id}/trace")
    def download_trace(session_id: str):
        session = store.get(session_id)
        with session.lock:
            text = session.trace.to_jsonl()
        return PlainTextResponse(text, media_type="application/x-ndjson")

    ui_dir = Path(frontend_dir) if frontend_dir else None
    if ui_dir is None:
        default_ui = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        ui_dir = default_ui if default_ui.exists() else None
    if ui_dir is not None and ui_dir.exists():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
