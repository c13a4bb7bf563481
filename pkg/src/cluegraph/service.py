"""HTTP/JSON service over an engine.

Serving is read-only apart from manual ingestion; the engine reference is
swapped atomically on reload so requests never observe a half-built state.
"""
from __future__ import annotations

import os
from pathlib import Path

from fastapi import Body, FastAPI, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .engine import Engine
from .errors import (
    CluegraphError,
    DuplicateManual,
    EmptyProcedure,
    InvalidAnnotation,
    SpanMismatch,
    SpanOutOfBounds,
    UnresolvedReference,
)

ENV_PORT = "CARE_PORT"
ENV_DATA_DIR = "CARE_DATA_DIR"

_PARSE_ERRORS = (
    InvalidAnnotation,
    SpanMismatch,
    SpanOutOfBounds,
    UnresolvedReference,
    EmptyProcedure,
)


class EngineHolder:
    """Mutable cell so the running app can swap engines atomically."""

    def __init__(self, engine: Engine):
        self.engine = engine

    def swap(self, engine: Engine):
        self.engine = engine


class AskBody(BaseModel):
    question: str
    overrides: dict | None = None


def create_app(holder: EngineHolder, data_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="manual clue-chain service")
    data_dir = data_dir or os.environ.get(ENV_DATA_DIR)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "fingerprint": holder.engine.encoder.fingerprint}

    @app.post("/manuals", status_code=201)
    def add_manual(document: dict = Body(...)):
        engine = holder.engine
        try:
            manual_id = engine.add_annotation(document)
        except DuplicateManual as err:
            return JSONResponse(status_code=409, content={"detail": str(err)})
        except _PARSE_ERRORS as err:
            detail = {"error": type(err).__name__, "message": str(err)}
            if isinstance(err, InvalidAnnotation) and err.location:
                detail["location"] = err.location
            return JSONResponse(status_code=422, content={"detail": detail})
        if data_dir:
            path = Path(data_dir)
            path.mkdir(parents=True, exist_ok=True)
            graph = engine.graphs[manual_id]
            (path / f"{manual_id}.graph.json").write_text(graph.to_json(), encoding="utf-8")
        return {"manual_id": manual_id}

    @app.post("/manuals/{manual_id}/ask")
    def ask(manual_id: str, body: AskBody):
        engine = holder.engine
        if manual_id not in engine.graphs:
            return JSONResponse(status_code=404, content={"detail": f"no manual {manual_id!r}"})
        if not body.question.strip():
            return JSONResponse(status_code=400, content={"detail": "question must be non-empty"})
        try:
            return engine.ask(manual_id, body.question, overrides=body.overrides)
        except ValueError as err:
            return JSONResponse(status_code=400, content={"detail": str(err)})
        except CluegraphError as err:
            return JSONResponse(status_code=400, content={"detail": str(err)})

    @app.get("/manuals/{manual_id}/graph")
    def get_graph(manual_id: str):
        engine = holder.engine
        if manual_id not in engine.graphs:
            return JSONResponse(status_code=404, content={"detail": f"no manual {manual_id!r}"})
        # canonical bytes, not re-encoded by the framework
        return Response(
            content=engine.graphs[manual_id].to_json(), media_type="application/json"
        )

    return app


def serve(
    engine: Engine,
    host: str = "127.0.0.1",
    port: int | None = None,
    data_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> None:
    """Run the service; port 0 binds an ephemeral port and prints it."""
    import json
    import socket
    import sys

    import uvicorn

    if port is None:
        port = int(os.environ.get(ENV_PORT, "8000"))
    holder = EngineHolder(engine)
    app = create_app(holder, data_dir=data_dir)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    bound_port = sock.getsockname()[1]
    print(json.dumps({"host": host, "port": bound_port}), flush=True)
    sys.stdout.flush()

    config = uvicorn.Config(app, log_level="warning")
    uvicorn.Server(config).run(sockets=[sock])
