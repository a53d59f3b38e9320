"""HTTP API over the pipeline and the review queue.

POST /documents                  run a document end to end (201)
GET  /runs/{run_id}              full run record
GET  /runs/{run_id}/policies     applied policies only
GET  /review/queue               pending review items
GET  /review/{item_id}           one review item
POST /review/{item_id}/reverify  optionally edit rules, then re-verify
POST /review/{item_id}/decision  accept or reject
GET  /healthz                    liveness probe
GET  /ui                         static review console, when built

Error mapping: bad input 400, unknown ids 404, stale revisions and illegal
transitions 409, model-serving failures 503.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exception_handlers import request_validation_exception_handler
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import RunConfig
from .errors import (
    ClientError,
    IllegalTransition,
    NotFound,
    PolicygenError,
    RevisionConflict,
)
from .pipeline import Pipeline, RunRecord, applied_policies
from .review import ReviewStatus, ReviewStore, queue_from_run


class DocumentRequest(BaseModel):
    text: str
    doc_id: str | None = None


class ReverifyRequest(BaseModel):
    revision: int
    rules: list[dict] | None = None


class DecisionRequest(BaseModel):
    revision: int
    decision: str
    decided_by: str = ""
    override: bool = False
    note: str = ""


def create_app(
    config: RunConfig,
    review_store_path: str | Path,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="policygen", docs_url=None, redoc_url=None)
    pipeline = Pipeline(config)
    store = ReviewStore(review_store_path)
    runs: dict[str, RunRecord] = {}

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(PolicygenError)
    async def on_engine_error(request: Request, exc: PolicygenError):
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, (RevisionConflict, IllegalTransition)):
            status = 409
        elif isinstance(exc, ClientError):
            status = 503
        else:
            status = 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/documents", status_code=201)
    async def post_document(request: DocumentRequest):
        doc_id = request.doc_id or hashlib.sha256(request.text.encode("utf-8")).hexdigest()[:12]
        record = pipeline.run_document(doc_id, request.text)
        runs[record.run_id] = record
        queue_from_run(record, store)
        return record.to_dict()

    @app.get("/runs/{run_id}")
    async def get_run(run_id: str):
        if run_id not in runs:
            raise NotFound(f"no run {run_id!r}")
        return runs[run_id].to_dict()

    @app.get("/runs/{run_id}/policies")
    async def get_run_policies(run_id: str):
        if run_id not in runs:
            raise NotFound(f"no run {run_id!r}")
        return {"run_id": run_id, "policies": applied_policies(runs[run_id])}

    @app.get("/review/queue")
    async def review_queue():
        items = store.list_items(status=ReviewStatus.PENDING.value)
        return {"items": [item.to_dict() for item in items]}

    @app.get("/review/{item_id}")
    async def review_item(item_id: str):
        return store.get(item_id).to_dict()

    @app.post("/review/{item_id}/reverify")
    async def review_reverify(item_id: str, request: ReverifyRequest):
        item = store.reverify(
            item_id,
            revision=request.revision,
            verifier=pipeline.clients.verifier,
            rules=request.rules,
        )
        return item.to_dict()

    @app.post("/review/{item_id}/decision")
    async def review_decision(item_id: str, request: DecisionRequest):
        item = store.decide(
            item_id,
            revision=request.revision,
            decision=request.decision,
            decided_by=request.decided_by,
            override=request.override,
            note=request.note,
        )
        return item.to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
