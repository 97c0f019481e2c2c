"""HTTP/JSON boundary over the expansion service.

Every error body carries a code from the closed set {not_found,
invalid_anchor, no_answer, provider_unavailable, validation_failed,
depth_exceeded}; NoAnswer is a domain outcome and travels as HTTP 200 with
code "no_answer", never as an HTTP error. Ingestion is accepted with 202 and
runs on a small background pool; clients poll the paper status endpoint.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .document import CANONICAL_VERSION
from .engine import ROOT_NODE_ID
from .errors import ExpandocError, NotFoundError
from .ingestion import derive_paper_id
from .service import ExpandocService

log = logging.getLogger(__name__)

# HTTP status per error code; no_answer is absent because it is not an error.
STATUS_BY_CODE = {
    "not_found": 404,
    "invalid_anchor": 422,
    "provider_unavailable": 503,
    "validation_failed": 400,
    "depth_exceeded": 429,
}


class AnchorModel(BaseModel):
    node_id: str
    start: int
    end: int


class ExpandRequest(BaseModel):
    anchor: AnchorModel
    kind: str
    custom_question: Optional[str] = None


class SuggestRequest(BaseModel):
    selection: str
    sentence: Optional[str] = None


class CollapseRequest(BaseModel):
    collapsed: bool


def _error_response(status: int, code: str, message: str, retryable: bool) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "retryable": retryable},
    )


def create_app(service: ExpandocService, ingest_workers: int = 2) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.executor = ThreadPoolExecutor(max_workers=ingest_workers)
        try:
            yield
        finally:
            app.state.executor.shutdown(wait=True)

    app = FastAPI(title="expandoc", lifespan=lifespan)
    # the browser UI is served from its own origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ExpandocError)
    async def _expandoc_error(_request: Request, exc: ExpandocError):
        return JSONResponse(
            status_code=STATUS_BY_CODE.get(exc.code, 400), content=exc.to_payload()
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return _error_response(400, "validation_failed", str(exc.errors()[:3]), False)

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(_request: Request, exc: StarletteHTTPException):
        # framework-level 404/405 and friends must present coded bodies too
        code = "not_found" if exc.status_code == 404 else "validation_failed"
        return _error_response(exc.status_code, code, str(exc.detail), False)

    @app.exception_handler(Exception)
    async def _unhandled(_request: Request, exc: Exception):
        # even unexpected failures must present a coded body
        log.exception("unhandled error", exc_info=exc)
        return _error_response(500, "provider_unavailable", "internal error", True)

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.post("/papers", status_code=202)
    async def post_paper(request: Request, source_uri: Optional[str] = None):
        body = await request.body()
        if not body:
            return _error_response(400, "validation_failed", "empty request body", False)
        payload = None
        try:
            candidate = json.loads(body)
            if isinstance(candidate, dict):
                payload = candidate
        except (UnicodeDecodeError, json.JSONDecodeError):
            payload = None

        if payload is not None:
            if payload.get("version") != CANONICAL_VERSION or "paper_id" not in payload:
                return _error_response(
                    400,
                    "validation_failed",
                    "canonical documents need version and paper_id",
                    False,
                )
            paper_id = payload["paper_id"]
            service.store.set_status(paper_id, "processing")
            request.app.state.executor.submit(_run_ingest, service.ingest_canonical, payload)
        else:
            if service.parser_client is None:
                return _error_response(
                    400, "validation_failed", "no parser service configured", False
                )
            uri = source_uri or ("bytes:" + hashlib.sha1(body).hexdigest())
            paper_id = derive_paper_id(uri)
            service.store.set_status(paper_id, "processing")
            request.app.state.executor.submit(
                _run_ingest, service.ingest_pdf_bytes, body, source_uri
            )
        return {"paper_id": paper_id, "status": "processing"}

    @app.get("/papers")
    async def list_papers(query: str = "", page: int = 1, page_size: int = 20):
        return service.list_papers(query=query, page=page, page_size=page_size)

    @app.get("/papers/{paper_id}")
    async def paper_status(paper_id: str):
        return service.get_status(paper_id)

    @app.get("/papers/{paper_id}/abstract")
    async def paper_abstract(paper_id: str):
        status = service.get_status(paper_id)["status"]
        if status == "processing":
            return _error_response(409, "validation_failed", "paper is still processing", True)
        if status == "failed":
            return _error_response(409, "validation_failed", "paper ingestion failed", False)
        return service.abstract_payload(paper_id)

    @app.post("/papers/{paper_id}/suggestions")
    async def suggest(paper_id: str, body: SuggestRequest):
        question = service.suggest(paper_id, body.selection, body.sentence)
        return {"question": question}

    @app.get("/papers/{paper_id}/trees/{tree_id}")
    async def get_tree(paper_id: str, tree_id: str):
        tree = service.get_or_create_tree(paper_id, tree_id)
        return tree.to_payload()

    @app.post("/papers/{paper_id}/trees/{tree_id}/expansions")
    async def post_expansion(paper_id: str, tree_id: str, body: ExpandRequest, response: Response):
        outcome = service.expand(
            paper_id=paper_id,
            tree_id=tree_id,
            parent_id=body.anchor.node_id,
            start=body.anchor.start,
            end=body.anchor.end,
            kind=body.kind,
            custom_question=body.custom_question,
        )
        if outcome.no_answer:
            return _error_response(
                200, "no_answer", "the paper does not answer this question", False
            )
        response.status_code = 201
        payload = outcome.node.to_payload()
        payload["tree_id"] = tree_id
        return payload

    @app.get("/expansions/{node_id}/attribution")
    async def get_attribution(node_id: str):
        return service.node_attribution(node_id)

    @app.patch("/expansions/{node_id}")
    async def patch_expansion(node_id: str, body: CollapseRequest):
        return service.set_collapsed(node_id, body.collapsed)

    @app.delete("/expansions/{node_id}", status_code=204)
    async def delete_expansion(node_id: str):
        if node_id == ROOT_NODE_ID:
            return _error_response(409, "validation_failed", "the root node cannot be deleted", False)
        try:
            service.delete_node(node_id)
        except NotFoundError as exc:
            return _error_response(404, "not_found", exc.message, False)
        return Response(status_code=204)

    return app


def _run_ingest(fn, *args):
    try:
        fn(*args)
    except Exception:
        # status was already set to failed by the service; keep a trace
        log.exception("background ingest failed")
