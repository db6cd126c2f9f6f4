"""REST surface: session lifecycle, messages with image upload, traces, admin.

Endpoints:

* ``POST /v1/sessions`` — create a session.
* ``POST /v1/sessions/{id}/messages`` — multipart ``text`` + optional
  ``image`` (PNG) + optional ``seed``; runs one pipeline step.
* ``GET /v1/sessions/{id}/trace`` — every step of the session.
* ``GET /v1/images/{id}`` — result PNG by content-addressed id.
* ``GET /v1/catalog/search?q=&k=`` — ranked garment matches.
* ``POST /admin/reload-catalog`` — atomically swap in the catalog file.
* ``POST /admin/tau`` — adjust the routing threshold for later requests.

Messages within one session are serialized; sessions proceed concurrently
up to a global in-flight limit. Result images are content-addressed and
garbage-collected together with idle sessions after a TTL.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import catalog as catalog_store
from .backends.base import ModelStack, build_stack
from .config import ServiceConfig
from .errors import (
    BackendError,
    EmptyCatalog,
    EmptyInstruction,
    NoPersonImage,
    TryFitError,
)
from .imaging import decode_png
from .pipeline import Pipeline, Session, new_session, trace_to_dict
from .prompting import PromptTemplate, default_template, load_template


class _SessionBox:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()


class ServiceState:
    """Everything the handlers share; admin swaps are plain attribute writes."""

    def __init__(self, config: ServiceConfig, stack: ModelStack,
                 catalog: catalog_store.Catalog | None, template: PromptTemplate):
        self.config = config
        self.stack = stack
        self.pipeline = Pipeline(
            stack=stack,
            catalog=catalog,
            template=template,
            tau=config.resolved_tau(),
            mask_dilation_radius=config.mask_dilation_radius,
        )
        self.sessions: dict[str, _SessionBox] = {}
        self.images: dict[str, tuple[bytes, float]] = {}
        self.store_lock = threading.Lock()
        self.inflight = threading.BoundedSemaphore(config.concurrency_limit)

    def purge_expired(self) -> None:
        ttl = self.config.image_ttl_seconds
        cutoff = time.time() - ttl
        with self.store_lock:
            dead = [sid for sid, box in self.sessions.items() if box.session.updated_at < cutoff]
            for sid in dead:
                del self.sessions[sid]
            dead_images = [iid for iid, (_, ts) in self.images.items() if ts < cutoff]
            for iid in dead_images:
                del self.images[iid]


def _error(status: int, code: str, detail: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail, **extra})


def create_app(
    config: ServiceConfig | None = None,
    stack: ModelStack | None = None,
    catalog: catalog_store.Catalog | None = None,
    template: PromptTemplate | None = None,
) -> FastAPI:
    """Build the application; tests may inject a stack, catalog, or template."""
    config = config or ServiceConfig()
    stack = stack or build_stack(config.backends)
    if catalog is None and config.catalog_path:
        catalog = catalog_store.load(config.catalog_path)
    if template is None:
        template = load_template(config.template_path) if config.template_path else default_template()

    app = FastAPI(title="tryfit", docs_url=None, redoc_url=None)
    state = ServiceState(config, stack, catalog, template)
    app.state.service = state

    @app.post("/v1/sessions", status_code=201)
    def create_session():
        state.purge_expired()
        session = new_session()
        with state.store_lock:
            state.sessions[session.session_id] = _SessionBox(session)
        return {"session_id": session.session_id}

    @app.post("/v1/sessions/{session_id}/messages")
    async def post_message(
        session_id: str,
        request: Request,
        text: str = Form(""),
        seed: int | None = Form(None),
        image: UploadFile | None = File(None),
    ):
        with state.store_lock:
            box = state.sessions.get(session_id)
        if box is None:
            return _error(404, "SessionNotFound", f"unknown session {session_id!r}")

        content_length = request.headers.get("content-length")
        if content_length and content_length.isdigit():
            if int(content_length) > state.config.max_upload_bytes + (64 << 10):
                return _error(413, "UploadTooLarge", "request body too large")

        person = None
        if image is not None:
            data = await image.read()
            if len(data) > state.config.max_upload_bytes:
                return _error(413, "UploadTooLarge",
                              f"image exceeds {state.config.max_upload_bytes} bytes")
            try:
                person = decode_png(data)
            except Exception:
                return _error(422, "UndecodableImage", "image is not a decodable PNG")

        if not text.strip():
            if person is None:
                return _error(400, "EmptyInstruction", "message text is blank")
            # Upload-only turn: load the canvas without running the pipeline.
            with box.lock:
                box.session.person_image = person
                box.session.current_image = person.copy()
                box.session.updated_at = time.time()
            return {
                "reply": "Got it, your photo is loaded. What would you like to try on?",
                "image_url": None,
                "trace": None,
            }

        with state.inflight, box.lock:
            try:
                result = state.pipeline.handle_message(
                    box.session, text, person_image=person, seed=seed
                )
            except NoPersonImage as exc:
                return _error(400, "NoPersonImage", str(exc))
            except EmptyInstruction as exc:
                return _error(400, "EmptyInstruction", str(exc))
            except BackendError as exc:
                return _error(503, type(exc).__name__, str(exc), backend_kind=exc.kind)

        image_url = None
        if result.image_png is not None and result.trace.result_image_id:
            with state.store_lock:
                state.images[result.trace.result_image_id] = (result.image_png, time.time())
            image_url = f"/v1/images/{result.trace.result_image_id}"

        return {"reply": result.reply, "image_url": image_url, "trace": trace_to_dict(result.trace)}

    @app.get("/v1/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        with state.store_lock:
            box = state.sessions.get(session_id)
        if box is None:
            return _error(404, "SessionNotFound", f"unknown session {session_id!r}")
        with box.lock:
            steps = [trace_to_dict(entry.trace) for entry in box.session.history]
        return {"session_id": session_id, "steps": steps}

    @app.get("/v1/images/{image_id}")
    def get_image(image_id: str):
        with state.store_lock:
            entry = state.images.get(image_id)
        if entry is None:
            return _error(404, "ImageNotFound", f"unknown image {image_id!r}")
        return Response(content=entry[0], media_type="image/png")

    @app.get("/v1/catalog/search")
    def search_catalog(q: str = "", k: int = 5):
        if not q.strip():
            return _error(400, "EmptyQuery", "query parameter q must be non-empty")
        if k < 1:
            return _error(400, "BadK", "k must be >= 1")
        if state.pipeline.catalog is None or len(state.pipeline.catalog) == 0:
            return _error(400, "EmptyCatalog", "no catalog is loaded")
        try:
            ranked = catalog_store.search(state.pipeline.catalog, q, k, state.stack.embedder)
        except EmptyCatalog as exc:
            return _error(400, "EmptyCatalog", str(exc))
        except BackendError as exc:
            return _error(503, type(exc).__name__, str(exc), backend_kind=exc.kind)
        results = []
        for garment_id, score in ranked:
            rec = state.pipeline.catalog.get(garment_id)
            results.append(
                {
                    "garment_id": garment_id,
                    "score": score,
                    "category": rec.category if rec else None,
                    "caption": rec.caption if rec else None,
                }
            )
        return {"results": results, "tau": state.pipeline.tau}

    @app.post("/admin/reload-catalog")
    def reload_catalog():
        if not state.config.catalog_path:
            return _error(400, "NoCatalogConfigured", "catalog_path is not configured")
        try:
            fresh = catalog_store.load(state.config.catalog_path)
        except TryFitError as exc:
            return _error(500, type(exc).__name__, str(exc))
        state.pipeline.catalog = fresh
        return {"catalog_version": fresh.catalog_version, "records": len(fresh)}

    @app.post("/admin/tau")
    async def set_tau(request: Request):
        try:
            body = await request.json()
            value = float(body["tau"])
        except Exception:
            return _error(400, "BadTau", 'body must be {"tau": <number in [0, 1]>}')
        if not 0.0 <= value <= 1.0:
            return _error(400, "BadTau", f"tau must be in [0, 1], got {value}")
        state.pipeline.tau = value
        return {"tau": value}

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "tau": state.pipeline.tau,
            "catalog_records": len(state.pipeline.catalog) if state.pipeline.catalog else 0,
        }

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
