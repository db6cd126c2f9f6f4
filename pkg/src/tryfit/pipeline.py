"""The end-to-end session state machine.

One message flows: render prompt -> chat model -> parse (with one repair
retry) -> mask by item -> match + route, or localized edit -> generator ->
post-composite -> reply. Every step appends an immutable TraceStep
recording the invocation, routing decision, mask summary, and backend
calls.

Two guarantees the orchestrator enforces regardless of backend behavior:

* Outside-mask preservation: the generator's output is composited over
  the original using the step's mask, so pixels outside the mask are
  bit-identical before and after every edit.
* Failure atomicity: an error outcome never changes the session image.
"""

from __future__ import annotations

import hashlib
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import catalog as catalog_store
from . import matching
from .backends.base import EditRequest, ModelStack, SegmentationQuery
from .errors import (
    BackendError,
    EmptyCatalog,
    EmptyInstruction,
    NoPersonImage,
    NoRegionFound,
    ParseError,
    TryFitError,
)
from .imaging import apply_mask, bounding_box, composite, dilate, encode_png, mask_from_item
from .parsing import FunctionKind, Invocation, NotTryOn, parse_agent_response
from .prompting import PromptTemplate, render_prompt

HISTORY_DEPTH = 4

OUTCOME_EDITED = "edited"
OUTCOME_REFUSED = "refused_not_tryon"
OUTCOME_ERROR = "error"

ERROR_PARSE_FAILED = "ParseFailed"
ERROR_REGION_NOT_FOUND = "RegionNotFound"

APOLOGY_REPLY = (
    "Sorry, I could not understand how to apply that. "
    "Could you rephrase your request?"
)
REPHRASE_REPLY = (
    "I could not find the region that edit refers to. "
    "Could you describe the spot differently?"
)
DEFAULT_EDIT_REPLY = "Done! Here is the result."


@dataclass(frozen=True)
class BackendCall:
    """One backend invocation as recorded in a trace."""

    kind: str
    mode: str
    latency_ms: int


@dataclass(frozen=True)
class MaskSummary:
    set_bits: int
    bbox: tuple[int, int, int, int] | None


@dataclass(frozen=True)
class TraceStep:
    """Machine-readable record of one pipeline step."""

    user_text: str
    raw_llm_response: str
    invocation: Invocation | None
    route: matching.Route | None
    match_score: float | None
    tau: float
    mask_summary: MaskSummary | None
    backend_calls: tuple[BackendCall, ...]
    outcome: str
    error_code: str | None
    reply: str
    result_image_id: str | None


@dataclass
class HistoryEntry:
    user_text: str
    invocation: Invocation | None
    trace: TraceStep


@dataclass
class Session:
    """Conversation state: the person canvas plus an append-only history."""

    session_id: str
    person_image: np.ndarray | None = None
    current_image: np.ndarray | None = None
    history: list[HistoryEntry] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)


def new_session(session_id: str | None = None) -> Session:
    return Session(session_id=session_id or uuid.uuid4().hex)


def derive_seed(session_id: str, step_index: int) -> int:
    """Stable per-step seed: reproducible sessions, distinct steps."""
    digest = hashlib.sha256(f"{session_id}:{step_index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class PipelineResult:
    reply: str
    image: np.ndarray | None
    image_png: bytes | None
    trace: TraceStep


class _Recorder:
    """Times backend calls for the trace; mock calls record zero latency."""

    def __init__(self) -> None:
        self.calls: list[BackendCall] = []

    def call(self, backend, method: str, *args):
        fn: Callable = getattr(backend, method)
        start = time.perf_counter()
        try:
            return fn(*args)
        finally:
            mode = getattr(backend, "mode", None)
            mode_value = getattr(mode, "value", str(mode))
            latency = 0 if mode_value == "mock" else int((time.perf_counter() - start) * 1000)
            kind = getattr(backend, "kind", None)
            self.calls.append(
                BackendCall(kind=getattr(kind, "value", str(kind)), mode=mode_value, latency_ms=latency)
            )


class Pipeline:
    """Drives sessions against a model stack, catalog, and routing threshold.

    ``tau`` and ``catalog`` are plain attributes; the serving layer swaps
    them atomically (whole-object assignment) on admin operations.
    """

    def __init__(
        self,
        stack: ModelStack,
        catalog: catalog_store.Catalog | None,
        template: PromptTemplate,
        tau: float,
        history_depth: int = HISTORY_DEPTH,
        mask_dilation_radius: int = 0,
    ):
        if not 0.0 <= tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {tau}")
        self.stack = stack
        self.catalog = catalog
        self.template = template
        self.tau = tau
        self.history_depth = history_depth
        self.mask_dilation_radius = mask_dilation_radius

    # -- chat plumbing --

    def _chat_messages(self, session: Session, rendered: str) -> list[tuple[str, str]]:
        messages: list[tuple[str, str]] = []
        for entry in session.history[-self.history_depth :]:
            messages.append(("user", entry.user_text))
            messages.append(("assistant", entry.trace.reply))
        messages.append(("user", rendered))
        return messages

    def _query_model(
        self, session: Session, user_text: str, recorder: _Recorder
    ) -> tuple[str, Invocation | NotTryOn | None, ParseError | None]:
        rendered = render_prompt(self.template, user_text)
        messages = self._chat_messages(session, rendered)
        raw = recorder.call(self.stack.chat, "chat_complete", messages)
        try:
            return raw, parse_agent_response(raw), None
        except ParseError as first_error:
            repair = (
                f"Your previous reply could not be processed: {first_error}. "
                "Respond again with exactly one JSON object in the required "
                "output format, and nothing else."
            )
            retry_messages = messages + [("assistant", raw), ("user", repair)]
            raw2 = recorder.call(self.stack.chat, "chat_complete", retry_messages)
            try:
                return raw2, parse_agent_response(raw2), None
            except ParseError as second_error:
                return raw2, None, second_error

    # -- function bodies --

    def run_full_outfit_change(
        self, session: Session, invocation: Invocation, seed: int, recorder: _Recorder
    ) -> tuple[np.ndarray, np.ndarray, matching.Route, float | None]:
        """Mask the item, match the details against the catalog, route, generate.

        Returns (output image, mask, route, match score). An empty catalog
        (or one emptied by the item filter) degrades to the text-based
        branch with the score recorded as absent.
        """
        base = session.current_image
        assert base is not None
        parse = recorder.call(self.stack.human_parser, "parse_human", base)
        mask = mask_from_item(parse, invocation.item)
        if self.mask_dilation_radius > 0:
            mask = dilate(mask, self.mask_dilation_radius)
        masked = apply_mask(base, mask)

        score: float | None = None
        route: matching.Route
        if self.catalog is None or len(self.catalog) == 0:
            route = matching.TextBased(score=None)
        else:
            try:
                query = recorder.call(self.stack.embedder, "embed_text", invocation.details)
                garment_id, score = matching.best_match(
                    matching.normalize(query), self.catalog, invocation.item
                )
                route = matching.route(score, self.tau, garment_id)
            except EmptyCatalog:
                score = None
                route = matching.TextBased(score=None)

        if isinstance(route, matching.ImageBased):
            garment = catalog_store.garment_image(self.catalog, route.garment_id)
            result = recorder.call(
                self.stack.image_tryon, "tryon_image_based", masked, garment, seed
            )
        else:
            refined = recorder.call(
                self.stack.refiner, "refine_prompt", base, invocation.details
            )
            pose = recorder.call(self.stack.pose_estimator, "estimate_pose", base)
            request = EditRequest(
                mask=mask,
                masked_image=masked,
                pose_image=pose,
                guidance_prompt=refined,
                seed=seed,
            )
            result = recorder.call(self.stack.text_editor, "edit_text_based", request)

        return composite(base, result, mask), mask, route, score

    def run_localized_edit(
        self, session: Session, invocation: Invocation, seed: int, recorder: _Recorder
    ) -> tuple[np.ndarray, np.ndarray]:
        """Segment the region named by the instruction and repaint only it."""
        base = session.current_image
        assert base is not None
        mask = recorder.call(
            self.stack.segmenter, "segment", SegmentationQuery(base, invocation.details)
        )
        if not mask.any():
            raise NoRegionFound("segmenter returned an empty mask", kind="segment")
        if self.mask_dilation_radius > 0:
            mask = dilate(mask, self.mask_dilation_radius)
        refined = recorder.call(self.stack.refiner, "refine_prompt", base, invocation.details)
        pose = recorder.call(self.stack.pose_estimator, "estimate_pose", base)
        masked = apply_mask(base, mask)
        request = EditRequest(
            mask=mask,
            masked_image=masked,
            pose_image=pose,
            guidance_prompt=refined,
            seed=seed,
        )
        result = recorder.call(self.stack.text_editor, "edit_text_based", request)
        return composite(base, result, mask), mask

    # -- the public entry point --

    def handle_message(
        self,
        session: Session,
        user_text: str,
        person_image: np.ndarray | None = None,
        seed: int | None = None,
    ) -> PipelineResult:
        """Run the full flow for one user message and append it to the history."""
        if not user_text.strip():
            raise EmptyInstruction("message text is blank")
        if person_image is not None:
            session.person_image = person_image
            session.current_image = person_image.copy()
        if session.person_image is None:
            raise NoPersonImage("upload a person image before sending instructions")

        recorder = _Recorder()
        step_seed = seed if seed is not None else derive_seed(session.session_id, len(session.history))

        raw, parsed, parse_failure = self._query_model(session, user_text, recorder)

        invocation: Invocation | None = None
        route: matching.Route | None = None
        score: float | None = None
        mask_summary: MaskSummary | None = None
        out_image: np.ndarray | None = None
        error_code: str | None = None

        if parse_failure is not None:
            outcome = OUTCOME_ERROR
            error_code = ERROR_PARSE_FAILED
            reply = APOLOGY_REPLY
        elif isinstance(parsed, NotTryOn):
            outcome = OUTCOME_REFUSED
            reply = parsed.reply or APOLOGY_REPLY
        else:
            invocation = parsed
            try:
                if invocation.function is FunctionKind.FULL_OUTFIT_CHANGE:
                    out_image, mask, route, score = self.run_full_outfit_change(
                        session, invocation, step_seed, recorder
                    )
                else:
                    out_image, mask = self.run_localized_edit(
                        session, invocation, step_seed, recorder
                    )
                mask_summary = MaskSummary(set_bits=int(mask.sum()), bbox=bounding_box(mask))
                outcome = OUTCOME_EDITED
                reply = invocation.reply or DEFAULT_EDIT_REPLY
            except NoRegionFound:
                outcome = OUTCOME_ERROR
                error_code = ERROR_REGION_NOT_FOUND
                reply = REPHRASE_REPLY
            except BackendError as exc:
                outcome = OUTCOME_ERROR
                error_code = type(exc).__name__
                reply = (
                    "Sorry, a model backend is not responding right now. "
                    "Please try again shortly."
                )
            except TryFitError as exc:
                outcome = OUTCOME_ERROR
                error_code = type(exc).__name__
                reply = APOLOGY_REPLY

        image_png: bytes | None = None
        image_id: str | None = None
        if outcome == OUTCOME_EDITED and out_image is not None:
            image_png = encode_png(out_image)
            image_id = hashlib.sha256(image_png).hexdigest()
            session.current_image = out_image

        trace = TraceStep(
            user_text=user_text,
            raw_llm_response=raw,
            invocation=invocation,
            route=route,
            match_score=score,
            tau=self.tau,
            mask_summary=mask_summary,
            backend_calls=tuple(recorder.calls),
            outcome=outcome,
            error_code=error_code,
            reply=reply,
            result_image_id=image_id,
        )
        session.history.append(HistoryEntry(user_text=user_text, invocation=invocation, trace=trace))
        session.updated_at = time.time()
        return PipelineResult(reply=reply, image=out_image if outcome == OUTCOME_EDITED else None,
                              image_png=image_png, trace=trace)


def route_to_dict(route: matching.Route | None) -> dict | None:
    if route is None:
        return None
    if isinstance(route, matching.ImageBased):
        return {"kind": "image_based", "garment_id": route.garment_id, "score": route.score}
    return {"kind": "text_based", "score": route.score}


def trace_to_dict(step: TraceStep) -> dict:
    """Serialize a TraceStep to the wire shape used by the trace endpoint."""
    invocation = None
    if step.invocation is not None:
        invocation = {
            "function": step.invocation.function.value,
            "item": step.invocation.item.value,
            "details": step.invocation.details,
            "reply": step.invocation.reply,
        }
    mask_summary = None
    if step.mask_summary is not None:
        mask_summary = {
            "set_bits": step.mask_summary.set_bits,
            "bbox": list(step.mask_summary.bbox) if step.mask_summary.bbox else None,
        }
    return {
        "user_text": step.user_text,
        "raw_llm_response": step.raw_llm_response,
        "invocation": invocation,
        "route": route_to_dict(step.route),
        "match_score": step.match_score,
        "tau": step.tau,
        "mask_summary": mask_summary,
        "backend_calls": [
            {"kind": call.kind, "mode": call.mode, "latency_ms": call.latency_ms}
            for call in step.backend_calls
        ],
        "outcome": step.outcome,
        "error_code": step.error_code,
        "reply": step.reply,
        "result_image_id": step.result_image_id,
    }
