"""Parse fixed-format model responses into structured invocations.

The chat model is instructed to answer with a single flat JSON object:

    {"function": "...", "item": "...", "details": "...", "reply": "..."}

Real model output is noisy, so parsing first recovers the first maximal
balanced ``{...}`` block from the raw text, then decodes it. Parsing is
total: any byte sequence yields either an Invocation (or NotTryOn) or a
typed ParseError; it never raises anything else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import (
    ItemRequired,
    MalformedBlock,
    MissingDetails,
    NoStructuredBlock,
    UnknownFunction,
)


class FunctionKind(Enum):
    """The closed set of invocable try-on functions."""

    FULL_OUTFIT_CHANGE = "full_outfit_change"
    LOCALIZED_EDITING = "localized_editing"


class ItemKind(Enum):
    """Clothing region a full outfit change replaces."""

    UPPER_BODY = "upper_body"
    LOWER_BODY = "lower_body"
    FULL_BODY = "full_body"
    UNSPECIFIED = "unspecified"


# Pseudo-function the chat model may declare for off-task requests.
# It is not part of FunctionKind; parse_agent_response handles it.
NONE_FUNCTION = "none"


@dataclass(frozen=True)
class Invocation:
    """One parsed function call: what to run, on which item, with what details."""

    function: FunctionKind
    item: ItemKind
    details: str
    reply: str

    def __post_init__(self) -> None:
        if not self.details.strip():
            raise MissingDetails("details must be non-empty")
        if self.function is FunctionKind.FULL_OUTFIT_CHANGE and self.item is ItemKind.UNSPECIFIED:
            raise ItemRequired("full_outfit_change requires a clothing item")


@dataclass(frozen=True)
class NotTryOn:
    """The model declared the request is not a try-on task; only a reply is carried."""

    reply: str


def _scan_for_block(raw: str, quote_aware: bool) -> str | None:
    stack: list[int] = []
    first_inner: dict[int, tuple[int, int]] = {}
    in_string = False
    escaped = False
    for i, ch in enumerate(raw):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if quote_aware and ch == '"':
            in_string = True
        elif ch == "{":
            stack.append(i)
        elif ch == "}" and stack:
            depth = len(stack)
            start = stack.pop()
            if depth == 1:
                return raw[start : i + 1]
            first_inner.setdefault(depth, (start, i + 1))
    if first_inner:
        start, end = first_inner[min(first_inner)]
        return raw[start:end]
    return None


def extract_structured_block(raw: str) -> str:
    """Return the first maximal balanced ``{...}`` block in *raw*.

    Brace matching is aware of double-quoted strings with backslash
    escapes, so braces inside string values do not confuse it; if that
    scan finds nothing (for example an unmatched quote in surrounding
    prose), a plain brace-count scan is tried as a fallback. A block
    whose enclosing braces never close does not hide balanced blocks
    nested inside it. A bare block is returned unchanged.
    """
    if not raw:
        raise NoStructuredBlock("empty input")
    block = _scan_for_block(raw, quote_aware=True)
    if block is None:
        block = _scan_for_block(raw, quote_aware=False)
    if block is None:
        raise NoStructuredBlock("no balanced {...} block in input")
    return block


def _decode_block(block: str) -> dict:
    try:
        obj = json.loads(block)
    except (json.JSONDecodeError, ValueError, RecursionError) as exc:
        raise MalformedBlock(f"block is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedBlock("block did not decode to an object")
    return obj


def _decode_function_name(obj: dict) -> str:
    name = obj.get("function")
    if not isinstance(name, str):
        raise MalformedBlock("missing or non-string 'function' field")
    return name.strip().lower()


def _decode_fields(obj: dict, function: FunctionKind) -> Invocation:
    item_raw = obj.get("item")
    if item_raw is None:
        item = ItemKind.UNSPECIFIED
    elif isinstance(item_raw, str):
        # Unknown item strings degrade to UNSPECIFIED (model jitter);
        # full_outfit_change then surfaces ItemRequired below.
        try:
            item = ItemKind(item_raw.strip().lower())
        except ValueError:
            item = ItemKind.UNSPECIFIED
    else:
        raise MalformedBlock("non-string 'item' field")

    details = obj.get("details")
    if details is None:
        raise MissingDetails("details field missing")
    if not isinstance(details, str):
        raise MalformedBlock("non-string 'details' field")
    if not details.strip():
        raise MissingDetails("details field blank")

    reply = obj.get("reply")
    if not isinstance(reply, str):
        reply = ""

    return Invocation(function=function, item=item, details=details, reply=reply)


def parse_invocation(raw: str) -> Invocation:
    """Parse raw model output into an Invocation.

    Unknown keys are ignored; a missing ``item`` defaults to unspecified
    and a missing ``reply`` to the empty string. Function and item names
    are matched case-insensitively with surrounding whitespace trimmed.
    """
    block = extract_structured_block(raw)
    obj = _decode_block(block)
    name = _decode_function_name(obj)
    try:
        function = FunctionKind(name)
    except ValueError:
        raise UnknownFunction(name) from None
    return _decode_fields(obj, function)


def parse_agent_response(raw: str) -> Invocation | NotTryOn:
    """Parse raw model output, admitting the ``none`` pseudo-function.

    The function enum stays closed: ``none`` responses are returned as a
    NotTryOn marker carrying only the user-facing reply, everything else
    goes through parse_invocation's rules.
    """
    block = extract_structured_block(raw)
    obj = _decode_block(block)
    name = _decode_function_name(obj)
    if name == NONE_FUNCTION:
        reply = obj.get("reply")
        return NotTryOn(reply=reply if isinstance(reply, str) else "")
    try:
        function = FunctionKind(name)
    except ValueError:
        raise UnknownFunction(name) from None
    return _decode_fields(obj, function)


def format_invocation(invocation: Invocation) -> str:
    """Serialize an Invocation to the canonical wire shape.

    Re-parsing the output yields an equal Invocation.
    """
    return json.dumps(
        {
            "function": invocation.function.value,
            "item": invocation.item.value,
            "details": invocation.details,
            "reply": invocation.reply,
        },
        ensure_ascii=False,
    )
