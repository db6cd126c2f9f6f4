"""Deterministic in-process stand-ins for every model backend.

Each mock is a pure function of its inputs (plus seed): repeated calls
return byte-identical results, which makes whole-pipeline runs replayable.

The mock embedders are a test instrument: text embeds as a signed hashed
bag-of-words, and fixture garment swatches carry their caption's hash
buckets in a tag strip of pixels, so a garment's caption and its swatch
embed near each other. Untagged images fall back to a channel-histogram
signature. Both routing outcomes (match score above and below the
threshold) are reachable with the shipped fixture catalog.
"""

from __future__ import annotations

import hashlib
import json
import math
import re

import numpy as np

from ..errors import NoRegionFound
from ..imaging import ParseLabel, bounding_box, mask_from_item
from ..matching import normalize
from ..parsing import ItemKind
from ..prompting import instruction_from_prompt
from .base import BackendKind, BackendMode, EditRequest, SegmentationQuery

EMBED_DIM = 64

# Tag strip markers for caption-tagged fixture swatches.
TAG_MARKER = (7, 77, 177)
TAG_PIXEL_BLUE = 201
_TAG_BUCKET_BASE = 64

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _hash_token(token: str) -> tuple[int, int]:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    bucket = digest[0] % EMBED_DIM
    sign = 1 if digest[1] % 2 == 0 else -1
    return bucket, sign


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _accumulate(pairs: list[tuple[int, int]], fallback_key: str) -> np.ndarray:
    acc = np.zeros(EMBED_DIM, dtype=np.float64)
    for bucket, sign in pairs:
        acc[bucket] += sign
    if not np.any(acc):
        # No tokens, or signs cancelled exactly: fall back to one stable bucket.
        digest = hashlib.sha256(fallback_key.encode("utf-8", "replace")).digest()
        acc[digest[2] % EMBED_DIM] = 1.0
    return normalize(acc)


def text_embedding(text: str) -> np.ndarray:
    """Signed hashed bag-of-words embedding, unit norm."""
    return _accumulate([_hash_token(tok) for tok in tokenize(text)], text)


def encode_caption_tag(image: np.ndarray, caption: str) -> np.ndarray:
    """Write the caption's hash buckets into the first pixel row of a swatch."""
    out = image.copy()
    if out.ndim != 3 or out.shape[2] != 3:
        raise ValueError("caption tags require a color image")
    tokens = tokenize(caption)
    if len(tokens) + 1 > out.shape[1]:
        raise ValueError("swatch too narrow for the caption tag")
    out[0, 0] = TAG_MARKER
    for i, token in enumerate(tokens, start=1):
        bucket, sign = _hash_token(token)
        out[0, i] = (_TAG_BUCKET_BASE + bucket, 255 if sign > 0 else 0, TAG_PIXEL_BLUE)
    return out


def decode_caption_tag(image: np.ndarray) -> list[tuple[int, int]] | None:
    """Read hash buckets back from a tagged swatch; None when untagged."""
    if image.ndim != 3 or image.shape[2] != 3:
        return None
    if tuple(int(v) for v in image[0, 0]) != TAG_MARKER:
        return None
    pairs: list[tuple[int, int]] = []
    for x in range(1, image.shape[1]):
        r, g, b = (int(v) for v in image[0, x])
        if b != TAG_PIXEL_BLUE or not _TAG_BUCKET_BASE <= r < _TAG_BUCKET_BASE + EMBED_DIM:
            break
        pairs.append((r - _TAG_BUCKET_BASE, 1 if g >= 128 else -1))
    return pairs


def histogram_signature(image: np.ndarray) -> np.ndarray:
    """Channel-histogram signature of an untagged image, unit norm."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        counts, _ = np.histogram(arr, bins=EMBED_DIM, range=(0, 256))
        return normalize(counts.astype(np.float64))
    parts = []
    for channel, bins in zip(range(3), (21, 21, 22)):
        counts, _ = np.histogram(arr[..., channel], bins=bins, range=(0, 256))
        parts.append(counts)
    return normalize(np.concatenate(parts).astype(np.float64))


# --- procedural person layout ---

_LAYOUT_RECTS: tuple[tuple[ParseLabel, float, float, float, float], ...] = (
    (ParseLabel.HAIR, 0.03, 0.09, 0.40, 0.60),
    (ParseLabel.FACE, 0.09, 0.18, 0.42, 0.58),
    (ParseLabel.UPPER_CLOTHES, 0.20, 0.50, 0.30, 0.70),
    (ParseLabel.ARMS, 0.22, 0.48, 0.21, 0.29),
    (ParseLabel.ARMS, 0.22, 0.48, 0.71, 0.79),
    (ParseLabel.LOWER_CLOTHES, 0.50, 0.78, 0.33, 0.67),
    (ParseLabel.LEGS, 0.78, 0.94, 0.36, 0.46),
    (ParseLabel.LEGS, 0.78, 0.94, 0.54, 0.64),
    (ParseLabel.SHOES, 0.94, 0.98, 0.34, 0.48),
    (ParseLabel.SHOES, 0.94, 0.98, 0.52, 0.66),
)


def default_parse_layout(width: int, height: int) -> np.ndarray:
    """Centered standing-person parse map at the given dimensions."""
    parse = np.zeros((height, width), dtype=np.uint8)
    for label, y0, y1, x0, x1 in _LAYOUT_RECTS:
        r0, r1 = int(round(y0 * height)), int(round(y1 * height))
        c0, c1 = int(round(x0 * width)), int(round(x1 * width))
        parse[r0:r1, c0:c1] = int(label)
    return parse


# --- chat rules ---

_OUTFIT_TRIGGER_RE = re.compile(
    r"\b(change into|change to|switch to|put on|dress me in|try on|wear)\b"
)
_EDIT_KEYWORD_RE = re.compile(
    r"\b(sleeves?|collar|neckline|neck|hem|cuffs?|shorten|lengthen|recolou?r|dye|"
    r"embroider|crop|tighten|loosen|buttons?|pockets?)\b"
)
_FULL_BODY_RE = re.compile(r"\b(dress|gown|outfit|robe|jumpsuit)\b")
_LOWER_BODY_RE = re.compile(r"\b(pants|jeans|trousers|skirt|shorts|leggings|bottoms?)\b")
_UPPER_BODY_RE = re.compile(r"\b(top|shirt|blouse|tee|t-shirt|sweater|jacket|hoodie|cardigan)\b")
_ARTICLES = {"the", "a", "an", "my", "this", "that", "some"}


def _clean_details(text: str) -> str:
    words = text.strip().strip(".!?,;:").split()
    while words and words[0].lower() in _ARTICLES:
        words.pop(0)
    return " ".join(words)


def _infer_item(text: str) -> ItemKind | None:
    if _FULL_BODY_RE.search(text):
        return ItemKind.FULL_BODY
    if _LOWER_BODY_RE.search(text):
        return ItemKind.LOWER_BODY
    if _UPPER_BODY_RE.search(text):
        return ItemKind.UPPER_BODY
    return None


class MockChat:
    """Keyword-rule chat model returning canned, format-valid responses."""

    kind = BackendKind.CHAT
    mode = BackendMode.MOCK

    def chat_complete(self, messages: list[tuple[str, str]]) -> str:
        if not messages or messages[-1][0] != "user":
            raise ValueError("last message must have role 'user'")
        raw = messages[-1][1]
        instruction = instruction_from_prompt(raw)
        text = (instruction if instruction is not None else raw).strip()
        lower = text.lower()

        trigger = _OUTFIT_TRIGGER_RE.search(lower)
        if trigger:
            details = _clean_details(text[trigger.end():])
            if not details:
                details = _clean_details(text)
            item = _infer_item(details.lower()) or _infer_item(lower)
            if item is not None:
                return json.dumps(
                    {
                        "function": "full_outfit_change",
                        "item": item.value,
                        "details": details,
                        "reply": f"Sure, changing your outfit to {details}.",
                    },
                    ensure_ascii=False,
                )

        if _EDIT_KEYWORD_RE.search(lower):
            details = _clean_details(text)
            return json.dumps(
                {
                    "function": "localized_editing",
                    "details": details,
                    "reply": f"Okay, applying this edit: {details}.",
                },
                ensure_ascii=False,
            )

        return json.dumps(
            {
                "function": "none",
                "reply": (
                    "I can help with outfit changes and clothing edits. "
                    "What would you like to change?"
                ),
            },
            ensure_ascii=False,
        )


class MockEmbedder:
    """Deterministic 64-dim text and image embeddings sharing hash buckets."""

    kind = BackendKind.EMBED
    mode = BackendMode.MOCK
    dim = EMBED_DIM

    def embed_text(self, text: str) -> np.ndarray:
        if not text.strip():
            raise ValueError("cannot embed empty text")
        return text_embedding(text)

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        arr = np.asarray(image)
        if arr.size == 0:
            raise ValueError("cannot embed an empty image")
        pairs = decode_caption_tag(arr)
        if pairs is not None:
            return _accumulate(pairs, "tagged-swatch")
        return histogram_signature(arr)


class MockRefiner:
    """Template expansion of the instruction into a guidance prompt."""

    kind = BackendKind.REFINE
    mode = BackendMode.MOCK

    def refine_prompt(self, image: np.ndarray, instruction: str) -> str:
        if not instruction.strip():
            raise ValueError("cannot refine an empty instruction")
        return (
            f"a garment with {instruction.strip()}, photorealistic, "
            "consistent with the person's pose"
        )


_SLEEVE_RE = re.compile(r"\b(sleeves?|cuffs?)\b")
_COLLAR_RE = re.compile(r"\b(collar|neckline|neck)\b")
_HEM_RE = re.compile(r"\bhem\b")

COLLAR_BAND = 0.15
HEM_BAND = 0.20


def _band_mask(region: np.ndarray, fraction: float, from_top: bool) -> np.ndarray:
    box = bounding_box(region)
    if box is None:
        return np.zeros_like(region)
    _, y0, _, bh = box
    span = max(1, math.ceil(fraction * bh))
    rows = np.zeros(region.shape[0], dtype=bool)
    if from_top:
        rows[y0 : y0 + span] = True
    else:
        rows[y0 + bh - span : y0 + bh] = True
    return region & rows[:, None]


class MockSegmenter:
    """Maps instruction keywords to fixed regions of the procedural parse map."""

    kind = BackendKind.SEGMENT
    mode = BackendMode.MOCK

    def segment(self, query: SegmentationQuery) -> np.ndarray:
        h, w = query.image.shape[:2]
        parse = default_parse_layout(w, h)
        lower = query.instruction.lower()
        if _SLEEVE_RE.search(lower):
            mask = parse == int(ParseLabel.ARMS)
        elif _COLLAR_RE.search(lower):
            mask = _band_mask(parse == int(ParseLabel.UPPER_CLOTHES), COLLAR_BAND, from_top=True)
        elif _HEM_RE.search(lower):
            for label in (ParseLabel.DRESS, ParseLabel.LOWER_CLOTHES, ParseLabel.UPPER_CLOTHES):
                region = parse == int(label)
                if region.any():
                    break
            mask = _band_mask(region, HEM_BAND, from_top=False)
        else:
            raise NoRegionFound(
                f"no editable region recognized in {query.instruction!r}",
                kind=BackendKind.SEGMENT.value,
            )
        if not mask.any():
            raise NoRegionFound(
                "segmentation produced an empty mask", kind=BackendKind.SEGMENT.value
            )
        return mask


class MockHumanParser:
    """Returns the procedural centered-body layout at the image's dimensions."""

    kind = BackendKind.PARSE_HUMAN
    mode = BackendMode.MOCK

    def parse_human(self, image: np.ndarray) -> np.ndarray:
        h, w = image.shape[:2]
        return default_parse_layout(w, h)


class MockPoseEstimator:
    """Gradient silhouette over the body region of the procedural layout."""

    kind = BackendKind.POSE
    mode = BackendMode.MOCK

    def estimate_pose(self, image: np.ndarray) -> np.ndarray:
        h, w = image.shape[:2]
        parse = default_parse_layout(w, h)
        body = parse != int(ParseLabel.BACKGROUND)
        xs = np.linspace(0, 255, num=max(w, 1), dtype=np.float64)
        ys = np.linspace(0, 255, num=max(h, 1), dtype=np.float64)
        out = np.zeros((h, w, 3), dtype=np.uint8)
        out[..., 0] = np.where(body, np.round(xs)[None, :], 0)
        out[..., 1] = np.where(body, np.round(ys)[:, None], 0)
        out[..., 2] = np.where(body, parse.astype(np.uint16) * 25, 0).astype(np.uint8)
        return out


def _resize_nearest(image: np.ndarray, height: int, width: int) -> np.ndarray:
    src_h, src_w = image.shape[:2]
    rows = (np.arange(height) * src_h) // max(height, 1)
    cols = (np.arange(width) * src_w) // max(width, 1)
    rows = np.clip(rows, 0, src_h - 1)
    cols = np.clip(cols, 0, src_w - 1)
    return image[rows[:, None], cols[None, :]]


class MockImageTryOn:
    """Composites the garment swatch, rescaled to the fill region's bbox."""

    kind = BackendKind.TRYON_IMAGE
    mode = BackendMode.MOCK

    def tryon_image_based(
        self, masked_person: np.ndarray, garment: np.ndarray, seed: int
    ) -> np.ndarray:
        out = masked_person.copy()
        if out.ndim == 3:
            fill_region = np.all(out == 128, axis=2)
        else:
            fill_region = out == 128
        box = bounding_box(fill_region)
        if box is None:
            return out
        x0, y0, bw, bh = box
        patch = garment
        if out.ndim == 3 and patch.ndim == 2:
            patch = np.repeat(patch[:, :, None], 3, axis=2)
        elif out.ndim == 2 and patch.ndim == 3:
            patch = np.asarray(np.round(
                0.299 * patch[..., 0] + 0.587 * patch[..., 1] + 0.114 * patch[..., 2]
            ), dtype=np.uint8)
        scaled = _resize_nearest(patch, bh, bw)
        crop = fill_region[y0 : y0 + bh, x0 : x0 + bw]
        window = out[y0 : y0 + bh, x0 : x0 + bw]
        window[crop] = scaled[crop]
        return out


class MockTextEditor:
    """Fills the mask region with a texture keyed by (guidance prompt, seed)."""

    kind = BackendKind.EDIT_TEXT
    mode = BackendMode.MOCK

    def edit_text_based(self, request: EditRequest) -> np.ndarray:
        digest = hashlib.sha256(
            f"{request.guidance_prompt}\n{request.seed}".encode("utf-8")
        ).digest()
        h, w = request.mask.shape
        xs = np.arange(w, dtype=np.int64)[None, :]
        ys = np.arange(h, dtype=np.int64)[:, None]
        out = request.masked_image.copy()
        if out.ndim == 3:
            texture = np.stack(
                [(digest[c] + 11 * xs + 23 * ys + 7 * c) % 256 for c in range(3)],
                axis=2,
            ).astype(np.uint8)
        else:
            texture = ((digest[0] + 11 * xs + 23 * ys) % 256).astype(np.uint8)
        out[request.mask] = texture[request.mask]
        return out
