"""HTTP clients for live model backends.

One wire format for every image-bearing call: a JSON body with base64 PNG
fields plus plain metadata fields. Every response carries ``model_id`` and
``latency_ms``. Field names are frozen in PROTOCOL.md at the repo root.

Clients honor the configured timeout per attempt and retry connection
failures and timeouts up to ``retry_count`` times; a bounded semaphore
caps in-flight calls per backend.
"""

from __future__ import annotations

import base64
import threading

import numpy as np
import requests

from ..errors import BackendTimeout, BackendUnavailable, ProtocolError
from ..imaging import binarize, decode_parse_map, decode_png, encode_png, mask_to_image
from .base import BackendConfig, BackendMode, EditRequest, SegmentationQuery


def _b64_png(image: np.ndarray) -> str:
    return base64.b64encode(encode_png(image)).decode("ascii")


class _RemoteClient:
    mode = BackendMode.REMOTE

    def __init__(self, config: BackendConfig):
        self.kind = config.kind
        self.config = config
        self._slots = threading.BoundedSemaphore(max(1, config.concurrency))

    def _post(self, payload: dict, url: str | None = None) -> dict:
        target = url or self.config.endpoint_url
        timeout_s = self.config.timeout_ms / 1000.0
        attempts = self.config.retry_count + 1
        last_error: Exception | None = None
        for _ in range(attempts):
            try:
                with self._slots:
                    response = requests.post(target, json=payload, timeout=timeout_s)
            except requests.Timeout as exc:
                last_error = BackendTimeout(
                    f"{self.kind.value} backend timed out after {timeout_s}s",
                    kind=self.kind.value,
                )
                last_error.__cause__ = exc
                continue
            except requests.ConnectionError as exc:
                last_error = BackendUnavailable(
                    f"{self.kind.value} backend unreachable: {exc}",
                    kind=self.kind.value,
                )
                last_error.__cause__ = exc
                continue
            if not 200 <= response.status_code < 300:
                raise ProtocolError(
                    f"{self.kind.value} backend answered HTTP {response.status_code}",
                    kind=self.kind.value,
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise ProtocolError(
                    f"{self.kind.value} backend answered non-JSON body",
                    kind=self.kind.value,
                ) from exc
            if not isinstance(body, dict) or "model_id" not in body:
                raise ProtocolError(
                    f"{self.kind.value} backend response missing model_id",
                    kind=self.kind.value,
                )
            return body
        assert last_error is not None
        raise last_error

    def _field(self, body: dict, name: str) -> object:
        if name not in body:
            raise ProtocolError(
                f"{self.kind.value} backend response missing {name!r}",
                kind=self.kind.value,
            )
        return body[name]

    def _png_field(self, body: dict, name: str) -> np.ndarray:
        value = self._field(body, name)
        try:
            return decode_png(base64.b64decode(value, validate=True))
        except Exception as exc:
            raise ProtocolError(
                f"{self.kind.value} backend sent undecodable PNG in {name!r}",
                kind=self.kind.value,
            ) from exc


class RemoteChat(_RemoteClient):
    def chat_complete(self, messages: list[tuple[str, str]]) -> str:
        if not messages or messages[-1][0] != "user":
            raise ValueError("last message must have role 'user'")
        body = self._post(
            {"messages": [{"role": role, "content": text} for role, text in messages]}
        )
        text = self._field(body, "text")
        if not isinstance(text, str):
            raise ProtocolError("chat backend sent non-string text", kind=self.kind.value)
        return text


class RemoteEmbedder(_RemoteClient):
    """Client for both text and image embedding endpoints.

    ``endpoint_url`` addresses the text endpoint; the image endpoint is
    derived by replacing a trailing ``/text`` path segment with ``/image``
    (otherwise the same URL serves both payload shapes).
    """

    def __init__(self, config: BackendConfig):
        super().__init__(config)
        self._text_url = config.endpoint_url
        if config.endpoint_url.rstrip("/").endswith("/text"):
            self._image_url = config.endpoint_url.rstrip("/")[: -len("text")] + "image"
        else:
            self._image_url = config.endpoint_url

    def _embedding(self, body: dict) -> np.ndarray:
        values = self._field(body, "embedding")
        try:
            vec = np.asarray(values, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ProtocolError("embed backend sent a non-numeric embedding",
                                kind=self.kind.value) from exc
        if vec.ndim != 1 or vec.size == 0:
            raise ProtocolError("embed backend sent a malformed embedding",
                                kind=self.kind.value)
        return vec

    def embed_text(self, text: str) -> np.ndarray:
        if not text.strip():
            raise ValueError("cannot embed empty text")
        return self._embedding(self._post({"text": text}, url=self._text_url))

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        return self._embedding(
            self._post({"image_png": _b64_png(image)}, url=self._image_url)
        )


class RemoteRefiner(_RemoteClient):
    def refine_prompt(self, image: np.ndarray, instruction: str) -> str:
        if not instruction.strip():
            raise ValueError("cannot refine an empty instruction")
        body = self._post(
            {"image_png": _b64_png(image), "instruction": instruction}
        )
        text = self._field(body, "text")
        if not isinstance(text, str):
            raise ProtocolError("refine backend sent non-string text", kind=self.kind.value)
        return text


class RemoteSegmenter(_RemoteClient):
    def segment(self, query: SegmentationQuery) -> np.ndarray:
        body = self._post(
            {"image_png": _b64_png(query.image), "instruction": query.instruction}
        )
        mask_img = self._png_field(body, "mask_png")
        if mask_img.ndim != 2:
            raise ProtocolError("segment backend sent a non-grayscale mask",
                                kind=self.kind.value)
        return binarize(mask_img)


class RemoteHumanParser(_RemoteClient):
    def parse_human(self, image: np.ndarray) -> np.ndarray:
        body = self._post({"image_png": _b64_png(image)})
        value = self._field(body, "parse_png")
        try:
            return decode_parse_map(base64.b64decode(value, validate=True))
        except Exception as exc:
            raise ProtocolError(
                "parse backend sent an undecodable parse map", kind=self.kind.value
            ) from exc


class RemotePoseEstimator(_RemoteClient):
    def estimate_pose(self, image: np.ndarray) -> np.ndarray:
        body = self._post({"image_png": _b64_png(image)})
        return self._png_field(body, "pose_png")


class RemoteImageTryOn(_RemoteClient):
    def tryon_image_based(
        self, masked_person: np.ndarray, garment: np.ndarray, seed: int
    ) -> np.ndarray:
        body = self._post(
            {
                "masked_person_png": _b64_png(masked_person),
                "garment_png": _b64_png(garment),
                "seed": int(seed),
            }
        )
        return self._png_field(body, "image_png")


class RemoteTextEditor(_RemoteClient):
    def edit_text_based(self, request: EditRequest) -> np.ndarray:
        body = self._post(
            {
                "mask_png": _b64_png(mask_to_image(request.mask)),
                "masked_image_png": _b64_png(request.masked_image),
                "pose_png": _b64_png(request.pose_image),
                "guidance_prompt": request.guidance_prompt,
                "seed": int(request.seed),
            }
        )
        return self._png_field(body, "image_png")
