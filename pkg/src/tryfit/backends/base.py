"""Backend configuration, request bundles, and the assembled model stack."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping
from urllib.parse import urlparse

import numpy as np

from ..errors import DimensionMismatch, TryFitError


class BackendKind(str, Enum):
    CHAT = "chat"
    EMBED = "embed"
    REFINE = "refine"
    SEGMENT = "segment"
    PARSE_HUMAN = "parse_human"
    POSE = "pose"
    TRYON_IMAGE = "tryon_image"
    EDIT_TEXT = "edit_text"


class BackendMode(str, Enum):
    REMOTE = "remote"
    MOCK = "mock"


DEFAULT_TIMEOUT_MS = 10_000
DEFAULT_RETRY_COUNT = 2
DEFAULT_CONCURRENCY = 4


@dataclass(frozen=True)
class BackendConfig:
    """How one backend kind is reached: in-process mock or remote endpoint."""

    kind: BackendKind
    mode: BackendMode = BackendMode.MOCK
    endpoint_url: str = ""
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retry_count: int = DEFAULT_RETRY_COUNT
    concurrency: int = DEFAULT_CONCURRENCY

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise TryFitError(f"{self.kind.value}: timeout must be positive")
        if self.retry_count < 0:
            raise TryFitError(f"{self.kind.value}: retry_count must be >= 0")
        if self.mode is BackendMode.REMOTE:
            parsed = urlparse(self.endpoint_url)
            if parsed.scheme not in ("http", "https") or not parsed.netloc:
                raise TryFitError(
                    f"{self.kind.value}: remote mode requires a well-formed URL, "
                    f"got {self.endpoint_url!r}"
                )


@dataclass(frozen=True)
class SegmentationQuery:
    """Input to the instruction-driven segmenter."""

    image: np.ndarray
    instruction: str

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise TryFitError("segmentation instruction must be non-empty")


@dataclass(frozen=True)
class EditRequest:
    """Conditioning bundle for the text-based editor.

    The generator derives its own noise from the seed; raw noise tensors
    are never shipped over the wire.
    """

    mask: np.ndarray
    masked_image: np.ndarray
    pose_image: np.ndarray
    guidance_prompt: str
    seed: int

    def __post_init__(self) -> None:
        hw = self.mask.shape[:2]
        if self.masked_image.shape[:2] != hw or self.pose_image.shape[:2] != hw:
            raise DimensionMismatch(
                f"edit request rasters disagree: mask {hw}, "
                f"masked {self.masked_image.shape[:2]}, pose {self.pose_image.shape[:2]}"
            )
        if not self.guidance_prompt.strip():
            raise TryFitError("guidance prompt must be non-empty")
        if self.seed < 0:
            raise TryFitError("seed must be >= 0")


@dataclass
class ModelStack:
    """Every model the pipeline talks to, one handle per backend kind."""

    chat: object
    embedder: object
    refiner: object
    segmenter: object
    human_parser: object
    pose_estimator: object
    image_tryon: object
    text_editor: object

    def all_backends(self) -> tuple[object, ...]:
        return (
            self.chat,
            self.embedder,
            self.refiner,
            self.segmenter,
            self.human_parser,
            self.pose_estimator,
            self.image_tryon,
            self.text_editor,
        )


def build_stack(configs: Mapping[BackendKind, BackendConfig] | None = None) -> ModelStack:
    """Assemble a ModelStack from per-kind configs; unconfigured kinds are mocks."""
    from . import mock, remote

    configs = dict(configs or {})

    def pick(kind: BackendKind, mock_cls, remote_cls):
        cfg = configs.get(kind, BackendConfig(kind=kind))
        if cfg.mode is BackendMode.MOCK:
            return mock_cls()
        return remote_cls(cfg)

    return ModelStack(
        chat=pick(BackendKind.CHAT, mock.MockChat, remote.RemoteChat),
        embedder=pick(BackendKind.EMBED, mock.MockEmbedder, remote.RemoteEmbedder),
        refiner=pick(BackendKind.REFINE, mock.MockRefiner, remote.RemoteRefiner),
        segmenter=pick(BackendKind.SEGMENT, mock.MockSegmenter, remote.RemoteSegmenter),
        human_parser=pick(BackendKind.PARSE_HUMAN, mock.MockHumanParser, remote.RemoteHumanParser),
        pose_estimator=pick(BackendKind.POSE, mock.MockPoseEstimator, remote.RemotePoseEstimator),
        image_tryon=pick(BackendKind.TRYON_IMAGE, mock.MockImageTryOn, remote.RemoteImageTryOn),
        text_editor=pick(BackendKind.EDIT_TEXT, mock.MockTextEditor, remote.RemoteTextEditor),
    )


def mock_stack() -> ModelStack:
    """A fully deterministic, offline model stack."""
    return build_stack({})
