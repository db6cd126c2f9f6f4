"""Pluggable model backends: deterministic mocks and HTTP wire clients."""

from .base import (
    BackendConfig,
    BackendKind,
    BackendMode,
    EditRequest,
    ModelStack,
    SegmentationQuery,
    build_stack,
    mock_stack,
)

__all__ = [
    "BackendConfig",
    "BackendKind",
    "BackendMode",
    "EditRequest",
    "ModelStack",
    "SegmentationQuery",
    "build_stack",
    "mock_stack",
]
