"""Service configuration: JSON file, overridden by TF_* environment variables."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .backends.base import (
    DEFAULT_CONCURRENCY,
    DEFAULT_RETRY_COUNT,
    DEFAULT_TIMEOUT_MS,
    BackendConfig,
    BackendKind,
    BackendMode,
)
from .errors import TryFitError

MIN_UPLOAD_BYTES = 1 << 20  # hard floor: 1 MiB
DEFAULT_MAX_UPLOAD_BYTES = 8 << 20
DEFAULT_IMAGE_TTL_SECONDS = 24 * 3600

# Calibration defaults, not values from any reference system: mock
# embeddings are well separated, live embedding models much less so.
DEFAULT_TAU_MOCK = 0.50
DEFAULT_TAU_REMOTE = 0.25


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8080"
    tau: float | None = None
    catalog_path: str | None = None
    template_path: str | None = None
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    concurrency_limit: int = 8
    image_ttl_seconds: int = DEFAULT_IMAGE_TTL_SECONDS
    mask_dilation_radius: int = 0
    ui_dir: str | None = None
    backends: dict[BackendKind, BackendConfig] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tau is not None and not 0.0 <= self.tau <= 1.0:
            raise TryFitError(f"tau must be in [0, 1], got {self.tau}")
        if self.max_upload_bytes < MIN_UPLOAD_BYTES:
            raise TryFitError("max_upload_bytes must be at least 1 MiB")
        if self.concurrency_limit < 1:
            raise TryFitError("concurrency_limit must be >= 1")

    def resolved_tau(self) -> float:
        if self.tau is not None:
            return self.tau
        embed_cfg = self.backends.get(BackendKind.EMBED)
        if embed_cfg is not None and embed_cfg.mode is BackendMode.REMOTE:
            return DEFAULT_TAU_REMOTE
        return DEFAULT_TAU_MOCK

    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        return host or "127.0.0.1", int(port)


def _backend_config(kind: BackendKind, doc: Mapping) -> BackendConfig:
    try:
        mode = BackendMode(str(doc.get("mode", "mock")).lower())
    except ValueError as exc:
        raise TryFitError(f"{kind.value}: unknown backend mode {doc.get('mode')!r}") from exc
    return BackendConfig(
        kind=kind,
        mode=mode,
        endpoint_url=str(doc.get("url", doc.get("endpoint_url", ""))),
        timeout_ms=int(doc.get("timeout_ms", DEFAULT_TIMEOUT_MS)),
        retry_count=int(doc.get("retry_count", DEFAULT_RETRY_COUNT)),
        concurrency=int(doc.get("concurrency", DEFAULT_CONCURRENCY)),
    )


def _apply_env_backends(
    backends: dict[BackendKind, BackendConfig], env: Mapping[str, str]
) -> None:
    for kind in BackendKind:
        key = kind.value.upper()
        mode_var = env.get(f"TF_BACKEND_{key}_MODE")
        url_var = env.get(f"TF_BACKEND_{key}_URL")
        if mode_var is None and url_var is None:
            continue
        current = backends.get(kind, BackendConfig(kind=kind))
        mode = BackendMode(mode_var.lower()) if mode_var else current.mode
        url = url_var if url_var is not None else current.endpoint_url
        if url_var and mode_var is None:
            mode = BackendMode.REMOTE
        backends[kind] = BackendConfig(
            kind=kind,
            mode=mode,
            endpoint_url=url,
            timeout_ms=current.timeout_ms,
            retry_count=current.retry_count,
            concurrency=current.concurrency,
        )


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> ServiceConfig:
    """Build the service configuration from an optional file plus TF_* overrides."""
    env = os.environ if env is None else env
    doc: dict = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise TryFitError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise TryFitError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise TryFitError("config file must contain a JSON object")

    backends: dict[BackendKind, BackendConfig] = {}
    for name, entry in (doc.get("backends") or {}).items():
        try:
            kind = BackendKind(str(name).lower())
        except ValueError as exc:
            raise TryFitError(f"unknown backend kind {name!r} in config") from exc
        if not isinstance(entry, Mapping):
            raise TryFitError(f"backend entry {name!r} must be an object")
        backends[kind] = _backend_config(kind, entry)
    _apply_env_backends(backends, env)

    def pick(key: str, env_var: str, default):
        if env_var in env:
            return env[env_var]
        return doc.get(key, default)

    tau_raw = pick("tau", "TF_TAU", None)
    return ServiceConfig(
        listen=str(pick("listen", "TF_LISTEN", "127.0.0.1:8080")),
        tau=float(tau_raw) if tau_raw is not None else None,
        catalog_path=pick("catalog_path", "TF_CATALOG_PATH", None),
        template_path=pick("template_path", "TF_TEMPLATE_PATH", None),
        max_upload_bytes=int(pick("max_upload_bytes", "TF_MAX_UPLOAD_BYTES", DEFAULT_MAX_UPLOAD_BYTES)),
        concurrency_limit=int(pick("concurrency_limit", "TF_CONCURRENCY_LIMIT", 8)),
        image_ttl_seconds=int(pick("image_ttl_seconds", "TF_IMAGE_TTL_SECONDS", DEFAULT_IMAGE_TTL_SECONDS)),
        mask_dilation_radius=int(pick("mask_dilation_radius", "TF_MASK_DILATION_RADIUS", 0)),
        ui_dir=pick("ui_dir", "TF_UI_DIR", None),
        backends=backends,
    )
