"""Persistence and ingestion for the in-shop garment database.

On disk a catalog is a file pair inside one directory:

* ``catalog.meta`` — UTF-8 JSON: format version, embedding dimension,
  image root, per-record metadata, and a SHA-256 checksum of the blob.
* ``catalog.vec``  — little-endian float32 embeddings, concatenated in
  record order.

Catalogs are immutable while serving; updates are rebuild-and-swap.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import matching
from .errors import (
    CaptionParseError,
    CorruptIndex,
    EmptyCatalog,
    IoError,
    MissingImage,
    VersionMismatch,
)
from .imaging import load_png
from .parsing import ItemKind

CATALOG_VERSION = 1
META_NAME = "catalog.meta"
VEC_NAME = "catalog.vec"

CATEGORIES = ("top", "bottom", "dress")


@dataclass(frozen=True)
class GarmentRecord:
    """One in-shop garment: metadata plus a unit-norm image embedding."""

    garment_id: str
    category: str
    caption: str
    image_path: str
    embedding: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GarmentRecord):
            return NotImplemented
        return (
            self.garment_id == other.garment_id
            and self.category == other.category
            and self.caption == other.caption
            and self.image_path == other.image_path
            and self.embedding.dtype == other.embedding.dtype
            and np.array_equal(self.embedding, other.embedding)
        )


@dataclass(frozen=True)
class Catalog:
    """The garment database: records ordered by id, all embeddings one dimension."""

    records: tuple[GarmentRecord, ...]
    embedding_dim: int
    catalog_version: int = CATALOG_VERSION
    image_root: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def get(self, garment_id: str) -> GarmentRecord | None:
        for rec in self.records:
            if rec.garment_id == garment_id:
                return rec
        return None


def ingest(image_dir: str | Path, captions_file: str | Path, embed) -> Catalog:
    """Build a catalog from a directory of garment images and a captions file.

    The captions file is UTF-8, one record per line, tab-separated:
    ``filename<TAB>category<TAB>caption``. Each image is embedded with the
    configured embedding backend. Records come out sorted by garment id,
    so re-running on unchanged inputs reproduces the catalog byte for byte.
    """
    image_dir = Path(image_dir)
    try:
        lines = Path(captions_file).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read captions file: {exc}") from exc

    records = []
    seen: set[str] = set()
    dim: int | None = None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CaptionParseError(
                f"line {line_no}: expected 3 tab-separated fields, got {len(parts)}"
            )
        filename, category, caption = (p.strip() for p in parts)
        if category not in CATEGORIES:
            raise CaptionParseError(
                f"line {line_no}: unknown category {category!r} "
                f"(expected one of {', '.join(CATEGORIES)})"
            )
        if not filename or not caption:
            raise CaptionParseError(f"line {line_no}: blank filename or caption")
        path = image_dir / filename
        if not path.is_file():
            raise MissingImage(f"{filename} referenced on line {line_no} does not exist")
        garment_id = Path(filename).stem
        if garment_id in seen:
            raise CaptionParseError(f"line {line_no}: duplicate garment id {garment_id!r}")
        seen.add(garment_id)
        embedding = np.asarray(embed.embed_image(load_png(path)), dtype=np.float32)
        if dim is None:
            dim = int(embedding.size)
        elif embedding.size != dim:
            raise CaptionParseError(
                f"line {line_no}: embedding dimension {embedding.size} != {dim}"
            )
        records.append(
            GarmentRecord(
                garment_id=garment_id,
                category=category,
                caption=caption,
                image_path=filename,
                embedding=embedding,
            )
        )

    records.sort(key=lambda rec: rec.garment_id)
    return Catalog(
        records=tuple(records),
        embedding_dim=dim or 0,
        catalog_version=CATALOG_VERSION,
        image_root=str(image_dir.resolve()),
    )


def save(catalog: Catalog, directory: str | Path) -> None:
    """Write the catalog file pair into a directory."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        blob = b"".join(
            np.ascontiguousarray(rec.embedding, dtype="<f4").tobytes()
            for rec in catalog.records
        )
        meta = {
            "catalog_version": catalog.catalog_version,
            "embedding_dim": catalog.embedding_dim,
            "image_root": catalog.image_root,
            "vec_sha256": hashlib.sha256(blob).hexdigest(),
            "records": [
                {
                    "garment_id": rec.garment_id,
                    "category": rec.category,
                    "caption": rec.caption,
                    "image_path": rec.image_path,
                }
                for rec in catalog.records
            ],
        }
        (directory / VEC_NAME).write_bytes(blob)
        (directory / META_NAME).write_text(
            json.dumps(meta, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoError(f"cannot write catalog: {exc}") from exc


def load(directory: str | Path, verify_images: bool = True) -> Catalog:
    """Load a catalog file pair, verifying the checksum and format version."""
    directory = Path(directory)
    meta_path = directory / META_NAME
    vec_path = directory / VEC_NAME
    try:
        meta_text = meta_path.read_text(encoding="utf-8")
        blob = vec_path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read catalog: {exc}") from exc

    try:
        meta = json.loads(meta_text)
        version = int(meta["catalog_version"])
        dim = int(meta["embedding_dim"])
        image_root = str(meta.get("image_root", ""))
        checksum = str(meta["vec_sha256"])
        raw_records = meta["records"]
        if not isinstance(raw_records, list):
            raise TypeError("records must be a list")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorruptIndex(f"catalog metadata unreadable: {exc}") from exc

    if version > CATALOG_VERSION:
        raise VersionMismatch(
            f"catalog_version {version} is newer than supported {CATALOG_VERSION}"
        )
    if hashlib.sha256(blob).hexdigest() != checksum:
        raise CorruptIndex("embedding blob fails its checksum")
    expected = len(raw_records) * dim * 4
    if len(blob) != expected:
        raise CorruptIndex(
            f"embedding blob is {len(blob)} bytes, expected {expected}"
        )

    vectors = np.frombuffer(blob, dtype="<f4")
    records = []
    seen: set[str] = set()
    for i, entry in enumerate(raw_records):
        try:
            garment_id = str(entry["garment_id"])
            category = str(entry["category"])
            caption = str(entry["caption"])
            image_path = str(entry["image_path"])
        except (KeyError, TypeError) as exc:
            raise CorruptIndex(f"record {i} malformed: {exc}") from exc
        if garment_id in seen:
            raise CorruptIndex(f"duplicate garment id {garment_id!r}")
        seen.add(garment_id)
        if verify_images:
            path = Path(image_root) / image_path if image_root else directory / image_path
            if not path.is_file():
                raise MissingImage(f"garment image missing: {path}")
        records.append(
            GarmentRecord(
                garment_id=garment_id,
                category=category,
                caption=caption,
                image_path=image_path,
                embedding=vectors[i * dim : (i + 1) * dim].copy(),
            )
        )

    return Catalog(
        records=tuple(records),
        embedding_dim=dim,
        catalog_version=version,
        image_root=image_root,
    )


def garment_image(catalog: Catalog, garment_id: str) -> np.ndarray:
    """Load a garment's image from the catalog's image root."""
    rec = catalog.get(garment_id)
    if rec is None:
        raise EmptyCatalog(f"garment {garment_id!r} not in catalog")
    path = Path(catalog.image_root) / rec.image_path if catalog.image_root else Path(rec.image_path)
    if not path.is_file():
        raise MissingImage(f"garment image missing: {path}")
    return load_png(path)


def search(
    catalog: Catalog,
    query_text: str,
    k: int,
    embed,
    item_filter: ItemKind | None = None,
) -> list[tuple[str, float]]:
    """Top-k garments by match score, descending; ties break to the smaller id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    candidates = matching.filter_records(catalog.records, item_filter)
    if not candidates:
        raise EmptyCatalog("no garments to search")
    query = matching.normalize(embed.embed_text(query_text))
    scored = [
        (rec.garment_id, matching.cosine_similarity(query, np.asarray(rec.embedding, dtype=np.float64)))
        for rec in candidates
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def with_image_root(catalog: Catalog, image_root: str | Path) -> Catalog:
    """A copy of the catalog resolving garment images under a different root."""
    return replace(catalog, image_root=str(image_root))
