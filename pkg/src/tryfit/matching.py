"""Embedding match scores and threshold routing.

Embeddings are unit-norm numpy vectors, so cosine similarity reduces to a
dot product. Catalog matching is an exhaustive scan: catalogs are a few
thousand garments at most, and exact scans keep oracle tests trivial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCatalog, ZeroVector
from .parsing import ItemKind

if TYPE_CHECKING:
    from .catalog import Catalog, GarmentRecord


@dataclass(frozen=True)
class ImageBased:
    """Route to the image-based try-on model with the matched garment."""

    garment_id: str | None
    score: float


@dataclass(frozen=True)
class TextBased:
    """Route to the text-based editor; score is None when the catalog was empty."""

    score: float | None


Route = ImageBased | TextBased

# Catalog categories each clothing item may match. Full-body requests
# match dresses only; a top must never answer a long-dress query.
ITEM_CATEGORIES: dict[ItemKind, frozenset[str]] = {
    ItemKind.UPPER_BODY: frozenset({"top"}),
    ItemKind.LOWER_BODY: frozenset({"bottom"}),
    ItemKind.FULL_BODY: frozenset({"dress"}),
}


def normalize(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Scale a vector to unit L2 norm, preserving direction."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise ZeroVector("expected a non-empty 1-D vector")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0 or not np.isfinite(norm):
        raise ZeroVector("cannot normalize a zero or non-finite vector")
    return vec / norm


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit-norm vectors; symmetric in its arguments."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(np.dot(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))


def filter_records(
    records: Sequence["GarmentRecord"], item_filter: ItemKind | None
) -> list["GarmentRecord"]:
    """Keep records whose category matches the item filter (None keeps all)."""
    if item_filter is None or item_filter is ItemKind.UNSPECIFIED:
        return list(records)
    allowed = ITEM_CATEGORIES[item_filter]
    return [rec for rec in records if rec.category in allowed]


def best_match(
    details_embedding: np.ndarray,
    catalog: "Catalog",
    item_filter: ItemKind | None = None,
) -> tuple[str, float]:
    """Highest-scoring garment for a query embedding; ties break to the smallest id."""
    candidates = filter_records(catalog.records, item_filter)
    if not candidates:
        raise EmptyCatalog(f"no garments match item filter {item_filter}")
    best_id: str | None = None
    best_score = -np.inf
    for rec in candidates:
        score = cosine_similarity(details_embedding, np.asarray(rec.embedding, dtype=np.float64))
        if score > best_score or (score == best_score and (best_id is None or rec.garment_id < best_id)):
            best_id = rec.garment_id
            best_score = score
    assert best_id is not None
    return best_id, float(best_score)


def route(score: float, tau: float, garment_id: str | None = None) -> Route:
    """Decide the generation route: image-based iff score >= tau (boundary inclusive)."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if score >= tau:
        return ImageBased(garment_id=garment_id, score=score)
    return TextBased(score=score)
