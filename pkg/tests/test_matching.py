from __future__ import annotations

import math
import random

import numpy as np
import pytest

from tryfit import matching
from tryfit.catalog import Catalog, GarmentRecord
from tryfit.errors import DimensionMismatch, EmptyCatalog, ZeroVector
from tryfit.matching import ImageBased, TextBased
from tryfit.parsing import ItemKind

from .oracles import best_match_oracle


def _record(garment_id: str, vec, category: str = "top") -> GarmentRecord:
    return GarmentRecord(
        garment_id=garment_id,
        category=category,
        caption=garment_id,
        image_path=f"{garment_id}.png",
        embedding=np.asarray(vec, dtype=np.float32),
    )


def _catalog(records) -> Catalog:
    return Catalog(records=tuple(records), embedding_dim=len(records[0].embedding))


# --- normalize / cosine ---

def test_normalize_pythagorean() -> None:
    assert np.allclose(matching.normalize([3, 4]), [0.6, 0.8])


def test_normalize_unit_passthrough() -> None:
    assert np.allclose(matching.normalize([1, 0, 0]), [1, 0, 0])


def test_normalize_zero_vector_rejected() -> None:
    with pytest.raises(ZeroVector):
        matching.normalize([0.0, 0.0])


def test_normalize_unit_norm_within_tolerance() -> None:
    rng = np.random.default_rng(0)
    for _ in range(50):
        vec = rng.normal(size=rng.integers(1, 128))
        if np.linalg.norm(vec) == 0:
            continue
        assert abs(np.linalg.norm(matching.normalize(vec)) - 1.0) < 1e-6


def test_cosine_self_similarity_and_orthogonality() -> None:
    u = matching.normalize([0.2, -0.4, 0.9])
    assert matching.cosine_similarity(u, u) == pytest.approx(1.0, abs=1e-12)
    assert matching.cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_cosine_longhand_value() -> None:
    a = matching.normalize([1, 2, 3])
    b = matching.normalize([4, 5, 6])
    # dot = 32; |a| = sqrt(14), |b| = sqrt(77); 32/sqrt(1078) = 0.974631846...
    assert matching.cosine_similarity(a, b) == pytest.approx(0.974632, abs=1e-6)


def test_cosine_symmetric_exactly() -> None:
    rng = np.random.default_rng(1)
    for _ in range(100):
        a = matching.normalize(rng.normal(size=32))
        b = matching.normalize(rng.normal(size=32))
        assert matching.cosine_similarity(a, b) == matching.cosine_similarity(b, a)


def test_cosine_dimension_mismatch() -> None:
    with pytest.raises(DimensionMismatch):
        matching.cosine_similarity(np.zeros(3), np.zeros(4))


# --- best_match ---

def test_best_match_exact_member() -> None:
    catalog = _catalog([_record("g1", [1, 0]), _record("g2", [0, 1])])
    assert matching.best_match(np.array([1.0, 0.0]), catalog) == ("g1", 1.0)


def test_best_match_tie_breaks_to_smaller_id() -> None:
    catalog = _catalog([_record("g2", [1, 0]), _record("g1", [1, 0])])
    garment_id, score = matching.best_match(np.array([1.0, 0.0]), catalog)
    assert garment_id == "g1" and score == 1.0


def test_best_match_item_filter() -> None:
    catalog = _catalog(
        [_record("top1", [1, 0], "top"), _record("dress1", [1, 0], "dress")]
    )
    gid, _ = matching.best_match(np.array([1.0, 0.0]), catalog, ItemKind.FULL_BODY)
    assert gid == "dress1"
    with pytest.raises(EmptyCatalog):
        matching.best_match(np.array([1.0, 0.0]),
                            _catalog([_record("top1", [1, 0], "top")]),
                            ItemKind.LOWER_BODY)


def test_best_match_equals_exhaustive_oracle() -> None:
    rng = np.random.default_rng(2)
    for _ in range(25):
        n = int(rng.integers(1, 120))
        dim = int(rng.integers(2, 24))
        records = [
            _record(f"g{idx:04d}", matching.normalize(rng.normal(size=dim)))
            for idx in range(n)
        ]
        # inject exact duplicates to force ties
        if n >= 3:
            records[1] = _record("g0001", records[0].embedding.copy())
        catalog = _catalog(records)
        query = matching.normalize(rng.normal(size=dim))
        expected = best_match_oracle(query, [(r.garment_id, r.embedding) for r in records])
        assert matching.best_match(query, catalog) == expected


def test_best_match_scale_invariance_of_argmax() -> None:
    rng = np.random.default_rng(3)
    raws = [rng.normal(size=8) for _ in range(30)]
    query = matching.normalize(rng.normal(size=8))
    for scale in (0.001, 0.5, 3.0, 1e6):
        records = [_record(f"g{i:02d}", matching.normalize(np.asarray(r) * scale))
                   for i, r in enumerate(raws)]
        chosen, _ = matching.best_match(query, _catalog(records))
        baseline, _ = matching.best_match(
            query, _catalog([_record(f"g{i:02d}", matching.normalize(r)) for i, r in enumerate(raws)])
        )
        assert chosen == baseline


# --- route ---

def test_route_above_below_and_boundary() -> None:
    assert isinstance(matching.route(0.90, 0.25), ImageBased)
    assert isinstance(matching.route(0.10, 0.25), TextBased)
    boundary = matching.route(0.25, 0.25, "g1")
    assert isinstance(boundary, ImageBased)
    assert boundary.garment_id == "g1"


def test_route_law_randomized() -> None:
    rng = random.Random(4)
    for _ in range(5000):
        tau = rng.random()
        score = rng.uniform(-1.0, 1.0)
        if rng.random() < 0.1:
            score = tau  # force exact-boundary cases
        decided = matching.route(score, tau)
        assert isinstance(decided, ImageBased) == (score >= tau)


def test_route_rejects_bad_tau() -> None:
    with pytest.raises(ValueError):
        matching.route(0.5, 1.5)
