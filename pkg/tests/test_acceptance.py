"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

from __future__ import annotations

import json
import math
import random
import string
import time

import numpy as np
import pytest

from tryfit import catalog as catalog_store
from tryfit import imaging, matching, parsing
from tryfit.backends import mock_stack
from tryfit.backends.base import SegmentationQuery
from tryfit.backends.mock import MockSegmenter
from tryfit.catalog import Catalog, GarmentRecord
from tryfit.errors import CorruptIndex, ParseError
from tryfit.imaging import mask_from_item
from tryfit.parsing import FunctionKind, Invocation, ItemKind
from tryfit.pipeline import Pipeline, new_session, trace_to_dict
from tryfit.prompting import default_template

from .oracles import best_match_oracle, psnr_oracle, ssim_oracle
from .scripts import SCRIPTS
from .stubs import CorruptingEditor, CorruptingTryOn
from .test_catalog import random_catalog
from .test_parsing import fuzz_inputs, random_invocation


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {status}: {name}{suffix}")
    assert ok, f"{name}{suffix}"


# ----------------------------------------------------------------------
# 1. Routing law: image-based iff score >= tau, boundary inclusive.

def test_routing_law_randomized_10k() -> None:
    rng = random.Random(2024)
    start = time.perf_counter()
    violations = 0
    for i in range(10_000):
        tau = rng.random()
        if i % 10 == 0:
            score = tau  # exact boundary
        elif i % 10 == 1:
            score = tau - 1e-12
        else:
            score = rng.uniform(-1.0, 1.0)
        decided = matching.route(score, tau)
        if isinstance(decided, matching.ImageBased) != (score >= tau):
            violations += 1
    elapsed = time.perf_counter() - start
    _report(
        "routing law over 10,000 (score, tau) pairs incl. boundaries",
        violations == 0 and elapsed < 1.0,
        f"violations={violations}, runtime={elapsed:.3f}s",
    )


# ----------------------------------------------------------------------
# 2. Matching oracle: best_match equals the exhaustive scan exactly.

def test_matching_oracle_100_queries() -> None:
    rng = np.random.default_rng(7)
    pyrng = random.Random(7)
    start = time.perf_counter()
    mismatches = 0
    queries_run = 0
    for _ in range(10):
        n = int(rng.integers(50, 1001))
        dim = int(rng.integers(8, 64))
        records = []
        for idx in range(n):
            vec = matching.normalize(rng.normal(size=dim)).astype(np.float32)
            records.append(
                GarmentRecord(
                    garment_id=f"g{idx:05d}", category="top", caption="",
                    image_path="x.png", embedding=vec,
                )
            )
        # force exact ties with duplicated vectors under differing ids
        for _ in range(5):
            a, b = pyrng.randrange(n), pyrng.randrange(n)
            records[b] = GarmentRecord(
                garment_id=records[b].garment_id, category="top", caption="",
                image_path="x.png", embedding=records[a].embedding.copy(),
            )
        catalog = Catalog(records=tuple(records), embedding_dim=dim)
        for _ in range(10):
            query = matching.normalize(rng.normal(size=dim))
            got = matching.best_match(query, catalog)
            expected = best_match_oracle(query, [(r.garment_id, r.embedding) for r in records])
            queries_run += 1
            if got != expected:
                mismatches += 1
    elapsed = time.perf_counter() - start
    _report(
        "best_match equals exhaustive-scan oracle on 100 random queries",
        mismatches == 0 and queries_run == 100 and elapsed < 10.0,
        f"mismatches={mismatches}, runtime={elapsed:.2f}s",
    )


# ----------------------------------------------------------------------
# 3. PSNR/SSIM against naive reimplementations, plus analytic anchors.

def test_psnr_ssim_oracle_and_anchors() -> None:
    rng = np.random.default_rng(99)
    worst_psnr = 0.0
    worst_ssim = 0.0
    for _ in range(20):
        a = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
        b = np.clip(
            a.astype(np.int16) + rng.integers(-60, 61, size=a.shape), 0, 255
        ).astype(np.uint8)
        worst_psnr = max(worst_psnr, abs(imaging.psnr(a, b) - psnr_oracle(a, b)))
        worst_ssim = max(worst_ssim, abs(imaging.ssim(a, b) - ssim_oracle(a, b)))
    img = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    anchors = (
        imaging.psnr(img, img) == math.inf
        and imaging.ssim(img, img) == 1.0
        and imaging.psnr(np.zeros((16, 16), np.uint8), np.full((16, 16), 255, np.uint8)) == 0.0
    )
    _report(
        "psnr within 1e-3 dB and ssim within 1e-6 of naive oracles; anchors exact",
        worst_psnr <= 1e-3 and worst_ssim <= 1e-6 and anchors,
        f"max |psnr delta|={worst_psnr:.2e}, max |ssim delta|={worst_ssim:.2e}",
    )


# ----------------------------------------------------------------------
# 4. Parser robustness: million-input fuzz and round-trip.

def test_parser_fuzz_one_million() -> None:
    rng = random.Random(31337)
    start = time.perf_counter()
    parsed_ok = 0
    for raw in fuzz_inputs(rng, 1_000_000):
        try:
            parsing.parse_invocation(raw)
            parsed_ok += 1
        except ParseError:
            pass
    elapsed = time.perf_counter() - start
    _report(
        "parse_invocation survives 1,000,000 fuzz inputs with typed errors only",
        True,
        f"valid={parsed_ok}, runtime={elapsed:.1f}s",
    )


def test_parser_roundtrip_1000_invocations() -> None:
    rng = random.Random(777)
    failures = 0
    for _ in range(1000):
        invocation = random_invocation(rng)
        wire = parsing.format_invocation(invocation)
        if parsing.parse_invocation(wire) != invocation:
            failures += 1
    _report(
        "round-trip equality on 1,000 random valid invocations",
        failures == 0,
        f"failures={failures}",
    )


# ----------------------------------------------------------------------
# Shared scripted-suite runner for criteria 5-7.

def _expected_mask(stack, image_before: np.ndarray, invocation: Invocation) -> np.ndarray:
    if invocation.function is FunctionKind.FULL_OUTFIT_CHANGE:
        parse = stack.human_parser.parse_human(image_before)
        return mask_from_item(parse, invocation.item)
    return MockSegmenter().segment(SegmentationQuery(image_before, invocation.details))


def _run_scripted_suite(stack, catalog, template, person):
    """Run every script; yield (script, turn, image_before, result) tuples."""
    pipeline = Pipeline(stack=stack, catalog=catalog, template=template, tau=0.50)
    for script in SCRIPTS:
        session = new_session(script.name)
        for i, turn in enumerate(script.turns):
            image_before = person if i == 0 else session.current_image.copy()
            result = pipeline.handle_message(
                session, turn.text, person_image=person if i == 0 else None
            )
            yield script, turn, image_before, result


@pytest.fixture(scope="module")
def acceptance_env():
    stack = mock_stack()
    from tryfit import fixtures

    catalog = catalog_store.ingest(
        fixtures.catalog_images_dir(), fixtures.captions_path(), stack.embedder
    )
    return stack, catalog, default_template(), fixtures.fixture_person()


# ----------------------------------------------------------------------
# 5. Outside-mask preservation on every Edited outcome, including
#    deliberately misbehaving generator backends.

def test_outside_mask_preservation(acceptance_env) -> None:
    stack, catalog, template, person = acceptance_env
    checked = 0
    violations = 0
    for _script, _turn, before, result in _run_scripted_suite(stack, catalog, template, person):
        if result.trace.outcome != "edited":
            continue
        mask = _expected_mask(stack, before, result.trace.invocation)
        checked += 1
        if not np.array_equal(result.image[~mask], before[~mask]):
            violations += 1

    # adversarial generators: the orchestrator's post-composite must win
    corrupt = mock_stack()
    corrupt.text_editor = CorruptingEditor()
    corrupt.image_tryon = CorruptingTryOn()
    pipeline = Pipeline(stack=corrupt, catalog=catalog, template=template, tau=0.50)
    for text in ("recolor the collar in emerald",
                 "change into the red floral top",
                 "change into a chartreuse hazmat gown"):
        session = new_session(f"adversarial-{text[:12]}")
        result = pipeline.handle_message(session, text, person_image=person)
        assert result.trace.outcome == "edited"
        mask = _expected_mask(corrupt, person, result.trace.invocation)
        checked += 1
        if not np.array_equal(result.image[~mask], person[~mask]):
            violations += 1

    _report(
        "outside-mask pixels bit-identical on every Edited outcome "
        "(incl. misbehaving generator stubs)",
        violations == 0 and checked >= 12,
        f"steps checked={checked}, violations={violations}",
    )


# ----------------------------------------------------------------------
# 6. End-to-end determinism: byte-identical replays, suite under 60 s.

def test_end_to_end_determinism(acceptance_env) -> None:
    stack, catalog, template, person = acceptance_env
    start = time.perf_counter()

    def run_all() -> list[tuple[str, bytes | None]]:
        outputs = []
        for _script, _turn, _before, result in _run_scripted_suite(
            stack, catalog, template, person
        ):
            trace_bytes = json.dumps(trace_to_dict(result.trace), sort_keys=True)
            outputs.append((trace_bytes, result.image_png))
        return outputs

    first = run_all()
    second = run_all()
    elapsed = time.perf_counter() - start
    _report(
        "scripted sessions replay byte-identically (traces and images)",
        first == second and elapsed < 60.0,
        f"steps={len(first)}, runtime={elapsed:.2f}s",
    )


# ----------------------------------------------------------------------
# 7. Both routing branches are exercised at the default mock tau.

def test_both_routes_exercised_at_default_tau(acceptance_env) -> None:
    stack, catalog, template, person = acceptance_env
    kinds = set()
    for _script, _turn, _before, result in _run_scripted_suite(stack, catalog, template, person):
        route = trace_to_dict(result.trace)["route"]
        if route:
            kinds.add(route["kind"])
    _report(
        "fixture catalog + mock embedder reach both routes at tau = 0.50",
        {"image_based", "text_based"} <= kinds,
        f"routes seen={sorted(kinds)}",
    )


# ----------------------------------------------------------------------
# 8. Catalog persistence: lossless round-trip; corruption is loud.

def test_catalog_persistence_roundtrip_and_corruption(tmp_path) -> None:
    rng = random.Random(4242)
    image_dir = tmp_path / "img"
    image_dir.mkdir()
    from tryfit.imaging import save_png

    nprng = np.random.default_rng(1)
    for i in range(100):
        save_png(nprng.integers(0, 256, (4, 4, 3), dtype=np.uint8),
                 image_dir / f"g{i:05d}.png")
    built = random_catalog(rng, 100, 64, str(image_dir))
    catalog_store.save(built, tmp_path / "cat")
    loaded = catalog_store.load(tmp_path / "cat")
    lossless = loaded == built and all(
        a.embedding.tobytes() == b.embedding.tobytes()
        for a, b in zip(loaded.records, built.records)
    )

    vec = tmp_path / "cat" / "catalog.vec"
    vec.write_bytes(vec.read_bytes()[:-5])
    corrupt_detected = False
    try:
        catalog_store.load(tmp_path / "cat")
    except CorruptIndex:
        corrupt_detected = True

    _report(
        "100-record catalog round-trips losslessly; truncation raises CorruptIndex",
        lossless and corrupt_detected,
        f"records={len(loaded)}",
    )
