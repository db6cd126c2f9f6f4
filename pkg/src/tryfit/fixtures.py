"""Shipped fixture assets and their procedural generators.

The repo carries a small deterministic fixture set: one rendered person
image and a garment catalog of caption-tagged color swatches. Everything
is reproducible from code (``scripts/make_fixtures.py`` regenerates the
committed files), which keeps mock-backend behavior aligned with the
assets by construction.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .backends.mock import default_parse_layout, encode_caption_tag
from .imaging import ParseLabel

PERSON_WIDTH = 96
PERSON_HEIGHT = 128
SWATCH_SIZE = 64

# (filename stem, category, caption, swatch RGB)
FIXTURE_GARMENTS: tuple[tuple[str, str, str, tuple[int, int, int]], ...] = (
    ("black_tee", "top", "plain black tee", (20, 20, 20)),
    ("blue_jeans", "bottom", "blue denim jeans", (40, 60, 160)),
    ("green_dress", "dress", "green summer dress", (30, 140, 60)),
    ("navy_dress", "dress", "navy blue maxi dress", (25, 35, 90)),
    ("red_top", "top", "red floral top", (200, 30, 40)),
    ("white_skirt", "bottom", "white pleated skirt", (240, 240, 240)),
)

_LABEL_COLORS: dict[int, tuple[int, int, int]] = {
    int(ParseLabel.BACKGROUND): (226, 226, 230),
    int(ParseLabel.HAIR): (70, 48, 32),
    int(ParseLabel.FACE): (224, 182, 150),
    int(ParseLabel.UPPER_CLOTHES): (38, 126, 130),
    int(ParseLabel.LOWER_CLOTHES): (52, 58, 96),
    int(ParseLabel.DRESS): (142, 58, 118),
    int(ParseLabel.ARMS): (224, 182, 150),
    int(ParseLabel.LEGS): (214, 172, 140),
    int(ParseLabel.SHOES): (30, 30, 30),
    int(ParseLabel.OTHER): (128, 128, 128),
}


def render_person(parse: np.ndarray) -> np.ndarray:
    """Render a parse map into a flat-color person image."""
    out = np.zeros((*parse.shape, 3), dtype=np.uint8)
    for label, color in _LABEL_COLORS.items():
        out[parse == label] = color
    return out


def fixture_parse_map() -> np.ndarray:
    return default_parse_layout(PERSON_WIDTH, PERSON_HEIGHT)


def fixture_person() -> np.ndarray:
    return render_person(fixture_parse_map())


def make_swatch(color: tuple[int, int, int], caption: str, size: int = SWATCH_SIZE) -> np.ndarray:
    """A solid-color garment swatch carrying its caption's embedding tag."""
    swatch = np.full((size, size, 3), color, dtype=np.uint8)
    return encode_caption_tag(swatch, caption)


def captions_tsv() -> str:
    lines = [
        f"{stem}.png\t{category}\t{caption}"
        for stem, category, caption, _ in FIXTURE_GARMENTS
    ]
    return "\n".join(lines) + "\n"


def fixtures_dir() -> Path:
    """Path to the packaged fixture directory."""
    return Path(str(resources.files("tryfit.data").joinpath("fixtures")))


def person_path() -> Path:
    return fixtures_dir() / "person.png"


def catalog_images_dir() -> Path:
    return fixtures_dir() / "catalog"


def captions_path() -> Path:
    return fixtures_dir() / "captions.tsv"
