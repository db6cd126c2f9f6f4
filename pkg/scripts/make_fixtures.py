#!/usr/bin/env python3
"""Regenerate the committed fixture assets under src/tryfit/data/fixtures/."""

from pathlib import Path

from tryfit import fixtures
from tryfit.imaging import save_png


def main() -> None:
    root = Path(__file__).resolve().parents[1] / "src" / "tryfit" / "data" / "fixtures"
    catalog_dir = root / "catalog"
    catalog_dir.mkdir(parents=True, exist_ok=True)

    save_png(fixtures.fixture_person(), root / "person.png")
    save_png(fixtures.fixture_parse_map(), root / "person_parse.png")
    for stem, _category, caption, color in fixtures.FIXTURE_GARMENTS:
        save_png(fixtures.make_swatch(color, caption), catalog_dir / f"{stem}.png")
    (root / "captions.tsv").write_text(fixtures.captions_tsv(), encoding="utf-8")
    print(f"wrote fixtures under {root}")


if __name__ == "__main__":
    main()
