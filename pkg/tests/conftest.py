from __future__ import annotations

import numpy as np
import pytest

from tryfit import catalog as catalog_store
from tryfit import fixtures
from tryfit.backends import mock_stack
from tryfit.prompting import default_template


@pytest.fixture(scope="session")
def stack():
    return mock_stack()


@pytest.fixture(scope="session")
def fixture_catalog(stack):
    return catalog_store.ingest(
        fixtures.catalog_images_dir(), fixtures.captions_path(), stack.embedder
    )


@pytest.fixture(scope="session")
def person():
    return fixtures.fixture_person()


@pytest.fixture(scope="session")
def template():
    return default_template()


def random_image(rng: np.random.Generator, h: int, w: int, channels: int = 3) -> np.ndarray:
    if channels == 1:
        return rng.integers(0, 256, size=(h, w), dtype=np.uint8)
    return rng.integers(0, 256, size=(h, w, channels), dtype=np.uint8)
