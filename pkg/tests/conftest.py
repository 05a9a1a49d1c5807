import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS_DIR))

from capkit.ontology import load_bundled_excerpt  # noqa: E402


@pytest.fixture(scope="session")
def ontology():
    return load_bundled_excerpt()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return TESTS_DIR / "fixtures"
