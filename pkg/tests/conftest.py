from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def synthetic_dir() -> Path:
    d = REPO_ROOT / "data" / "synthetic"
    if not d.is_dir():
        pytest.skip("bundled synthetic fixture not present")
    return d
