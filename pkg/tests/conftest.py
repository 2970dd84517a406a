import json
import os
import sys

import numpy as np
import pytest
from dotenv import load_dotenv

# Load environment variables for testing
load_dotenv()

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from eptrap.config import DEFAULT_TOLERANCES  # noqa: E402

SAMPLE_DATA = os.path.join(ROOT, "sample_data")


@pytest.fixture(scope="session", autouse=True)
def setup_test_environment():
    """Single worker thread keeps test runs deterministic and light"""
    previous = os.environ.get("EPTRAP_THREADS")
    os.environ["EPTRAP_THREADS"] = "1"
    yield
    if previous is None:
        os.environ.pop("EPTRAP_THREADS", None)
    else:
        os.environ["EPTRAP_THREADS"] = previous


@pytest.fixture
def rng():
    """Seeded generator for randomized property checks"""
    return np.random.default_rng(20240611)


@pytest.fixture
def tolerances():
    return DEFAULT_TOLERANCES


@pytest.fixture
def sample_path():
    """Absolute path of a file in sample_data/"""

    def _path(name: str) -> str:
        return os.path.join(SAMPLE_DATA, name)

    return _path


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to a temporary JSON file and return its path"""

    def _write(data, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write
