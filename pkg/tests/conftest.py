import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.common.config import set_config  # noqa: E402
from src.domains.gallery import get_domain, get_gallery_item  # noqa: E402


@pytest.fixture(autouse=True)
def default_config():
    """Every test starts from the shipped configs/main.yaml."""
    set_config(None)
    yield
    set_config(None)


@pytest.fixture
def ball2():
    return get_domain("ball2")


@pytest.fixture
def em2():
    return get_domain("em:2")


@pytest.fixture
def square():
    return get_gallery_item("square")
