import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import diamond_graph  # noqa: E402

from graphaudit import compute_weights  # noqa: E402


@pytest.fixture
def diamond():
    return diamond_graph()


@pytest.fixture
def diamond_weights(diamond):
    return compute_weights(diamond)
