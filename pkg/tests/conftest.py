import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from meshgen import SQUARE_2TRI, box_hex_mesh  # noqa: E402

from rotormesh.mesh import parse_mesh  # noqa: E402


@pytest.fixture
def square_mesh():
    return parse_mesh(SQUARE_2TRI)


@pytest.fixture(scope="session")
def cube_mesh():
    return box_hex_mesh(1, 1, 1)


@pytest.fixture(scope="session")
def block_mesh():
    return box_hex_mesh(4, 3, 2, hi=(2.0, 1.5, 1.0))
