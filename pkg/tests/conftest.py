import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lifespace import StubProvider, default_map, default_roster


@pytest.fixture
def town():
    return default_map()


@pytest.fixture
def roster(town):
    return default_roster(town)


@pytest.fixture
def stub():
    return StubProvider(seed=0)
