import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eroders import rules  # noqa: E402


@pytest.fixture
def nec():
    return rules.nec()


@pytest.fixture
def nsmm():
    return rules.nsmm()


@pytest.fixture
def non_example():
    return rules.non_example()
