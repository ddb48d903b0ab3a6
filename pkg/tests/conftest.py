from __future__ import annotations

import pytest

from ultrafix import FieldDescriptor


@pytest.fixture
def q5():
    return FieldDescriptor.padic(5, 4)


@pytest.fixture
def q5_deep():
    return FieldDescriptor.padic(5, 8)


@pytest.fixture
def real():
    return FieldDescriptor.real()
