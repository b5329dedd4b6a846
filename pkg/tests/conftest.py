"""Pytest configuration."""

from random import Random

import pytest

from polus.fglab.addops import OperationCaps, default_source
from polus.fglab.fgl import MoravaSpec, morava


@pytest.fixture
def rng() -> Random:
    """Return a seeded generator for randomized property checks."""
    return Random(20240611)


@pytest.fixture
def k1_p2():
    """Return K(1) at p = 2 with a_i = 1, cap 16."""
    return morava(MoravaSpec(p=2, n=1), 16)


@pytest.fixture
def k2_p2():
    """Return K(2) at p = 2 with a_i = 1, cap 16."""
    return morava(MoravaSpec(p=2, n=2), 16)


@pytest.fixture
def small_caps() -> OperationCaps:
    """Return caps small enough for the solver tests."""
    return OperationCaps(arity=6, degree=6)


@pytest.fixture
def k1_small():
    """Return K(1) at p = 2 truncated to the solver caps."""
    return default_source(2, 1, 6)
