import numpy as np
import pytest

from delayadm.state import HistorySegment, LiftedState
from delayadm.system import DelaySystem, GridSpec, random_contraction_system


def scalar_system(a, a1, h=1.0, b=None):
    B = None if b is None else np.array([[b]], dtype=complex)
    return DelaySystem(np.array([[a]], dtype=complex), ((np.array([[a1]], dtype=complex), h),), B)


def scalar_state(x, f, m=200):
    if callable(f):
        tail = HistorySegment.from_function(lambda s: np.array([f(s)]), m)
    else:
        tail = HistorySegment.constant([f], m)
    return LiftedState(np.array([x], dtype=complex), tail)


@pytest.fixture(scope="session")
def contraction_suite():
    """20 seeded random contraction systems with n in 1..4."""
    return [
        random_contraction_system(seed, 1 + seed % 4, delay_norm=0.5)
        for seed in range(20)
    ]


@pytest.fixture(scope="session")
def grid200():
    return GridSpec(200)


@pytest.fixture(scope="session")
def grid100():
    return GridSpec(100)
