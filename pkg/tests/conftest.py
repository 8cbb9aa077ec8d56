import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from monospline import StateSpace, fit_conventional, fit_monotone
from monospline.fixture import fixture_dataset, fixture_settings, fixture_system


@pytest.fixture(scope="session")
def double_int():
    """xdot2 = u, y = x1 on [0, 3]; phi_t(tau) = t - tau."""
    return StateSpace(np.array([[0.0, 1.0], [0.0, 0.0]]),
                      np.array([0.0, 1.0]), np.array([1.0, 0.0]), 3.0)


@pytest.fixture(scope="session")
def scalar_int():
    """ydot = u on [0, 3]; phi_t(tau) = 1 for t > tau."""
    return StateSpace(np.zeros((1, 1)), np.ones(1), np.ones(1), 3.0)


@pytest.fixture(scope="session")
def example_fit():
    """Proposed-mode solution on the built-in example, shared across tests."""
    sol = fit_monotone(fixture_system(), fixture_dataset(), **fixture_settings())
    assert sol.status == "optimal"
    return sol


@pytest.fixture(scope="session")
def example_fit_conventional():
    sol = fit_conventional(fixture_system(), fixture_dataset())
    assert sol.status == "optimal"
    return sol
