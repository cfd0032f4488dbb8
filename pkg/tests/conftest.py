import numpy as np
import pytest


def random_density_matrix(rng) -> np.ndarray:
    """Random full-rank physical state (Ginibre ensemble)."""
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
