import numpy as np
import pytest

from harnacklab import CompoundPoissonSpec, OuLevyModel


@pytest.fixture
def scalar_model():
    """d=1 stable model with non-unit noise: A=-1, R=2."""
    return OuLevyModel(drift_matrix=[[-1.0]], noise_cov=[[2.0]])


@pytest.fixture
def flat_model():
    """d=1 driftless model: A=0, R=1."""
    return OuLevyModel(drift_matrix=[[0.0]], noise_cov=[[1.0]])


@pytest.fixture
def jump_model():
    """Scalar stable model with symmetric unit jumps at rate 2."""
    return OuLevyModel(
        drift_matrix=[[-1.0]],
        noise_cov=[[2.0]],
        jump=CompoundPoissonSpec(rate=2.0, atoms=[[1.0], [-1.0]]),
    )


@pytest.fixture
def nonnormal_model():
    return OuLevyModel(drift_matrix=np.array([[-1.0, 1.0], [0.0, -2.0]]), noise_cov=np.eye(2))
