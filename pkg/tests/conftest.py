import numpy as np
import pytest

from phasegen import ScenarioDistributions, build_coherence, default_ula, factorize


@pytest.fixture(scope="session")
def geom():
    return default_ula()


@pytest.fixture(scope="session")
def factors(geom):
    return factorize(build_coherence(geom))


@pytest.fixture(scope="session")
def dists():
    return ScenarioDistributions()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
