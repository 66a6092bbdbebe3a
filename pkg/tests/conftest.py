"""Shared fixtures: preprocessed clause systems and a fast noise model.

Preprocessing the three factoring instances is cheap but not free, so
the systems are built once per session and handed out read-only.
"""

import pytest

from vqf.encoder import FactoringInstance, build_clauses, preprocess
from vqf.sim import NoiseModel


@pytest.fixture(scope="session")
def system_35():
    return preprocess(build_clauses(FactoringInstance(35, 3)))


@pytest.fixture(scope="session")
def system_143():
    return preprocess(build_clauses(FactoringInstance(143, 4)))


@pytest.fixture(scope="session")
def system_291311():
    return preprocess(build_clauses(FactoringInstance(291311, 10)))


@pytest.fixture(scope="session")
def raw_143():
    # unpreprocessed, for tests that exercise the presolve itself
    return build_clauses(FactoringInstance(143, 4))


@pytest.fixture()
def noise():
    return NoiseModel()


@pytest.fixture()
def quiet_noise():
    # a model whose with_scale(0) run is the noiseless fast path
    return NoiseModel().with_scale(0.0)
