"""
Shared fixtures for the simulator test suite.
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from backends import DenseBackend, MpsBackend  # noqa: E402
from schemas import ModelParams  # noqa: E402

settings.register_profile("ci", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=20, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def params4() -> ModelParams:
    return ModelParams(num_sites=4, coupling_J=1.0, field_h=1.0, field_g=0.5)


@pytest.fixture
def params6() -> ModelParams:
    return ModelParams(num_sites=6, coupling_J=2.0, field_h=1.0, field_g=1.0)


@pytest.fixture
def dense4(params4) -> DenseBackend:
    return DenseBackend(params4)


@pytest.fixture
def dense6(params6) -> DenseBackend:
    return DenseBackend(params6)


@pytest.fixture
def mps4(params4) -> MpsBackend:
    return MpsBackend(params4, chi_max=16, svd_cutoff=1e-12, dmrg_max_bond=16, dmrg_sweeps=10, dmrg_tol=1e-10)


def random_state(num_sites: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.normal(size=2 ** num_sites) + 1j * rng.normal(size=2 ** num_sites)
    return vec / np.linalg.norm(vec)
