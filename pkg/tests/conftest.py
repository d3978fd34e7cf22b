import numpy as np
import pytest

from lattice_lab import LatticeParams, derive_params


@pytest.fixture(scope="session")
def ref_params():
    """Reference parameter set: q = 1.2, normal-diffusion regime."""
    return LatticeParams(alpha=1.0, gamma0=0.1, gamma1=0.5, p_c=1.0)


@pytest.fixture(scope="session")
def ref_derived(ref_params):
    return derive_params(ref_params)


@pytest.fixture()
def rng():
    return np.random.default_rng(20250808)
