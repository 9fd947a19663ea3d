import numpy as np
import pytest

from gabp import SymSystem, load_instance


@pytest.fixture(scope="session")
def toy3():
    return load_instance("toy3")


@pytest.fixture(scope="session")
def cdma3():
    return load_instance("cdma3")


@pytest.fixture(scope="session")
def cdma4():
    return load_instance("cdma4")


@pytest.fixture(scope="session")
def nonpsd3():
    return load_instance("nonpsd3")


@pytest.fixture(scope="session")
def poisson3():
    return load_instance("poisson:3")


@pytest.fixture
def identity3():
    return SymSystem(diag=np.ones(3), offdiag={}, rhs=np.array([1.0, 2.0, 3.0]))
