import pytest
import shutil
from pathlib import Path
import numpy as np

from divbound.backend.services.divergences import make_divergence
from divbound.backend.utils.measures import DiscreteMeasure, FunctionOnSupport, PushforwardDist

@pytest.fixture(scope="session")
def test_dir():
    """Create and return the test directory path."""
    test_dir = Path("tests/test_data")
    test_dir.mkdir(parents=True, exist_ok=True)
    return test_dir

@pytest.fixture(scope="session", autouse=True)
def cleanup_test_files(test_dir):
    """Clean up test files after all tests have run."""
    yield
    # Clean up test data files but keep the directory
    for item in test_dir.glob("*"):
        if item.is_file():
            item.unlink()
        elif item.is_dir():
            shutil.rmtree(item)

@pytest.fixture
def rng():
    """Seeded generator so randomised suites are reproducible."""
    return np.random.default_rng(20240607)

@pytest.fixture(scope="session")
def kl():
    return make_divergence("kl")

@pytest.fixture(scope="session")
def chi2():
    return make_divergence("chi2")

@pytest.fixture(scope="session")
def tv():
    return make_divergence("total_variation")

@pytest.fixture(scope="session")
def hellinger():
    return make_divergence("squared_hellinger")

@pytest.fixture
def coin():
    """Uniform distribution on {-1, 1}."""
    return PushforwardDist.from_arrays([-1.0, 1.0], [0.5, 0.5])

@pytest.fixture
def two_point_space():
    """nu uniform on {a, b} with g(a) = -1, g(b) = 1."""
    nu = DiscreteMeasure.from_dict({"a": 0.5, "b": 0.5}, probability=True)
    g = FunctionOnSupport({"a": -1.0, "b": 1.0})
    return nu, g
