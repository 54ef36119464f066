import pytest
import numpy as np
from unittest.mock import MagicMock

from ppgmres.config import Config
from ppgmres.operators import bidiagonal_operator, diagonal_operator
from ppgmres.utils import STREAM_RHS, make_generator, random_unit_vector

@pytest.fixture(scope="session")
def mock_config_values():
    """Provides a dictionary of mock config values."""
    return {
        "output_dir": "results-test",
        "default_seed": 7,
        "log_level": "DEBUG",
        "log_file": None,
        "small_eig_cap": 512,
        "max_mvp": 2_000_000,
    }

@pytest.fixture(autouse=True) # Autouse to apply to all tests
def mock_config_object(mocker, mock_config_values):
    """
    Mocks the ppgmres.config.config object for all tests.
    This prevents the actual Config class from reading .env files.
    """
    mocked_config_instance = MagicMock(spec=Config)

    for key, value in mock_config_values.items():
        setattr(mocked_config_instance, key, value)

    # Every module reads settings through the ConfigProxy, so patching the
    # instance it forwards to is enough.
    mocker.patch('ppgmres.config.ConfigProxy._instance', mocked_config_instance)

    return mocked_config_instance


# Test constants - shared across test files
TEST_SEED = 7

# A scaled-down Example 1: bidiagonal, eigenvalues -50..-1, 1..50, superdiagonal ones
SMALL_INDEFINITE_SPECTRUM = np.concatenate([np.arange(-50.0, 0.0), np.arange(1.0, 51.0)])

@pytest.fixture
def indefinite_op():
    """Small nonsymmetric operator with a real spectrum mirrored about the origin."""
    return bidiagonal_operator(SMALL_INDEFINITE_SPECTRUM, 1.0, name="small-indefinite")

@pytest.fixture
def definite_op():
    """Diagonal operator with eigenvalues 1..200."""
    return diagonal_operator(np.arange(1.0, 201.0), name="small-definite")

@pytest.fixture
def lopsided_op():
    """Diagonal operator with eigenvalues -20..-1 and 1..400."""
    return diagonal_operator(np.concatenate([np.arange(-20.0, 0.0), np.arange(1.0, 401.0)]), name="lopsided")

@pytest.fixture
def rhs_for():
    """Builds the normalized random right-hand side of a given length."""
    def build(n, seed=TEST_SEED):
        return random_unit_vector(n, make_generator(seed, STREAM_RHS))
    return build
