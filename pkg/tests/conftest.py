import warnings

import numpy as np
import pytest

from fluxsim.circuit import CircuitParams
from fluxsim.effective import SelectivityWarning, assemble_from_circuit
from fluxsim.minima import find_minima

E_J = 200.0
F_OP = 0.49


@pytest.fixture(scope="session")
def uniform():
    return CircuitParams.uniform(E_J)


@pytest.fixture(scope="session")
def device():
    """Uniform junctions with both loop fluxes pinned to half a flux quantum."""
    return CircuitParams.uniform(E_J, flux_override=(0.5, 0.5))


@pytest.fixture(scope="session")
def minima_half(uniform):
    return find_minima(uniform, 0.5)


@pytest.fixture(scope="session")
def model(device):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SelectivityWarning)
        return assemble_from_circuit(device, F_OP)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
