import numpy as np
import pytest

from tedopa_sim.chain_mapping import chain_coefficients
from tedopa_sim.hamiltonian import QubitLayout, SystemSpec, assemble
from tedopa_sim.pauli import BosonEncoding
from tedopa_sim.spectral_density import OhmicExponential


@pytest.fixture(scope="session")
def ohmic():
    return OhmicExponential(alpha=0.25, omega_c=100.0)


@pytest.fixture(scope="session")
def coeffs8(ohmic):
    return chain_coefficients(ohmic, 8)


@pytest.fixture(scope="session")
def dimer_terms(coeffs8):
    layout = QubitLayout.linear(2, 5, BosonEncoding("binary", 2))
    return assemble(SystemSpec.dimer(), coeffs8, layout), layout


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one acceptance line: ``acceptance(number, ok, detail, seconds)``."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail, seconds):
        results[number] = (ok, detail, seconds)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail, seconds = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.2f} s]")
