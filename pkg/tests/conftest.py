import numpy as np
import pytest

from qdavies import bath, rng


@pytest.fixture
def ref():
    return bath.reference_model()


@pytest.fixture
def fermi():
    return bath.SpectralModel("fermionic", beta=2.0, mu=0.1, coupling=0.3)


@pytest.fixture
def fermi_eta():
    return bath.SpectralModel("fermionic", beta=2.0, mu=0.1, coupling=0.3, include_eta=True)


@pytest.fixture
def gen():
    return rng.stream(12345, rng.TAG_TEST)


def random_density(n, g, rank=None):
    x = g.normal(size=(n, rank or n)) + 1j * g.normal(size=(n, rank or n))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_hermitian(n, g):
    x = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
    return x + x.conj().T


ACCEPTANCE = {}


def record_criterion(number, name, passed, detail):
    """Store the one-line verdict printed in the terminal summary."""
    ACCEPTANCE[number] = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
