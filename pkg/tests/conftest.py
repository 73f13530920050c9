import numpy as np
import pytest

from kaondecoh.evolution import KaonParams

# decoherence strengths used across the suite (Gamma_S units)
LAMBDAS = (0.0, 0.25, 0.59, 2.0)


@pytest.fixture
def params():
    return KaonParams(lam=0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(20021)


def rho_n_closed_form(lt):
    """Normalized singlet after decoherence exposure lambda * t, written out by hand."""
    e = np.exp(-lt)
    return 0.5 * np.array(
        [[0, 0, 0, 0], [0, 1, -e, 0], [0, -e, 1, 0], [0, 0, 0, 0]], dtype=complex
    )


def random_density(rng, dim=4, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# (criterion number, line) pairs, filled by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
