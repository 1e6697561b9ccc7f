"""Shared fixtures: the two worked models at their reference parameters."""

import numpy as np
import pytest

from susy_dirac.models import FreeParticleModel, PoschlTellerModel


@pytest.fixture(scope="session")
def fp():
    return FreeParticleModel(0.5, 0.2)


@pytest.fixture(scope="session")
def pt():
    return PoschlTellerModel(1.0, 2.9)


@pytest.fixture(scope="session")
def xs():
    return np.linspace(-10.0, 10.0, 2001)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one ``criterion N: PASS|FAIL`` line for the terminal summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
