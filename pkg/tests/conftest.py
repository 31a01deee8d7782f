import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from narain_os.lattice import EvenLattice, Polarization
from narain_os.model import Model, ii11_model

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def m1():
    return ii11_model(1.0)


@pytest.fixture(scope="session")
def m13():
    return ii11_model(1.3)


@pytest.fixture(scope="session")
def m_indef():
    lat = EvenLattice(((0, 1), (1, 0)))
    p = [[0.5, -0.5], [-0.5, 0.5]]
    return Model(lat, Polarization(lat, p, require_positive=False), name="indefinite")


def block_rank4(R1: float, R2: float) -> Model:
    """II_{1,1} + II_{1,1} with the product of two boost polarizations."""
    from narain_os.lattice import boost_polarization_rank2, ii11

    P1 = boost_polarization_rank2(ii11(), R1).P
    P2 = boost_polarization_rank2(ii11(), R2).P
    P = np.zeros((4, 4))
    P[:2, :2], P[2:, 2:] = P1, P2
    lat = EvenLattice(((0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)))
    return Model(lat, Polarization(lat, P), name="rank4")


@pytest.fixture(scope="session")
def m4():
    return block_rank4(1.1, 1.4)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            for name, value in rep.user_properties:
                if name == "criterion":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
