import numpy as np
import pytest
from hypothesis import settings

from voltsync.model import SimState, uniform_model
from voltsync.topology import TopologySpec, all_to_all_susceptance

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

B2 = np.array([[-0.8, 1.0], [1.0, -0.8]])


def two_node(P=(0.5, -0.5), gamma=0.0, alpha=0.2, T_d=2.0, **kw):
    return uniform_model(2, B2, P_star=np.array(P), alpha=alpha, gamma=gamma, T_d=T_d, **kw)


def network(N, gamma=0.0, T_d=1.0, B0=-0.8, B1=1.0):
    B = all_to_all_susceptance(TopologySpec("all_to_all", N, B0, B1))
    P = np.array([0.5 if i % 2 == 0 else -0.5 for i in range(N)])
    return uniform_model(N, B, P_star=P, alpha=0.2, gamma=gamma, T_d=T_d)


def flat_state(N, E=1.14):
    return SimState(np.zeros(N), np.zeros(N), np.full(N, E))


@pytest.fixture
def model2():
    return two_node()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
