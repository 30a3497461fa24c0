import pytest

from officeagents.orchestrator import Orchestrator
from officeagents.retrieval import build_index
from officeagents.sim import OfficeSimulator

CLOCK_FIXTURE = "f1"
SEED = 7


@pytest.fixture
def sim():
    return OfficeSimulator(CLOCK_FIXTURE, SEED)


@pytest.fixture(scope="session")
def shared_index():
    return build_index()


@pytest.fixture
def orch(sim, shared_index):
    return Orchestrator(sim, index=shared_index)


@pytest.fixture
def session(orch):
    return orch.create_session()
