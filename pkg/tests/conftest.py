import numpy as np
import pytest

from fogswitch.backend import SIMULATED_DELAY, serve_backend
from fogswitch.domain import MachineProfile, ServiceInstance, Tier
from fogswitch.fogsim import RtModelParams, default_machines
from fogswitch.predictors import RegressorKind, Standardizer, TrainedModel

# fast simulated delays so live tests stay quick
FAST = RtModelParams(alpha_ms=1e-6, beta_ms=0.5, payload_overhead_bytes=0)


def constant_model(value: float) -> TrainedModel:
    """A 1-neighbour KNN whose only target is ``value``."""
    std = Standardizer(np.zeros(4), np.ones(4))
    payload = {"X": np.zeros((1, 4)), "y": np.array([float(value)]), "n_neighbors": 1}
    return TrainedModel(RegressorKind.KNN, std, payload)


def instances_at(services, machines):
    return [ServiceInstance(m.id, f"{s.url}/cluster", m) for s, m in zip(services, machines)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def live_pair():
    """Two simulated-delay back-ends (edge0, remote0) on ephemeral ports."""
    machines = default_machines()
    services = [serve_backend("127.0.0.1", 0, m, SIMULATED_DELAY, FAST).start() for m in machines]
    try:
        yield instances_at(services, machines)
    finally:
        for s in services:
            s.stop()


@pytest.fixture(scope="session")
def three_machines():
    return [
        MachineProfile("edge0", Tier.EDGE, cpu_factor=0.5),
        MachineProfile("edge1", Tier.EDGE, cpu_factor=1.0),
        MachineProfile("remote0", Tier.REMOTE, cpu_factor=4.0, rtt_ms=25.0, bandwidth_bytes_per_ms=1.25e3),
    ]


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
