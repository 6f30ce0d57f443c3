import numpy as np
import pytest

from cvcs.sampler import SpeedTrace
from cvcs.synthetic import SynthConfig, generate_synthetic_traces


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_traces():
    """Five short synthetic trips, shared read-only across tests."""
    return generate_synthetic_traces(SynthConfig(num_trips=5, duration_range_s=(60.0, 120.0), rng_seed=3))


def make_trace(speeds, trip_id="dev#0", device_id="dev", start_time=1364774400.0, rate=10.0):
    return SpeedTrace(trip_id, device_id, start_time, np.asarray(speeds, dtype=float), rate)


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion; printed in the summary."""
    def report(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
