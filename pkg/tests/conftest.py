import numpy as np
import pytest

from pvtmodal.core import AcquisitionRecord, SensorSpec
from pvtmodal.rig import default_truth

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def truth():
    return default_truth()


@pytest.fixture
def acceptance():
    """Record one acceptance criterion outcome and print its summary line."""

    def record(number, passed, detail):
        ACCEPTANCE_RESULTS[number] = (bool(passed), detail)
        print(f"\ncriterion {number:>2}: {'PASS' if passed else 'FAIL'} - {detail}")
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'} - {detail}")


def make_record(samples, rate=1066.0, positions=None, label="test"):
    samples = np.atleast_2d(samples)
    if positions is None:
        positions = np.linspace(0.1, 0.8, samples.shape[0])
    sensors = tuple(SensorSpec(f"S{i + 1}", float(p)) for i, p in enumerate(positions))
    return AcquisitionRecord(sensors, rate, samples, label)
