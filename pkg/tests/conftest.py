import os

# Size the numba worker pool before its first import so thread-count
# determinism and scaling tests exercise real pools even on small machines.
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import numpy as np
import pytest

from despeckle3d import Volume3D

_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        details = [value for name, value in report.user_properties if name == "detail"]
        _acceptance_outcomes[report.nodeid] = (report.outcome, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance_outcomes):
        outcome, details = _acceptance_outcomes[nodeid]
        status = "PASS" if outcome == "passed" else outcome.upper()
        line = f"{status:6s} {nodeid.split('::')[-1]}"
        if details:
            line += f"  [{details}]"
        terminalreporter.write_line(line)


@pytest.fixture
def unit_volume():
    """Random volume with intensities in [0, 1], float32-representable."""

    def make(seed=0, dims=(16, 16, 8)):
        data = np.random.default_rng(seed).random(dims).astype(np.float32)
        return Volume3D(data.astype(np.float64))

    return make
