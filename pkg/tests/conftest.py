import time

import numpy as np
import pytest

from graspcbf import canonical_config
from graspcbf.controller import Reference
from graspcbf.simulation import run_scenario


class TimedRun:
    def __init__(self, config, mode):
        t0 = time.perf_counter()
        self.log = run_scenario(config, mode)
        self.seconds = time.perf_counter() - t0
        self.config = config


@pytest.fixture(scope="session")
def canonical():
    return canonical_config()


@pytest.fixture(scope="session")
def canonical_model(canonical):
    return canonical.build()


@pytest.fixture(scope="session")
def filtered_run(canonical):
    return TimedRun(canonical, "filtered")


@pytest.fixture(scope="session")
def nominal_run(canonical):
    return TimedRun(canonical, "nominal")


def low_amplitude(config, scale=0.1):
    """Reference amplitudes scaled by ``scale`` and re-centred so r(0) matches
    the initial object height (keeps the start static)."""
    ref = config.reference
    amp = scale * np.asarray(ref.amplitude)
    center = np.asarray(ref.center, dtype=float).copy()
    center[:3] += config.object_position - (center[:3] + amp[:3])
    return config.replace(reference=Reference(center, amp, ref.frequency))


@pytest.fixture(scope="session")
def low_amplitude_run(canonical):
    return TimedRun(low_amplitude(canonical), "filtered")


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
