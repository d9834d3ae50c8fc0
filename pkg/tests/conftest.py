import time

import pytest

from syncnet.presets import load_preset
from syncnet.sim import simulate

_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    # one line per criterion, printed whether or not the run is green
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def preset_run():
    """Lazy per-session cache of preset simulations.

    Returns a getter; each preset is simulated at most once per test
    session.  Values are (scenario, trace, wall_seconds).
    """
    cache = {}

    def get(preset_id: str):
        if preset_id not in cache:
            scenario = load_preset(preset_id)
            start = time.perf_counter()
            trace = simulate(scenario)
            cache[preset_id] = (scenario, trace, time.perf_counter() - start)
        return cache[preset_id]

    return get
