import numpy as np
import pytest

from egolink.ego import EgoNetwork
from egolink.events import Kind


def make_ego(legs, durations=None, ego=0, truth=()):
    """EgoNetwork from ``{neighbor: {"call": [...], "text": [...]}}``."""
    times = {kind: {} for kind in Kind}
    for nb, series in legs.items():
        for name, values in series.items():
            if len(values):
                times[Kind(name)][nb] = np.array(sorted(values), dtype=np.int64)
    durs = {}
    for nb, call_times in times[Kind.CALL].items():
        given = (durations or {}).get(nb)
        durs[nb] = np.array(given if given is not None else [1] * len(call_times), dtype=np.int64)
    return EgoNetwork(ego, tuple(sorted(legs)), times, durs, set(truth))


@pytest.fixture
def ego_factory():
    return make_ego


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import lines

    summary = lines()
    if summary:
        terminalreporter.section("acceptance criteria")
        for line in summary:
            terminalreporter.write_line(line)
