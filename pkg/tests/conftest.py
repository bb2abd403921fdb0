import numpy as np
import pytest

from ndpredict.graph import RunWindows, TimeWindow, ingest

EVENTS = """target_id,attribute_id,timestamp
x1,m1,5
x1,m2,7
x2,m1,12
"""

LABELS = """attribute_id,labels
m1,A
m2,A;B
"""


@pytest.fixture
def tiny_graph():
    return ingest(EVENTS.splitlines(), LABELS.splitlines())


@pytest.fixture
def windows3():
    return RunWindows(TimeWindow(0, 100), TimeWindow(100, 200), TimeWindow(200, 300))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_simplex(rng, n, size=None):
    return rng.dirichlet(np.ones(n), size=size)


def graph_from_counts(counts, n, windows):
    """Build a graph from ``counts[target][window_index][label]`` using single-label attributes."""
    labels = ["attribute_id,labels"] + [f"m{i},L{i}" for i in range(n)]
    events = ["target_id,attribute_id,timestamp"]
    spans = [windows.history, windows.current, windows.future]
    for t, per_window in counts.items():
        for span, row in zip(spans, per_window):
            for label, c in enumerate(row):
                events.extend(f"{t},m{label},{span.start}" for _ in range(int(c)))
    return ingest(events, labels)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
