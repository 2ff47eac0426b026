import numpy as np
import pytest

from dsc.panel import PanelDataset


def random_panel(J=3, T=4, t0=2, n=50, seed=0, loc=None):
    rng = np.random.default_rng(seed)
    loc = rng.uniform(0, 5, J + 1) if loc is None else np.asarray(loc)
    values = rng.normal(loc[:, None, None], 1.0, (J + 1, T, n))
    return PanelDataset.from_array(values, t0=t0)


def write_rows(path, rows, header=("unit", "time", "value")):
    """Write rows verbatim; floats go through repr so they round-trip."""
    with open(path, "w") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(c) if isinstance(c, float) else str(c) for c in row) + "\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report one line each; collected here and echoed at the end
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
