import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_field(mesh, rng, scale=1.0, complex_=False):
    v = scale * rng.normal(size=mesh.n_nodes)
    if complex_:
        v = v + 1j * scale * rng.normal(size=mesh.n_nodes)
    v[mesh.boundary_mask] = 0
    return v


# acceptance criteria report one line each at the end of the run
CRITERIA: list[str] = []


def report_criterion(number, ok, detail):
    CRITERIA.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
