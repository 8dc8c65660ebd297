import os
import warnings

import pytest

# one PASS/FAIL line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}

os.environ.setdefault("NUMBA_NUM_THREADS", str(len(os.sched_getaffinity(0))))
warnings.filterwarnings("ignore", message=".*TBB.*")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240607)
