import sys

import numpy as np
import pytest

from trexwalk import graphs


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def path_matrix(n):
    return graphs.generate("path", n).matrix


def random_symmetric(rng, n):
    M = rng.standard_normal((n, n))
    return (M + M.T) / 2


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
