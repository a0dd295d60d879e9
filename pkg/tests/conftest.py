import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from irlsreg import kernels  # noqa: E402
from irlsreg.linops import DenseOperator, rescale_problem  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    return kernels.backends()[request.param]


def random_scaled_problem(m, n, seed, target=0.9):
    """Gaussian matrix rescaled below unit norm and a Gaussian data vector."""
    r = np.random.default_rng(seed)
    a = r.standard_normal((m, n))
    b = r.standard_normal(m)
    op, b, _ = rescale_problem(DenseOperator(a), b, target=target)
    return op, b


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
