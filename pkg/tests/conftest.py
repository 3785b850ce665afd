import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wishfisher import symspace

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def zmax(mean, se, ref):
    """Largest entrywise ``|mean - ref| / se`` over distinct entries."""
    from wishfisher.suite import zscore

    return zscore(mean, se, ref)


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
orders = st.integers(1, 5)


@st.composite
def sym_matrices(draw, n=None):
    n = draw(orders) if n is None else n
    a = draw(arrays(np.float64, (n, n), elements=finite))
    return symspace.sym(a)


@st.composite
def spd_matrices(draw, n=None, max_n=4):
    n = draw(st.integers(1, max_n)) if n is None else n
    seed = draw(st.integers(0, 2**32 - 1))
    spread = draw(st.floats(1.0, 50.0))
    return symspace.random_spd(n, np.random.default_rng(seed), spread=spread)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.LINES):
        terminalreporter.write_line(module.LINES[number])
