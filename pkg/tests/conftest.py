import numpy as np
import pytest
from hypothesis import strategies as st

from covergff.network import Network


@st.composite
def networks(draw, min_n=2, max_n=7, weighted=True, loops=True):
    """Random connected network: a random spanning tree plus extra edges."""
    n = draw(st.integers(min_n, max_n))
    c = np.zeros((n, n))
    weight = st.sampled_from([0.5, 1.0, 2.0, 3.0]) if weighted else st.just(1.0)
    for i in range(1, n):
        p = draw(st.integers(0, i - 1))
        c[p, i] = c[i, p] = draw(weight)
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n))
    for u, v in extra:
        if u == v:
            if loops:
                c[u, u] += 2.0 if not weighted else draw(weight)
        else:
            w = draw(weight)
            c[u, v] += w
            c[v, u] += w
    root = draw(st.integers(0, n - 1))
    return Network(c, root)


@pytest.fixture
def triangle():
    from covergff.network import complete_graph

    return complete_graph(3)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k].line())
