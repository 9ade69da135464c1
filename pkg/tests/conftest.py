import numpy as np
import pytest

from eqdegree.domain import stratify
from eqdegree.scenarios import scenario


@pytest.fixture(scope="session")
def strats():
    """Stratifications of the reference scenarios, computed once."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = stratify(scenario(name).omega)
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(results, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
