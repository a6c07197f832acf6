import numpy as np
import pytest

from netemp import SignalConfig, build_branch, build_cycle
from netemp.montecarlo import hybrid_network


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hybrid():
    return hybrid_network(0.3)


@pytest.fixture
def cycle3():
    return build_cycle(3, (0.5, 0.5, 0.5))


@pytest.fixture
def branch4():
    return build_branch(4, (0.8, -0.4, 1.5))


@pytest.fixture
def uniform6():
    return SignalConfig.uniform(6)


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def verdict(request):
    """Record a one-line pass/fail summary for an acceptance criterion."""
    lines = request.config.stash[ACCEPTANCE]

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        lines[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
