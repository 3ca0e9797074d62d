import time

import pytest

from volcorr.montecarlo import SimConfig, moments_from_samples, simulate

_LINES = pytest.StashKey[dict]()

# the reference run: 10^4 steps, 10^4 replications, seed fixed up front
REFERENCE = dict(n=10_000, paths=10_000, seed=42)


def pytest_configure(config):
    config.stash[_LINES] = {}


@pytest.fixture
def report(request):
    """Record the one-line verdict of an acceptance criterion."""
    lines = request.config.stash[_LINES]

    def record(number, passed, detail):
        lines[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(lines[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])


@pytest.fixture(scope="session")
def reference_run():
    cfg = SimConfig(workers=4, **REFERENCE)
    t0 = time.perf_counter()
    sim = simulate(cfg)
    return sim, time.perf_counter() - t0


@pytest.fixture(scope="session")
def reference_moments(reference_run):
    return moments_from_samples(reference_run[0].theta, 10)
