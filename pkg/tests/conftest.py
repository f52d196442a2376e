import pytest

from siepicard.experiments import gbm_problem
from siepicard.paths import make_grid, sample_brownian

# Lines recorded by the acceptance suite, echoed in the terminal summary so
# they show up even when output capture is on.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gbm():
    return gbm_problem(0.05, 0.2)


@pytest.fixture(scope="session")
def gbm_ensemble():
    """The working ensemble for GBM checks: m=512, 20000 paths, seed 0."""
    return sample_brownian(make_grid(0.0, 1.0, 512), 20_000, 0)


@pytest.fixture(scope="session")
def big_ensemble():
    """m=1000, 100000 paths on [0, 1]; about 800 MB, built once."""
    return sample_brownian(make_grid(0.0, 1.0, 1000), 100_000, 0)


@pytest.fixture(scope="session")
def small_ensemble():
    return sample_brownian(make_grid(0.0, 1.0, 64), 4000, 11)
