import numpy as np
import pytest

from crowdstream.agreement import agreement_rates_exact
from crowdstream.fixedpoint import v0, v1


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


HAMMER_SPAMMER_6 = np.array([0.0, 0.0, 0.0, 0.5, 0.5, 0.5])


def random_admissible_p(rng, n, max_tries=10_000):
    """Error probabilities with q < 1/2 - 1/n and v1(a) >= v0(a)."""
    for _ in range(max_tries):
        q_target = rng.uniform(0.0, 0.5 - 1.0 / n)
        p = np.clip(rng.beta(1.0, 1.0, size=n) * 2 * q_target, 0.0, 1.0)
        if p.mean() >= 0.5 - 1.0 / n:
            continue
        a = agreement_rates_exact(p)
        if v1(a) >= v0(a):
            return p
    raise RuntimeError("could not sample an admissible error vector")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
