import pytest

from backforth.families import P0, GoodSequenceError, TruncationParams, build_good_sequence
from backforth.paperstructs import build_M1, build_M2, build_N1, build_N2, sample_X

SMALL = TruncationParams(N=16, W=2, Lambda=24, c=2, d=2, s=1, m_cap=2, n_cap=1, t=1, seed=1, retries=20)


def sequence_for(params):
    """The construction's output even when it does not verify."""
    try:
        return build_good_sequence(params)
    except GoodSequenceError as exc:
        return exc.sequence


class Built:
    def __init__(self, params, c_prime=1):
        self.params = params
        self.G = sequence_for(params)
        self.X = sample_X(self.G, c_prime, seed=params.seed)
        self.N1 = build_N1(self.G)
        self.N2 = build_N2(self.G)
        self.M1 = build_M1(self.G, self.X)
        self.M2 = build_M2(self.G, self.X)


@pytest.fixture(scope="session")
def p0():
    return Built(P0)


@pytest.fixture(scope="session")
def small():
    return Built(SMALL)


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; printed in the terminal summary."""

    def record(name: str, passed: bool, note: str = ""):
        ACCEPTANCE[name] = (passed, note)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        passed, note = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if passed else 'FAIL'}  {note}")
