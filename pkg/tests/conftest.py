import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class CriterionLog:
    """Collects acceptance results; printed as one line per criterion."""

    def __init__(self):
        self.parts = {}

    def record(self, criterion, ok, detail):
        self.parts.setdefault(criterion, []).append((bool(ok), detail))

    def lines(self):
        out = []
        for c in sorted(self.parts):
            parts = self.parts[c]
            status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
            out.append(f"criterion {c}: {status} | " + "; ".join(d for _, d in parts))
        return out


CRITERIA = CriterionLog()


@pytest.fixture(scope="session")
def criteria():
    return CRITERIA


def pytest_terminal_summary(terminalreporter):
    lines = CRITERIA.lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
