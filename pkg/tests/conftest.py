import numpy as np
import pytest

from sklars_omega import AgreementData, fit

NAN = np.nan

# Four coders scoring twelve units on a five-category nominal scale; the
# classic reliability-data example with missing cells.
FIGURE1 = np.array([
    [1, 2, 3, 3, 2, 1, 4, 1, 2, NAN, NAN, NAN],
    [1, 2, 3, 3, 2, 2, 4, 1, 2, 5, NAN, 3],
    [NAN, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, NAN],
    [1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, NAN],
]).T


@pytest.fixture(scope="session")
def figure1():
    return AgreementData(FIGURE1, level="nominal")


@pytest.fixture(scope="session")
def figure1_dt(figure1):
    return fit(figure1, "inter", method="DT")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
