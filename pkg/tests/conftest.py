import pytest

from rydion.species import build_basis, get_species
from rydion.units import ghz_to_au


@pytest.fixture(scope="session")
def w36():
    return ghz_to_au(36)


@pytest.fixture(scope="session")
def small_h():
    """Hydrogen ladder n = 20 ... 44 around n0 = 30 with a 6-level absorbing edge."""
    return build_basis(get_species("H"), 30, 10, 14, 6)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Print one PASS/FAIL line for an acceptance criterion and fail the test on FAIL."""
    def _report(number, ok, detail):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
