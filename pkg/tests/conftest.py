import pytest

from pcwlattice.species import species_lookup


@pytest.fixture(scope="session")
def rb():
    return species_lookup("Rb87-D2")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    return request.param


_VERDICTS = []


@pytest.fixture
def verdict(capsys):
    """Record one PASS/FAIL line per acceptance criterion and return the flag."""
    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        _VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
