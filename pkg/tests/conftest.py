import pytest

from stochepi.model import validate_scenario

ACCEPTANCE_LINES = []


def make_scenario(n_total=100_000, alpha=0.2, phases=(), **sections):
    raw = {"population": {"n_total": n_total, "alpha": alpha}, "policy": {"phases": list(phases)}}
    for name in ("disease", "run", "burden"):
        if name in sections:
            raw[name] = sections[name]
    return validate_scenario(raw)


@pytest.fixture
def scenario():
    return make_scenario


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
