import pytest

from gdep.sn_solver import RadialGrid, scf_ground_state


@pytest.fixture(scope="session")
def default_grid():
    return RadialGrid()


@pytest.fixture(scope="session")
def nonrel_solution(default_grid):
    return scf_ground_state("nonrelativistic", default_grid)


@pytest.fixture(scope="session")
def quasirel_light(default_grid):
    return scf_ground_state("quasirelativistic", default_grid, mass=1e-3)


@pytest.fixture(scope="session")
def quasirel_heavy(default_grid):
    return scf_ground_state("quasirelativistic", default_grid, mass=0.5)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(criterion: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
