import numpy as np
import pytest
from hypothesis import settings

from mpmfit.grid import FrequencyGrid, lattice_for

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=50)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def ref_grid():
    return FrequencyGrid.reference()


@pytest.fixture(scope="session")
def ref_lattice(ref_grid):
    return lattice_for(ref_grid)


@pytest.fixture(scope="session")
def small_grid():
    # 1-51 MHz in 101 steps: L = 400 m, N = 204
    return FrequencyGrid(1e6, 0.5e6, 101)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_lattice(small_grid):
    return lattice_for(small_grid)


# acceptance criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in range(1, 9):
        if n in ACCEPTANCE:
            ok, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n}: not run")
