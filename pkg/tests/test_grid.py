import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpmfit.errors import GridError
from mpmfit.grid import DEFAULT_NU, FrequencyGrid, PathLattice, lattice_for, max_length, num_paths, path_lattice


def test_reference_grid_constants(ref_grid):
    assert ref_grid.M == 1262
    assert ref_grid.f_max == pytest.approx(79.9358e6, rel=1e-6)
    L = max_length(ref_grid)
    assert abs(L - 3195.0) < 1e-3
    assert num_paths(ref_grid, L) == 2554
    assert L / 2554 == pytest.approx(1.2510, abs=1e-4)


@pytest.mark.parametrize(
    "grid, expected",
    [
        (FrequencyGrid(0.1, DEFAULT_NU, 2), 1.0),
        (FrequencyGrid(1e6, 0.5e6, 101), 400.0),
    ],
)
def test_max_length_examples(grid, expected):
    assert max_length(grid) == pytest.approx(expected, rel=1e-12)


def test_num_paths_half_nu():
    # f_max = nu / 2 -> N = L
    g = FrequencyGrid(1.0, (DEFAULT_NU / 2 - 1.0) / 9, 10)
    assert num_paths(g, 10.0) == 10


def test_num_paths_rejects_empty_lattice():
    g = FrequencyGrid(1.0, 1.0, 2)
    with pytest.raises(GridError):
        num_paths(g, 1e-3)


@pytest.mark.parametrize(
    "L, N, expected",
    [(10.0, 1, [0.0]), (4.0, 4, [0.0, 1.0, 2.0, 3.0])],
)
def test_path_lattice_examples(L, N, expected):
    np.testing.assert_array_equal(path_lattice(L, N).lengths, expected)


def test_path_lattice_reference_spacing():
    assert path_lattice(3195.0, 2554).lengths[1] == pytest.approx(1.2510, abs=1e-4)


@pytest.mark.parametrize(
    "args",
    [(0.0, 1.0, 10), (1.0, 0.0, 10), (1.0, 1.0, 1), (1.0, 1.0, 10, -1.0), (math.inf, 1.0, 10)],
)
def test_grid_validation(args):
    with pytest.raises(GridError):
        FrequencyGrid(*args)


def test_from_frequencies_detects_nonuniform():
    with pytest.raises(GridError, match="non-uniform"):
        FrequencyGrid.from_frequencies([1e6, 2e6, 3.1e6])
    g = FrequencyGrid.from_frequencies(1e6 + 62.5978e3 * np.arange(1262))
    assert g.M == 1262 and g.delta_f == pytest.approx(62.5978e3, rel=1e-12)


grids = st.builds(
    FrequencyGrid,
    f0=st.floats(1e3, 1e7),
    delta_f=st.floats(1e3, 1e6),
    M=st.integers(2, 5000),
)


@given(grids)
def test_period_condition(grid):
    L = max_length(grid)
    assert grid.delta_f * L / grid.nu == pytest.approx(1.0, rel=1e-9)


@given(grids)
def test_lattice_invariants(grid):
    lat = lattice_for(grid)
    N = lat.N
    assert N == round(2 * grid.f_max * lat.L / grid.nu)
    d = lat.lengths
    assert d[0] == 0 and np.all(np.diff(d) > 0)
    # anti-aliasing up to the integer rounding of N
    assert N * grid.delta_f >= 2 * grid.f_max - grid.delta_f / 2 * (1 + 1e-9)
    if N > 1:
        lam_min = grid.nu / grid.f_max
        assert d[1] >= lam_min / 2 * (1 - 1 / N) * (1 - 1e-9)


def test_lattice_runtime(ref_grid):
    best = math.inf
    for _ in range(20):
        t = time.perf_counter()
        L = max_length(ref_grid)
        num_paths(ref_grid, L)
        best = min(best, time.perf_counter() - t)
    assert best < 1e-3


def test_index_of_round_trip(ref_lattice):
    idx = np.array([0, 5, 2553])
    np.testing.assert_array_equal(ref_lattice.index_of(ref_lattice.lengths[idx]), idx)
    assert isinstance(ref_lattice, PathLattice)
