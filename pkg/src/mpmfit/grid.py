"""Frequency grid and path-length lattice.

A measured channel is sampled at ``f_m = f0 + m * delta_f`` for ``m = 0..M-1``.
Treating the multipath sum as a DFT over path index fixes the longest
representable path ``L = (M - 1) * nu / (f_max - f0)`` and, through the
sampling constraints on both sides, the number of lattice paths
``N = round(2 * f_max * L / nu)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridError

#: Propagation speed in the cable, m/s.
DEFAULT_NU = 2.0e8
#: Relative permittivity quoted alongside ``DEFAULT_NU``; kept for provenance only.
DEFAULT_EPS_R = 1.5

REFERENCE_F0 = 1.0e6
REFERENCE_DELTA_F = 62.5978e3
REFERENCE_M = 1262


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid ``f0 + m * delta_f``, ``m = 0..M-1`` (Hz)."""

    f0: float
    delta_f: float
    M: int
    nu: float = DEFAULT_NU

    def __post_init__(self):
        if not (math.isfinite(self.f0) and self.f0 > 0):
            raise GridError(f"f0 must be finite and > 0, got {self.f0!r}")
        if not (math.isfinite(self.delta_f) and self.delta_f > 0):
            raise GridError(f"delta_f must be finite and > 0, got {self.delta_f!r}")
        if int(self.M) != self.M or self.M < 2:
            raise GridError(f"M must be an integer >= 2, got {self.M!r}")
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise GridError(f"nu must be finite and > 0, got {self.nu!r}")
        object.__setattr__(self, "M", int(self.M))
        if not (math.isfinite(self.f_max) and self.f_max > self.f0):
            raise GridError("f_max must be finite and larger than f0")

    @classmethod
    def reference(cls, nu: float = DEFAULT_NU) -> FrequencyGrid:
        """The 1-80 MHz indoor measurement grid (M = 1262)."""
        return cls(REFERENCE_F0, REFERENCE_DELTA_F, REFERENCE_M, nu)

    @classmethod
    def from_frequencies(cls, freqs, nu: float = DEFAULT_NU, rtol: float = 1e-6) -> FrequencyGrid:
        """Infer a grid from sample frequencies, rejecting non-uniform spacing."""
        f = np.asarray(freqs, dtype=float)
        if f.ndim != 1 or f.size < 2:
            raise GridError("need at least two frequency samples")
        if not np.all(np.isfinite(f)):
            raise GridError("non-finite frequency value")
        steps = np.diff(f)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0)) + 1
            raise GridError(f"frequencies not strictly increasing at sample {bad}")
        df = (f[-1] - f[0]) / (f.size - 1)
        dev = np.abs(steps - df)
        if np.any(dev > rtol * df):
            bad = int(np.argmax(dev)) + 1
            raise GridError(
                f"non-uniform frequency grid: step {steps[bad - 1]:.9g} Hz at sample {bad} "
                f"deviates from mean step {df:.9g} Hz by more than {rtol:g} relative"
            )
        return cls(float(f[0]), float(df), int(f.size), nu)

    @property
    def f_max(self) -> float:
        return self.f0 + (self.M - 1) * self.delta_f

    @cached_property
    def frequencies(self) -> np.ndarray:
        f = self.f0 + self.delta_f * np.arange(self.M)
        f.setflags(write=False)
        return f


@dataclass(frozen=True)
class PathLattice:
    """Uniform path lengths ``d_i = i * L / N`` for ``i = 0..N-1`` (m)."""

    L: float
    N: int

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise GridError(f"L must be finite and > 0, got {self.L!r}")
        if int(self.N) != self.N or self.N < 1:
            raise GridError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def spacing(self) -> float:
        return self.L / self.N

    @cached_property
    def lengths(self) -> np.ndarray:
        d = np.arange(self.N) * self.L / self.N
        d.setflags(write=False)
        return d

    @property
    def d_last(self) -> float:
        """Longest lattice length ``(N - 1) * L / N``."""
        return (self.N - 1) * self.L / self.N

    def index_of(self, lengths) -> np.ndarray:
        """Nearest lattice index for each length (clipped to the lattice)."""
        idx = np.rint(np.asarray(lengths, dtype=float) / self.spacing).astype(np.int64)
        return np.clip(idx, 0, self.N - 1)


def max_length(grid: FrequencyGrid) -> float:
    """Longest representable path length, ``(M - 1) * nu / (f_max - f0)``."""
    return (grid.M - 1) * grid.nu / (grid.f_max - grid.f0)


def num_paths(grid: FrequencyGrid, L: float | None = None) -> int:
    """Lattice size ``round(2 * f_max * L / nu)``.

    Both the anti-aliasing bound and the shortest-path bound are met with
    equality up to the integer rounding.
    """
    if L is None:
        L = max_length(grid)
    n = int(round(2.0 * grid.f_max * L / grid.nu))
    if n < 1:
        raise GridError(f"grid yields fewer than one lattice path (2*f_max*L/nu = {2.0 * grid.f_max * L / grid.nu:g})")
    return n


def path_lattice(L: float, N: int) -> PathLattice:
    return PathLattice(L, N)


def lattice_for(grid: FrequencyGrid) -> PathLattice:
    """The full path lattice implied by a frequency grid."""
    L = max_length(grid)
    return PathLattice(L, num_paths(grid, L))
