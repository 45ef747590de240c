"""Weighted least-squares path gains and fit-error metrics.

The model is linear in the real path gains ``g``. Stacking the response with
its conjugate and weighting every frequency by ``1/|H(f_m)|^2`` makes the
weighted LS objective equal to ``M * NRMSE^2`` up to a constant factor, and
forces the solution to be real. The stacked complex system is equivalent to
the real system ``[Re(sqrt(W) P); Im(sqrt(W) P)] g = [Re(sqrt(W) h); Im(sqrt(W) h)]``
(both normal matrices differ by a factor 2), which is what gets solved here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .attenuation import AttenuationCoefficients
from .channel import ChannelRecord, as_samples
from .errors import DegenerateSampleError, SolverError
from .grid import FrequencyGrid, PathLattice

#: Relative singular-value cutoff of the pseudo-inverse solve.
PINV_RCOND = 1e-10

__all__ = [
    "ChannelRecord",
    "PathSystem",
    "build_system",
    "solve_gains",
    "rmse",
    "nrmse",
    "to_db",
    "nrmse_db",
    "PINV_RCOND",
]


@dataclass(frozen=True, eq=False)
class PathSystem:
    """Column generator for the path matrix restricted to ``active`` lattice indices.

    ``P[m, i] = exp(-(a0 + a1 f_m) d_i) * exp(-2j pi f_m d_i / nu)``.
    Columns are regenerated on demand; nothing large is cached.
    """

    grid: FrequencyGrid
    lattice: PathLattice
    atten: AttenuationCoefficients
    active: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        act = np.asarray(self.active, dtype=np.int64)
        if act.ndim != 1:
            raise ValueError("active indices must be one-dimensional")
        if act.size and (act[0] < 0 or act[-1] >= self.lattice.N or np.any(np.diff(act) <= 0)):
            raise ValueError("active indices must be strictly increasing within [0, N-1]")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.M,) or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DegenerateSampleError("weights must be M finite positive values")
        act.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "active", act)
        object.__setattr__(self, "weights", w)

    @property
    def lengths(self) -> np.ndarray:
        return self.lattice.lengths[self.active]

    def restrict(self, active) -> PathSystem:
        return PathSystem(self.grid, self.lattice, self.atten, np.asarray(active), self.weights)

    def loss(self, lengths=None) -> np.ndarray:
        """Real attenuation factors ``exp(-(a0 + a1 f_m) d_i)``, shape (M, K)."""
        d = self.lengths if lengths is None else np.asarray(lengths, dtype=float)
        return path_loss(self.grid.frequencies, d, self.atten.a0, self.atten.a1)

    def columns(self) -> np.ndarray:
        """Complex path matrix for the active set, shape (M, K)."""
        return path_matrix(self.grid.frequencies, self.lengths, self.atten.a0, self.atten.a1, self.grid.nu)

    def design(self, channel) -> tuple[np.ndarray, np.ndarray]:
        """Weighted real design matrix (2M, K) and right-hand side (2M,)."""
        h = as_samples(channel)
        sw = np.sqrt(self.weights)
        f = self.grid.frequencies
        d = self.lengths
        loss = path_loss(f, d, self.atten.a0, self.atten.a1) * sw[:, None]
        arg = (2.0 * np.pi / self.grid.nu) * np.outer(f, d)
        A = np.empty((2 * self.grid.M, d.size))
        A[: self.grid.M] = loss * np.cos(arg)
        A[self.grid.M:] = -loss * np.sin(arg)
        hw = h * sw
        return A, np.concatenate([hw.real, hw.imag])


def path_loss(f, d, a0: float, a1: float) -> np.ndarray:
    return np.exp(-np.outer(a0 + a1 * np.asarray(f, dtype=float), np.asarray(d, dtype=float)))


def path_matrix(f, d, a0: float, a1: float, nu: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    d = np.asarray(d, dtype=float)
    arg = (2.0 * np.pi / nu) * np.outer(f, d)
    return path_loss(f, d, a0, a1) * (np.cos(arg) - 1j * np.sin(arg))


def channel_weights(channel: ChannelRecord) -> np.ndarray:
    channel.require_nonzero("WLS weighting")
    with np.errstate(over="raise"):
        try:
            w = 1.0 / np.abs(channel.samples) ** 2
        except FloatingPointError:
            w = np.full(channel.grid.M, np.inf)
    if not np.all(np.isfinite(w)):
        bad = int(np.argmax(~np.isfinite(w)))
        raise DegenerateSampleError(
            f"channel {channel.id!r}: weight overflow at index {bad} (|H| = {abs(channel.samples[bad]):g})",
            index=bad,
        )
    return w


def build_system(
    channel: ChannelRecord,
    lattice: PathLattice,
    atten: AttenuationCoefficients,
    active=None,
) -> PathSystem:
    """WLS system over ``active`` lattice indices (all of them by default)."""
    w = channel_weights(channel)
    if active is None:
        active = np.arange(lattice.N)
    return PathSystem(channel.grid, lattice, atten, np.asarray(active), w)


def solve_gains(system: PathSystem, channel: ChannelRecord, rcond: float = PINV_RCOND) -> np.ndarray:
    """Real path gains minimizing the weighted residual of the stacked system.

    Uses an SVD-based solve with singular values below ``rcond * s_max``
    discarded, so a rank-deficient system yields the minimum-norm solution.
    """
    if channel.grid != system.grid:
        raise ValueError("channel and system use different frequency grids")
    if system.active.size == 0:
        return np.zeros(0)
    A, b = system.design(channel)
    try:
        g, _, rank, sv = scipy.linalg.lstsq(A, b, cond=rcond, lapack_driver="gelsd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"channel {channel.id!r}: WLS solve failed: {exc}") from exc
    if not np.all(np.isfinite(g)):
        cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else float("inf")
        raise SolverError(f"channel {channel.id!r}: non-finite WLS solution", condition=cond, rank=int(rank))
    return g


def fitted_response(system: PathSystem, gains) -> np.ndarray:
    return system.columns() @ np.asarray(gains, dtype=float)


def rmse(measured, fitted) -> float:
    h = as_samples(measured)
    hh = np.asarray(fitted, dtype=complex)
    if h.shape != hh.shape:
        raise ValueError("measured and fitted lengths differ")
    return float(np.sqrt(np.mean(np.abs(h - hh) ** 2)))


def nrmse(measured, fitted) -> float:
    """Root-mean-square of the per-frequency relative error."""
    h = as_samples(measured)
    hh = np.asarray(fitted, dtype=complex)
    if h.shape != hh.shape:
        raise ValueError("measured and fitted lengths differ")
    zero = np.flatnonzero(h == 0)
    if zero.size:
        raise DegenerateSampleError(f"zero-magnitude measured sample at index {int(zero[0])}", index=int(zero[0]))
    return float(np.sqrt(np.mean(np.abs(h - hh) ** 2 / np.abs(h) ** 2)))


def to_db(x: float) -> float:
    """``20 log10(x)``; ``-inf`` for an exact zero."""
    if x == 0:
        return float("-inf")
    return float(20.0 * np.log10(x))


def nrmse_db(measured, fitted) -> float:
    return to_db(nrmse(measured, fitted))
