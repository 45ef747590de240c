"""Dominant-path selection.

Starting from the full lattice, the path with the smallest contribution
``|g_i| * sum_m exp(-(a0 + a1 f_m) d_i)`` is dropped and the gains are
re-solved, for as long as the NRMSE stays below the budget. The removal that
breaks the budget is undone, and the surviving gains are normalized by their
largest magnitude, which becomes the scale ``A``.

Two interchangeable engines run the loop:

``"reference"``
    Re-solves every step with :func:`mpmfit.wls.solve_gains` (SVD).
    Exact contract, but O(K^3) per step.
``"fast"``
    Factors the system once and downdates the QR factor column by column
    (see :mod:`mpmfit._qrdown`). The factorization carries a Tikhonov term
    equal to the pseudo-inverse cutoff, so on well-conditioned systems it
    reproduces the reference to round-off while staying defined on the
    rank-deficient early iterations of a full-lattice fit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _qrdown
from .attenuation import AttenuationCoefficients, fit_attenuation
from .channel import ChannelRecord
from .errors import ConvergenceError, DegenerateSampleError, SolverError
from .grid import FrequencyGrid, PathLattice, lattice_for
from .wls import PINV_RCOND, PathSystem, build_system, fitted_response, nrmse, solve_gains, to_db

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD_DB = -20.0


@dataclass(frozen=True)
class DecimationConfig:
    nrmse_threshold_db: float = DEFAULT_THRESHOLD_DB
    max_iterations: int | None = None  # None: lattice size
    method: str = "fast"

    def __post_init__(self):
        if not np.isfinite(self.nrmse_threshold_db):
            raise ValueError("NRMSE threshold must be finite")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.method not in ("fast", "reference"):
            raise ValueError(f"unknown decimation method {self.method!r}")


@dataclass(frozen=True, eq=False)
class MpmParameterSet:
    """Complete multipath-model parameterization of one channel.

    ``H(f) = A * sum_i g_i exp(-(a0 + a1 f^K) d_i) exp(-2j pi f d_i / nu)``
    """

    a0: float
    a1: float
    A: float
    lengths: np.ndarray
    gains: np.ndarray
    grid: FrequencyGrid
    K: float = 1.0
    nu: float | None = None
    indices: np.ndarray | None = None

    def __post_init__(self):
        d = np.array(self.lengths, dtype=float).reshape(-1)
        g = np.array(self.gains, dtype=float).reshape(-1)
        if d.shape != g.shape:
            raise ValueError("lengths and gains differ in length")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(g))):
            raise ValueError("non-finite path parameter")
        if not (np.isfinite(self.A) and self.A > 0):
            raise ValueError(f"A must be finite and > 0, got {self.A!r}")
        if np.unique(d).size != d.size:
            raise ValueError("path lengths must be distinct")
        if g.size and np.max(np.abs(g)) != 1.0:
            raise ValueError(f"gains must have max |g| == 1, got {np.max(np.abs(g))!r}")
        if self.nu is None:
            object.__setattr__(self, "nu", self.grid.nu)
        d.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "lengths", d)
        object.__setattr__(self, "gains", g)
        if self.indices is not None:
            idx = np.array(self.indices, dtype=np.int64).reshape(-1)
            if idx.shape != d.shape:
                raise ValueError("indices and lengths differ in length")
            idx.setflags(write=False)
            object.__setattr__(self, "indices", idx)

    @property
    def n_paths(self) -> int:
        return int(self.lengths.size)

    @property
    def paths(self) -> list[tuple[float, float]]:
        return list(zip(self.lengths.tolist(), self.gains.tolist()))


@dataclass(eq=False)
class FitReport:
    initial_path_count: int
    final_path_count: int
    pre_decimation_nrmse_db: float
    final_nrmse_db: float
    threshold_db: float
    nrmse_trace_db: np.ndarray = field(default_factory=lambda: np.zeros(0))
    removal_order: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    violating_nrmse_db: float | None = None
    exit_score: float | None = None
    method: str = "fast"

    @property
    def iterations(self) -> int:
        return int(self.removal_order.size)

    @property
    def threshold_met(self) -> bool:
        return bool(self.final_nrmse_db <= self.threshold_db)


def contribution_scores(system: PathSystem, gains) -> np.ndarray:
    """``|g_i| * sum_m exp(-(a0 + a1 f_m) d_i)`` for each active path."""
    g = np.asarray(gains, dtype=float)
    if g.shape != system.active.shape:
        raise ValueError("gains not aligned with the active paths")
    return np.abs(g) * system.loss().sum(axis=0)


def normalize(gains) -> tuple[float, np.ndarray]:
    """Split gains into ``A = max|g|`` and gains scaled into [-1, 1]."""
    g = np.asarray(gains, dtype=float)
    A = float(np.max(np.abs(g))) if g.size else 0.0
    if not A > 0:
        raise DegenerateSampleError("cannot normalize an all-zero gain vector")
    gn = g / A
    # a signed maximum divides to exactly +-1; keep that explicit
    gn[np.abs(g) == A] = np.sign(g[np.abs(g) == A])
    return A, gn


def _damping(A: np.ndarray, iters: int = 60) -> float:
    """Pseudo-inverse cutoff ``PINV_RCOND * s_max`` via power iteration."""
    v = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
    s = 0.0
    for _ in range(iters):
        u = A.T @ (A @ v)
        s = float(np.linalg.norm(u))
        if s == 0:
            return 0.0
        v = u / s
    return PINV_RCOND * float(np.sqrt(s))


def _run_fast(system, channel, threshold_db, max_iter):
    A, b = system.design(channel)
    M, K = channel.grid.M, system.active.size
    # On grids where 2 f_max L / nu is an integer the imaginary row at f_max
    # is sin(pi i) = 0 up to round-off. Truncation ignores such a row while
    # damping would amplify its noise, so zero it explicitly.
    rn = np.linalg.norm(A, axis=1)
    A[rn <= PINV_RCOND * rn.max()] = 0.0
    lam = _damping(A)
    aug = np.zeros((2 * M + K, K + 1))
    aug[: 2 * M, :K] = A
    aug[: 2 * M, K] = b
    aug[2 * M:, :K] = lam * np.eye(K)
    R = scipy.linalg.qr(aug, mode="r", overwrite_a=True, check_finite=False)[0]
    del aug
    if R.shape[0] < K + 1:
        R = np.vstack([R, np.zeros((K + 1 - R.shape[0], K + 1))])
    R = np.ascontiguousarray(R[: K + 1])
    # the downdate recurrence loses the residual to cancellation when the fit
    # is near exact, so the starting NRMSE is measured directly
    g0 = scipy.linalg.solve_triangular(R[:K, :K], R[:K, K], check_finite=False)
    nr_start = to_db(float(np.linalg.norm(A @ g0 - b)) / np.sqrt(M))
    del A
    colsum = np.zeros(system.lattice.N)
    colsum[system.active] = system.loss().sum(axis=0)
    _, order, trace, scores, survivors, status = _qrdown.eliminate(
        R, system.active.astype(np.int64), colsum, float(b @ b), lam * lam, float(M), threshold_db, max_iter
    )
    return nr_start, order, trace, scores, np.sort(survivors), status


def _run_reference(system, channel, threshold_db, max_iter):
    active = system.active.copy()
    g = solve_gains(system, channel)
    nr0 = to_db(nrmse(channel, fitted_response(system, g)))
    nr = nr0
    order, trace, scores = [], [], []
    status = 0
    while nr < threshold_db:
        if active.size == 0:
            status = 1
            break
        if len(order) >= max_iter:
            status = 2
            break
        sub = system.restrict(active)
        s = contribution_scores(sub, g)
        j = int(np.argmin(s))  # first minimum: lowest lattice index
        order.append(int(active[j]))
        scores.append(float(s[j]))
        active = np.delete(active, j)
        sub = system.restrict(active)
        g = solve_gains(sub, channel) if active.size else np.zeros(0)
        nr = to_db(nrmse(channel, fitted_response(sub, g)))
        trace.append(nr)
    return (
        nr0,
        np.array(order, dtype=np.int64),
        np.array(trace),
        np.array(scores),
        active,
        status,
    )


def decimate(
    channel: ChannelRecord,
    lattice: PathLattice,
    atten: AttenuationCoefficients,
    config: DecimationConfig | None = None,
) -> tuple[MpmParameterSet, FitReport]:
    """Reduce the full-lattice WLS fit of ``channel`` to its dominant paths."""
    config = config or DecimationConfig()
    thr = float(config.nrmse_threshold_db)
    max_iter = lattice.N if config.max_iterations is None else int(config.max_iterations)
    system = build_system(channel, lattice, atten)

    run = _run_fast if config.method == "fast" else _run_reference
    nr0, order, trace, scores, survivors, status = run(system, channel, thr, max_iter)
    if status == 2:
        raise ConvergenceError(
            f"channel {channel.id!r}: decimation hit max_iterations={max_iter} with NRMSE still below threshold",
            last_iterate=survivors,
            iterations=max_iter,
        )

    if order.size:
        final_active = np.sort(np.append(survivors, order[-1]))
    else:
        final_active = survivors
        log.warning(
            "channel %r: initial NRMSE %.2f dB does not meet the %.2f dB budget; nothing removed",
            channel.id, nr0, thr,
        )
    final = system.restrict(final_active)
    g = solve_gains(final, channel)
    nr_final = to_db(nrmse(channel, fitted_response(final, g)))
    if nr_final > thr and order.size and config.method == "fast":
        # the contract solve disagreed with the damped engine at the budget edge
        g_alt = _polish(final, channel)
        nr_alt = to_db(nrmse(channel, fitted_response(final, g_alt)))
        if nr_alt < nr_final:
            g, nr_final = g_alt, nr_alt

    keep = g != 0
    if not np.any(keep):
        raise SolverError(f"channel {channel.id!r}: all surviving gains are zero")
    A, gn = normalize(g)
    params = MpmParameterSet(
        a0=atten.a0,
        a1=atten.a1,
        A=A,
        lengths=final.lengths,
        gains=gn,
        grid=channel.grid,
        nu=channel.grid.nu,
        indices=final.active,
    )
    report = FitReport(
        initial_path_count=int(lattice.N),
        final_path_count=int(final_active.size),
        pre_decimation_nrmse_db=float(nr0),
        final_nrmse_db=float(nr_final),
        threshold_db=thr,
        nrmse_trace_db=trace,
        removal_order=order,
        violating_nrmse_db=float(trace[-1]) if trace.size else None,
        exit_score=float(scores[-1]) if scores.size else None,
        method=config.method,
    )
    return params, report


def _polish(system: PathSystem, channel: ChannelRecord) -> np.ndarray:
    A, b = system.design(channel)
    return scipy.linalg.lstsq(A, b, lapack_driver="gelsy")[0]


def fit_channel(
    channel: ChannelRecord,
    config: DecimationConfig | None = None,
    lattice: PathLattice | None = None,
) -> tuple[MpmParameterSet, FitReport]:
    """Attenuation fit, full-lattice WLS and decimation in one call."""
    lattice = lattice_for(channel.grid) if lattice is None else lattice
    atten = fit_attenuation(channel, lattice.L)
    return decimate(channel, lattice, atten, config)
