"""Dependence structure across paths: conditional histograms and gain ACF.

Fitted channels keep only their dominant paths. Embedding them back onto
the full length lattice (zeros at discarded positions) gives a sequence
``|g_n|``, ``n = 0..N-1``, whose deterministic autocorrelation

    R(n) = (1/N) * sum_{m=0}^{N-n-1} |g_{n+m}| |g_m|,   n = 0..N

is reported normalized by ``R(0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateSampleError
from ..grid import PathLattice


def embed_gains(params, lattice: PathLattice) -> np.ndarray:
    """Absolute gains placed on the full lattice, zeros elsewhere."""
    idx = params.indices if getattr(params, "indices", None) is not None else lattice.index_of(params.lengths)
    out = np.zeros(lattice.N)
    out[np.asarray(idx, dtype=np.int64)] = np.abs(params.gains)
    return out


def acf(sequence) -> np.ndarray:
    """Normalized deterministic autocorrelation for lags ``0..N``."""
    a = np.asarray(sequence, dtype=float).reshape(-1)
    N = a.size
    if N == 0 or not np.any(a != 0):
        raise DegenerateSampleError("gain sequence is identically zero")
    full = np.correlate(a, a, mode="full")[N - 1:]
    R = np.concatenate([full, [0.0]]) / N
    out = R / R[0]
    out[0] = 1.0
    return out


def gain_acf(params, lattice: PathLattice) -> np.ndarray:
    return acf(embed_gains(params, lattice))


@dataclass(frozen=True)
class AcfSummary:
    lags: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    count: int


def corpus_acf(param_sets, lattice: PathLattice) -> AcfSummary:
    """Average normalized ACF over a corpus with its per-lag min/max envelope."""
    rows = [gain_acf(p, lattice) for p in param_sets]
    if not rows:
        raise DegenerateSampleError("no fitted channels")
    R = np.vstack(rows)
    return AcfSummary(np.arange(lattice.N + 1), R.mean(axis=0), R.min(axis=0), R.max(axis=0), len(rows))


@dataclass(frozen=True)
class ConditionalTable:
    """Row-conditional histogram; ``table[i]`` is the distribution given ``row_edges[i:i+2]``.

    ``density`` tables integrate to one over ``col_edges``; otherwise rows
    sum to one. Empty rows stay zero.
    """

    row_edges: np.ndarray
    col_edges: np.ndarray
    table: np.ndarray
    row_counts: np.ndarray
    density: bool


def _conditional(rows, cols, row_edges, col_edges, density: bool) -> ConditionalTable:
    row_edges = np.asarray(row_edges, dtype=float)
    col_edges = np.asarray(col_edges, dtype=float)
    H, _, _ = np.histogram2d(rows, cols, bins=[row_edges, col_edges])
    counts = H.sum(axis=1)
    norm = counts[:, None] * (np.diff(col_edges)[None, :] if density else 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        T = np.where(counts[:, None] > 0, H / np.where(norm == 0, 1.0, norm), 0.0)
    return ConditionalTable(row_edges, col_edges, T, counts.astype(np.int64), density)


def default_edges(lattice: PathLattice, n_max: int | None = None):
    """Bin edges for path count, length and gain magnitude."""
    n_max = lattice.N if n_max is None else n_max
    N_edges = np.arange(0.5, n_max + 25.5, 25.0)
    d_edges = np.linspace(0.0, lattice.d_last + lattice.spacing / 2, 65)
    g_edges = np.linspace(0.0, 1.0, 51)
    return N_edges, d_edges, g_edges


def conditional_histograms(param_sets, lattice: PathLattice, N_edges=None, d_edges=None, g_edges=None):
    """``P(d | N)`` (rows sum to one) and ``f(|g| | d)`` (rows integrate to one)."""
    param_sets = list(param_sets)
    if not param_sets:
        raise DegenerateSampleError("no fitted channels")
    dN, dd, dg = default_edges(lattice, max(p.n_paths for p in param_sets))
    N_edges = dN if N_edges is None else N_edges
    d_edges = dd if d_edges is None else d_edges
    g_edges = dg if g_edges is None else g_edges
    counts = np.concatenate([np.full(p.n_paths, p.n_paths) for p in param_sets])
    lengths = np.concatenate([p.lengths for p in param_sets])
    gains = np.concatenate([np.abs(p.gains) for p in param_sets])
    p_d_given_n = _conditional(counts, lengths, N_edges, d_edges, density=False)
    f_g_given_d = _conditional(lengths, gains, d_edges, g_edges, density=True)
    return p_d_given_n, f_g_given_d
