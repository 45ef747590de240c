"""Forward model evaluation and channel-level metrics.

``evaluate`` computes

    H(f) = A * sum_i g_i exp(-(a0 + a1 f^K) d_i) exp(-2j pi f d_i / nu)

on a frequency grid. The metrics are the average gain ``G`` (mean of
``20 log10 |H|`` in dB) and the RMS delay spread of the power delay profile.

The power delay profile is ``|IDFT(H)|^2`` over the ``M`` measured bins, with
delays ``n / (M delta_f)`` covering one period ``1 / delta_f`` (which equals
the longest lattice delay ``L / nu``). The profile is periodic, so the
spread is measured from the cut of the period that minimizes it. Working
with the complex baseband response keeps the profile independent of the
carrier phase, so scaling ``H`` by any complex constant leaves the spread
unchanged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRecord, as_samples
from .errors import DegenerateSampleError
from .grid import FrequencyGrid

_ROUNDOFF_FLOOR = 1e-28


def evaluate_paths(f, lengths, gains, a0: float, a1: float, A: float = 1.0, nu: float = 2.0e8, K: float = 1.0):
    """Evaluate the multipath sum at frequencies ``f`` for explicit paths."""
    f = np.asarray(f, dtype=float)
    d = np.asarray(lengths, dtype=float)
    g = np.asarray(gains, dtype=float)
    if d.shape != g.shape:
        raise ValueError("lengths and gains differ in length")
    fk = f if K == 1 else f**K
    arg = (2.0 * np.pi / nu) * np.outer(f, d)
    P = np.exp(-np.outer(a0 + a1 * fk, d)) * (np.cos(arg) - 1j * np.sin(arg))
    return A * (P @ g)


def evaluate(params, grid: FrequencyGrid | None = None) -> np.ndarray:
    """Channel frequency response of ``params`` on ``grid`` (default: its own grid)."""
    grid = params.grid if grid is None else grid
    if params.K != 1:
        warnings.warn("attenuation exponent K != 1 is experimental", stacklevel=2)
    return evaluate_paths(grid.frequencies, params.lengths, params.gains, params.a0, params.a1, params.A, params.nu, params.K)


def synthesize(params, grid: FrequencyGrid | None = None, id: str = "") -> ChannelRecord:
    grid = params.grid if grid is None else grid
    return ChannelRecord(grid, evaluate(params, grid), id=id)


def average_gain(channel) -> float:
    """Mean of ``20 log10 |H(f_m)|`` in dB."""
    h = as_samples(channel)
    zero = np.flatnonzero(h == 0)
    if zero.size:
        raise DegenerateSampleError(f"zero-magnitude sample at index {int(zero[0])}", index=int(zero[0]))
    return float(np.mean(20.0 * np.log10(np.abs(h))))


def power_delay_profile(channel: ChannelRecord, window: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Delays (s) and power delay profile ``|IDFT(H)|^2`` of ``channel``.

    ``window="hann"`` tapers the band edges before the transform.
    """
    h = channel.samples
    M = channel.grid.M
    if window is None:
        x = h
    elif window == "hann":
        x = h * np.hanning(M)
    else:
        raise ValueError(f"unknown window {window!r}")
    p = np.abs(np.fft.ifft(x)) ** 2
    # transform round-off sits near 1e-32 of the peak; drop it so that an
    # exact single-tap profile stays exact
    p[p < _ROUNDOFF_FLOOR * p.max()] = 0.0
    t = np.arange(M) / (M * channel.grid.delta_f)
    return t, p


def rms_delay_spread(delays, powers) -> float:
    """RMS width of a power delay profile."""
    t = np.asarray(delays, dtype=float)
    p = np.asarray(powers, dtype=float)
    if t.shape != p.shape:
        raise ValueError("delays and powers differ in length")
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    total = p.sum()
    if not total > 0:
        raise DegenerateSampleError("power delay profile carries no energy")
    mean = (p @ t) / total
    var = (p @ (t - mean) ** 2) / total
    return float(np.sqrt(max(var, 0.0)))


def _circular_origin(p: np.ndarray) -> int:
    """Start index of the period that minimizes the spread of a periodic profile.

    Energy leaking to slightly negative delays wraps to the end of the
    period; cutting the circle in the quietest place keeps it next to the
    main arrival instead.
    """
    M = p.size
    n = np.arange(M, dtype=float)
    S0, S1, S2 = p.sum(), p @ n, p @ (n * n)
    P = np.concatenate([[0.0], np.cumsum(p)[:-1]])  # mass before the cut
    Q = np.concatenate([[0.0], np.cumsum(p * n)[:-1]])
    c = n
    m1 = S1 - c * S0 + M * P
    m2 = S2 - 2 * c * S1 + c * c * S0 + 2 * M * (Q - c * P) + M * M * P
    var = m2 / S0 - (m1 / S0) ** 2
    return int(np.argmin(var))


def delay_spread(channel: ChannelRecord, window: str | None = None, dynamic_range_db: float | None = None) -> float:
    """RMS delay spread (s) of the periodic power delay profile.

    Delays are measured from the cut of the period that minimizes the
    spread. Taps more than ``dynamic_range_db`` below the strongest one are
    ignored when given; by default every tap counts.
    """
    if not np.any(channel.samples != 0):
        raise DegenerateSampleError(f"channel {channel.id!r} is identically zero")
    t, p = power_delay_profile(channel, window)
    if dynamic_range_db is not None:
        p = np.where(p >= p.max() * 10.0 ** (-dynamic_range_db / 10.0), p, 0.0)
    c = _circular_origin(p)
    return rms_delay_spread(t, np.roll(p, -c))


@dataclass(frozen=True)
class ChannelMetrics:
    average_gain_db: float
    delay_spread_s: float

    def __post_init__(self):
        if not np.isfinite(self.average_gain_db):
            raise ValueError("average gain must be finite")
        if not (self.delay_spread_s >= 0):
            raise ValueError("delay spread must be nonnegative")


def channel_metrics(channel: ChannelRecord, window: str | None = None) -> ChannelMetrics:
    return ChannelMetrics(average_gain(channel), delay_spread(channel, window))
