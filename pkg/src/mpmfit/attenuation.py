"""Attenuation coefficients from a robust line fit of the log-magnitude.

The linear trend of ``20 log10 |H(f)|`` is attributed to a single path of the
maximum length ``L``, so intercept and slope map to ``a0`` and ``a1`` through
``a = -alpha / (20 L log10 e)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRecord
from .errors import DegenerateSampleError
from .robust import robust_fit

LOG10_E = math.log10(math.e)


@dataclass(frozen=True)
class AttenuationCoefficients:
    a0: float  # 1/m
    a1: float  # s/m
    alpha0: float = float("nan")  # dB
    alpha1: float = float("nan")  # dB/Hz

    def loss_rate(self, f) -> np.ndarray:
        """``a0 + a1 * f`` in 1/m."""
        return self.a0 + self.a1 * np.asarray(f, dtype=float)


def robust_line_fit(x, y) -> tuple[float, float]:
    """Intercept and slope of a bisquare-robust straight line through ``(x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise DegenerateSampleError("need two or more (x, y) pairs of equal length")
    if np.any(np.diff(x) <= 0):
        raise DegenerateSampleError("x must be strictly increasing")
    coef = robust_fit(x, y).coef
    return float(coef[0]), float(coef[1])


def attenuation_from_line(alpha0: float, alpha1: float, L: float) -> AttenuationCoefficients:
    if not L > 0:
        raise ValueError(f"L must be positive, got {L!r}")
    k = 20.0 * L * LOG10_E
    return AttenuationCoefficients(-alpha0 / k, -alpha1 / k, alpha0, alpha1)


def fit_attenuation(channel: ChannelRecord, L: float) -> AttenuationCoefficients:
    """Estimate ``(a0, a1)`` for ``channel`` with ``L`` as the longest path."""
    channel.require_nonzero("log-magnitude regression")
    y = 20.0 * np.log10(np.abs(channel.samples))
    alpha0, alpha1 = robust_line_fit(channel.frequencies, y)
    return attenuation_from_line(alpha0, alpha1, L)
