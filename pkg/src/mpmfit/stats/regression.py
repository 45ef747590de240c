"""Regressions of model parameters against channel metrics.

Three forms are supported:

``affine-1var``   ``y = alpha + beta * x``
``affine-2var``   ``y = alpha + beta * x1 + gamma * x2``
``exponential``   ``y = alpha * exp(beta * x)``

Affine forms use the bisquare IRLS engine that also fits the attenuation
line; the exponential form is an ordinary nonlinear least-squares fit.
The module-level constants hold the coefficients reported for the measured
corpus: ``a0`` against average gain ``G`` (dB), path count against delay
spread (us) and ``G``, and ``A`` against ``G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..errors import DegenerateSampleError, SolverError
from ..robust import robust_fit

FORMS = {"affine-1var": 2, "affine-2var": 3, "exponential": 2}


@dataclass(frozen=True)
class RegressionSpec:
    form: str
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown regression form {self.form!r}")
        c = tuple(float(v) for v in self.coefficients)
        if len(c) != FORMS[self.form]:
            raise ValueError(f"{self.form} takes {FORMS[self.form]} coefficients, got {len(c)}")
        if not all(math.isfinite(v) for v in c):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @property
    def alpha(self) -> float:
        return self.coefficients[0]

    @property
    def beta(self) -> float:
        return self.coefficients[1]

    @property
    def gamma(self) -> float | None:
        return self.coefficients[2] if len(self.coefficients) > 2 else None

    def evaluate(self, *x):
        if self.form == "affine-1var":
            (x1,) = x
            return self.alpha + self.beta * np.asarray(x1, dtype=float)
        if self.form == "affine-2var":
            x1, x2 = x
            return self.alpha + self.beta * np.asarray(x1, dtype=float) + self.gamma * np.asarray(x2, dtype=float)
        (x1,) = x
        return self.alpha * np.exp(self.beta * np.asarray(x1, dtype=float))


A0_VS_GAIN = RegressionSpec("affine-1var", (-1.8669e-4, -3.4066e-5))
PATHS_VS_SPREAD_GAIN = RegressionSpec("affine-2var", (40.4009, 185.7535, 4.5097))
A_VS_GAIN = RegressionSpec("exponential", (0.82517, 0.10636))


def predict_path_count(ds_us, G_db, spec: RegressionSpec = PATHS_VS_SPREAD_GAIN):
    """Predicted path count clamped to at least one, with a below-one flag."""
    raw = np.asarray(spec.evaluate(ds_us, G_db), dtype=float)
    below = raw < 1.0
    out = np.where(below, 1.0, raw)
    if out.ndim == 0:
        return float(out), bool(below)
    return out, below


def _columns(*vs) -> list[np.ndarray]:
    cols = [np.asarray(v, dtype=float).reshape(-1) for v in vs]
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise ValueError("regression inputs differ in length")
    if not all(np.all(np.isfinite(c)) for c in cols):
        raise DegenerateSampleError("regression inputs must be finite")
    return cols


def _affine(y, *xs) -> tuple[float, ...]:
    X = np.column_stack(xs)
    if y.size < X.shape[1] + 1:
        raise DegenerateSampleError(f"need at least {X.shape[1] + 1} observations")
    design = np.column_stack([np.ones(y.size), X])
    # standardize before the rank check so unit scale does not matter
    sd = design.std(axis=0)
    sd[0] = 1.0
    if np.any(sd == 0) or np.linalg.matrix_rank(design / sd) < design.shape[1]:
        raise SolverError("regression design is rank deficient", rank=int(np.linalg.matrix_rank(design / np.where(sd == 0, 1, sd))))
    return tuple(float(c) for c in robust_fit(X, y).coef)


def regression_a0(G, a0) -> RegressionSpec:
    G, a0 = _columns(G, a0)
    return RegressionSpec("affine-1var", _affine(a0, G))


def regression_N(ds_us, G, N) -> RegressionSpec:
    ds_us, G, N = _columns(ds_us, G, N)
    return RegressionSpec("affine-2var", _affine(N, ds_us, G))


def regression_A(G, A) -> RegressionSpec:
    """Least-squares fit of ``A = alpha * exp(beta * G)``."""
    G, A = _columns(G, A)
    if G.size < 2:
        raise DegenerateSampleError("need at least two observations")
    if np.ptp(G) == 0:
        raise SolverError("regression design is rank deficient", rank=1)
    pos = A > 0
    if pos.sum() >= 2 and np.ptp(G[pos]) > 0:
        b0, la0 = np.polyfit(G[pos], np.log(A[pos]), 1)
        x0 = (math.exp(la0), b0)
    else:
        x0 = (float(np.mean(A)), 0.0)
    res = optimize.least_squares(
        lambda c: c[0] * np.exp(c[1] * G) - A, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    if not (res.success and np.all(np.isfinite(res.x))):
        raise SolverError(f"exponential regression failed: {res.message}")
    return RegressionSpec("exponential", (float(res.x[0]), float(res.x[1])))
