"""Mixture models for the path gains and the path lengths.

Gains ``|g|`` in (0, 1] mix a point mass at 1 (weight ``pi1``) with a
log-normal that is truncated to (0, 1): the normalized gains can never
exceed one, so neither the generator nor the fitter lets the continuous part
leak above it.

Lengths ``d`` in ``[0, d_max]`` mix a Weibull for short paths with a GEV
for long ones, mirrored about ``d_max``: ``y = d_max - d ~ GEV(k1, sigma1, mu1)``.
Both components are truncated to the lattice range and the mixture is
renormalized there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from ..errors import ConvergenceError, DegenerateSampleError, DomainError
from .distributions import DistributionSpec, fit_params, gev_logpdf

POINT_MASS_EPS = 1e-12
DEFAULT_SPLIT = 1500.0


def _log_ndtr(x):
    return special.log_ndtr(x)


# ------------------------------------------------------------------- gains


@dataclass(frozen=True)
class GainMixture:
    """``pi1 * delta(|g| - 1) + (1 - pi1) * LogNormal(mu, sigma | |g| < 1)``."""

    pi1: float
    mu: float
    sigma: float
    truncated: bool = True

    def __post_init__(self):
        if not 0.0 <= self.pi1 <= 1.0:
            raise ValueError(f"pi1 must lie in [0, 1], got {self.pi1!r}")
        if not (math.isfinite(self.mu) and self.sigma > 0):
            raise ValueError("lognormal parameters must be finite with sigma > 0")

    @property
    def weights(self) -> tuple[float, float]:
        return 1.0 - self.pi1, self.pi1

    @property
    def lognormal(self) -> DistributionSpec:
        return DistributionSpec("log-normal", {"mu": self.mu, "sigma": self.sigma})

    def _log_mass_below_one(self) -> float:
        return float(_log_ndtr(-self.mu / self.sigma)) if self.truncated else 0.0

    def continuous_logpdf(self, x) -> np.ndarray:
        """Log density of the continuous component (truncated when enabled)."""
        x = np.asarray(x, dtype=float)
        out = stats.lognorm.logpdf(x, self.sigma, scale=math.exp(self.mu)) - self._log_mass_below_one()
        if self.truncated:
            out = np.where(x < 1.0, out, -np.inf)
        return out

    def pdf(self, x) -> np.ndarray:
        """Density of the continuous part, scaled by its weight."""
        return (1.0 - self.pi1) * np.exp(self.continuous_logpdf(x))

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = stats.lognorm.cdf(np.minimum(x, 1.0) if self.truncated else x, self.sigma, scale=math.exp(self.mu))
        if self.truncated:
            c = c / math.exp(self._log_mass_below_one())
        return (1.0 - self.pi1) * c + self.pi1 * (x >= 1.0)

    def sample_continuous(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty(0)
        while out.size < n:
            draw = np.exp(rng.normal(self.mu, self.sigma, n - out.size))
            if self.truncated:
                draw = draw[draw < 1.0]
            out = np.concatenate([out, draw])
        return out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        ones = rng.random(n) < self.pi1
        out = np.ones(n)
        out[~ones] = self.sample_continuous(int((~ones).sum()), rng)
        return out


def fit_gain_mixture(samples, eps: float = POINT_MASS_EPS, truncated: bool = True) -> GainMixture:
    """Point-mass weight by counting, log-normal part by maximum likelihood.

    With ``truncated`` the log-normal likelihood is conditioned on ``|g| < 1``.
    """
    x = np.abs(np.asarray(samples, dtype=float).reshape(-1))
    if x.size == 0:
        raise DegenerateSampleError("no gain samples")
    if np.any(~np.isfinite(x)) or np.any(x <= 0) or np.any(x > 1.0 + eps):
        raise DomainError("gain samples must lie in (0, 1]")
    ones = np.abs(x - 1.0) <= eps
    rest = x[~ones]
    if rest.size == 0:
        raise DegenerateSampleError("every gain sample equals 1; the continuous part is empty")
    pi1 = float(ones.mean())
    base = fit_params(rest, "log-normal")
    mu, sg = base.params["mu"], base.params["sigma"]
    if truncated:
        lr = np.log(rest)
        n = lr.size
        s1, s2 = float(lr.sum()), float(lr @ lr)

        def nll(th):
            m, ls = th
            s = math.exp(ls)
            # sum of normal log densities of log|g| plus the truncation term
            q = (s2 - 2 * m * s1 + n * m * m) / (s * s)
            return (n * ls + 0.5 * q) / n + float(_log_ndtr(-m / s))

        res = optimize.minimize(nll, (mu, math.log(sg)), method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if not np.all(np.isfinite(res.x)):
            raise ConvergenceError("truncated log-normal fit failed", last_iterate=res.x)
        mu, sg = float(res.x[0]), float(math.exp(res.x[1]))
    return GainMixture(pi1, mu, sg, truncated)


# ------------------------------------------------------------------- lengths


@dataclass(frozen=True)
class LengthMixture:
    """``pi0 * Weibull(lam0, k0)(d) + pi1 * GEV(k1, sigma1, mu1)(d_max - d)`` on ``[0, d_max]``.

    A component with zero weight may carry NaN parameters.
    """

    pi0: float
    lam0: float
    k0: float
    k1: float
    sigma1: float
    mu1: float
    d_max: float
    truncated: bool = True

    def __post_init__(self):
        if not 0.0 <= self.pi0 <= 1.0:
            raise ValueError(f"pi0 must lie in [0, 1], got {self.pi0!r}")
        if not self.d_max > 0:
            raise ValueError("d_max must be positive")
        if self.pi0 > 0 and not (self.lam0 > 0 and self.k0 > 0):
            raise ValueError("Weibull component needs lam0 > 0 and k0 > 0")
        if self.pi0 < 1 and not (self.sigma1 > 0 and math.isfinite(self.k1) and math.isfinite(self.mu1)):
            raise ValueError("GEV component needs finite k1, mu1 and sigma1 > 0")

    @property
    def pi1(self) -> float:
        return 1.0 - self.pi0

    @property
    def weights(self) -> tuple[float, float]:
        return self.pi0, 1.0 - self.pi0

    @property
    def weibull(self) -> DistributionSpec | None:
        return DistributionSpec("weibull", {"lam": self.lam0, "k": self.k0}) if self.pi0 > 0 else None

    @property
    def gev(self) -> DistributionSpec | None:
        return DistributionSpec("gev", {"k": self.k1, "sigma": self.sigma1, "mu": self.mu1}) if self.pi0 < 1 else None

    def _component_cdfs(self, d):
        d = np.asarray(d, dtype=float)
        W = stats.weibull_min.cdf(d, self.k0, scale=self.lam0) if self.pi0 > 0 else np.zeros(d.shape)
        if self.pi0 < 1:
            # P(d_max - Y <= d) = P(Y >= d_max - d)
            R = stats.genextreme.sf(self.d_max - d, -self.k1, loc=self.mu1, scale=self.sigma1)
        else:
            R = np.zeros(d.shape)
        return W, R

    def _norm(self) -> float:
        if not self.truncated:
            return 1.0
        W, R = self._component_cdfs(np.array([0.0, self.d_max]))
        return float(self.pi0 * (W[1] - W[0]) + self.pi1 * (R[1] - R[0]))

    def logpdf(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        parts = []
        if self.pi0 > 0:
            parts.append(math.log(self.pi0) + stats.weibull_min.logpdf(d, self.k0, scale=self.lam0))
        if self.pi0 < 1:
            parts.append(math.log(self.pi1) + gev_logpdf(self.d_max - d, self.k1, self.sigma1, self.mu1))
        out = np.logaddexp.reduce(np.stack(parts), axis=0) - math.log(self._norm())
        if self.truncated:
            out = np.where((d >= 0) & (d <= self.d_max), out, -np.inf)
        return out

    def pdf(self, d) -> np.ndarray:
        return np.exp(self.logpdf(d))

    def cdf(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if self.truncated:
            dc = np.clip(d, 0.0, self.d_max)
            W, R = self._component_cdfs(dc)
            W0, R0 = self._component_cdfs(0.0)
            return (self.pi0 * (W - W0) + self.pi1 * (R - R0)) / self._norm()
        W, R = self._component_cdfs(d)
        return self.pi0 * W + self.pi1 * R

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Continuous draws; out-of-range draws are redrawn when truncated."""
        out = np.empty(0)
        while out.size < n:
            m = n - out.size
            low = rng.random(m) < self.pi0
            d = np.empty(m)
            if low.any():
                d[low] = self.lam0 * rng.weibull(self.k0, int(low.sum()))
            if (~low).any():
                y = stats.genextreme.rvs(-self.k1, loc=self.mu1, scale=self.sigma1, size=int((~low).sum()),
                                         random_state=rng)
                d[~low] = self.d_max - y
            if self.truncated:
                d = d[(d >= 0) & (d <= self.d_max)]
            out = np.concatenate([out, d])
        return out

    def cell_probabilities(self, lattice) -> np.ndarray:
        """Probability mass of each lattice cell ``[d_i - s/2, d_i + s/2]``."""
        s = lattice.spacing
        d = lattice.lengths
        edges = np.concatenate([[0.0], d[:-1] + s / 2.0, [self.d_max]])
        edges = np.clip(edges, 0.0, self.d_max)
        p = np.diff(self.cdf(edges))
        p = np.maximum(p, 0.0)
        total = p.sum()
        if not total > 0:
            raise DegenerateSampleError("length mixture puts no mass on the lattice")
        return p / total


def _weibull_floor(x: np.ndarray, floor: float) -> np.ndarray:
    return np.maximum(x, floor)


def fit_length_mixture(
    samples,
    L: float,
    N: int,
    split: float = DEFAULT_SPLIT,
    refine: bool = True,
    zero_floor: float | None = None,
) -> LengthMixture:
    """Fit the Weibull + reflected-GEV mixture to path lengths.

    Samples at or below ``split`` seed the Weibull component, the rest seed
    the GEV of ``d_max - d``, and ``pi0`` starts as the fraction below the
    split. With ``refine`` the full truncated mixture likelihood is then
    maximized from that start. Zero lengths are raised to ``zero_floor``
    (half the lattice spacing by default) so the Weibull density is finite.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise DegenerateSampleError("no length samples")
    d_max = (N - 1) * L / N
    tol = 1e-9 * d_max
    if np.any(~np.isfinite(x)) or np.any(x < -tol) or np.any(x > d_max + tol):
        raise DomainError(f"length samples must lie in [0, {d_max}]")
    x = np.clip(x, 0.0, d_max)
    floor = 0.5 * L / N if zero_floor is None else zero_floor
    low = x[x <= split]
    high = x[x > split]
    pi0 = low.size / x.size
    nan = float("nan")
    lam0 = k0 = k1 = s1 = m1 = nan
    if low.size:
        w = fit_params(_weibull_floor(low, floor), "weibull")
        lam0, k0 = w.params["lam"], w.params["k"]
    if high.size:
        g = fit_params(d_max - high, "gev")
        k1, s1, m1 = g.params["k"], g.params["sigma"], g.params["mu"]
    start = LengthMixture(pi0, lam0, k0, k1, s1, m1, d_max)
    if not (refine and low.size and high.size):
        return start
    return _refine(start, _weibull_floor(x, floor))


def _refine(start: LengthMixture, x: np.ndarray) -> LengthMixture:
    d_max = start.d_max
    y = d_max - x
    lx = np.log(x)
    n = x.size
    # scales for a well-conditioned search space
    sy = start.sigma1

    def unpack(th):
        p0 = special.expit(th[0])
        return p0, math.exp(th[1]), math.exp(th[2]), th[3], sy * math.exp(th[4]), sy * th[5]

    def nll(th):
        p0, lam, k0, k1, s1, m1 = unpack(th)
        if not (0 < p0 < 1) or abs(k1) > 50:
            return np.inf
        z = lx - math.log(lam)
        lw = math.log(k0 / lam) + (k0 - 1.0) * z - np.exp(k0 * z)
        lg = gev_logpdf(y, k1, s1, m1)
        ll = np.logaddexp(math.log(p0) + lw, math.log1p(-p0) + lg)
        # truncation to [0, d_max]
        Wd = -math.expm1(-((d_max / lam) ** k0))
        G = stats.genextreme(-k1, loc=m1, scale=s1)
        Z = p0 * Wd + (1 - p0) * (G.cdf(d_max) - G.cdf(0.0))
        if not Z > 0:
            return np.inf
        return -(float(np.sum(ll)) / n - math.log(Z))

    th0 = np.array([
        special.logit(min(max(start.pi0, 1e-6), 1 - 1e-6)),
        math.log(start.lam0),
        math.log(start.k0),
        start.k1,
        0.0,
        start.mu1 / sy,
    ])
    res = optimize.minimize(nll, th0, method="L-BFGS-B", options={"ftol": 1e-13, "gtol": 1e-9, "maxiter": 2000})
    if not np.isfinite(res.fun) or res.fun > nll(th0):
        raise ConvergenceError(f"length mixture refinement failed: {res.message}", last_iterate=res.x)
    th = res.x
    if not res.success:
        # polish from where the quasi-Newton search stopped
        res2 = optimize.minimize(nll, th, method="Nelder-Mead",
                                 options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 6000})
        if res2.fun <= res.fun:
            th = res2.x
    p0, lam, k0, k1, s1, m1 = unpack(th)
    return LengthMixture(float(p0), float(lam), float(k0), float(k1), float(s1), float(m1), d_max)
