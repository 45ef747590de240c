"""Candidate distribution catalog and maximum-likelihood fitting.

Every family is mapped onto a :mod:`scipy.stats` distribution for density,
CDF and sampling, with parameters named the way they are usually quoted:

=================== ======================= =======================================
family              parameters              scipy mapping
=================== ======================= =======================================
beta                a, b                    beta(a, b)
birnbaum-saunders   beta (scale), gamma     fatiguelife(gamma, scale=beta)
exponential         rate                    expon(scale=1/rate)
gamma               a (shape), b (scale)    gamma(a, scale=b)
gev                 k, sigma, mu            genextreme(-k, loc=mu, scale=sigma)
gumbel              mu, sigma               gumbel_r(loc=mu, scale=sigma)
inverse-gaussian    mu, lam                 invgauss(mu/lam, scale=lam)
logistic            mu, sigma               logistic(loc=mu, scale=sigma)
log-logistic        mu, sigma (of log x)    fisk(1/sigma, scale=exp(mu))
log-normal          mu, sigma (of log x)    lognorm(sigma, scale=exp(mu))
nakagami            m, omega                nakagami(m, scale=sqrt(omega))
normal              mu, sigma               norm(loc=mu, scale=sigma)
poisson             lam                     poisson(lam)
rayleigh            b                       rayleigh(scale=b)
rician              s, sigma                rice(s/sigma, scale=sigma)
t-location-scale    mu, sigma, nu           t(nu, loc=mu, scale=sigma)
weibull             lam (scale), k (shape)  weibull_min(k, scale=lam)
=================== ======================= =======================================

The GEV shape ``k`` follows the extreme-value convention: ``k > 0`` has a
heavy upper tail, ``k < 0`` a finite upper endpoint ``mu + sigma/|k|``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from scipy import optimize, special, stats

from ..errors import ConvergenceError, DegenerateSampleError, DomainError

CATALOG = (
    "beta",
    "birnbaum-saunders",
    "exponential",
    "gamma",
    "gev",
    "gumbel",
    "inverse-gaussian",
    "logistic",
    "log-logistic",
    "log-normal",
    "nakagami",
    "normal",
    "poisson",
    "rayleigh",
    "rician",
    "t-location-scale",
    "weibull",
)

#: Simplex tolerance (parameters and mean negative log-likelihood).
SIMPLEX_TOL = 1e-10
#: Largest t degrees of freedom; beyond it the law is normal to round-off.
T_NU_MAX = 1e7


@dataclass(frozen=True)
class _Family:
    params: tuple[str, ...]
    scipy: Callable[[Mapping[str, float]], object]
    support: str  # "real", "nonneg", "pos", "unit", "count"
    positive: tuple[str, ...]  # parameters that must be > 0
    discrete: bool = False


_FAMILIES: dict[str, _Family] = {
    "beta": _Family(("a", "b"), lambda p: stats.beta(p["a"], p["b"]), "unit", ("a", "b")),
    "birnbaum-saunders": _Family(
        ("beta", "gamma"), lambda p: stats.fatiguelife(p["gamma"], scale=p["beta"]), "pos", ("beta", "gamma")
    ),
    "exponential": _Family(("rate",), lambda p: stats.expon(scale=1.0 / p["rate"]), "nonneg", ("rate",)),
    "gamma": _Family(("a", "b"), lambda p: stats.gamma(p["a"], scale=p["b"]), "pos", ("a", "b")),
    "gev": _Family(
        ("k", "sigma", "mu"), lambda p: stats.genextreme(-p["k"], loc=p["mu"], scale=p["sigma"]), "real", ("sigma",)
    ),
    "gumbel": _Family(("mu", "sigma"), lambda p: stats.gumbel_r(loc=p["mu"], scale=p["sigma"]), "real", ("sigma",)),
    "inverse-gaussian": _Family(
        ("mu", "lam"), lambda p: stats.invgauss(p["mu"] / p["lam"], scale=p["lam"]), "pos", ("mu", "lam")
    ),
    "logistic": _Family(("mu", "sigma"), lambda p: stats.logistic(loc=p["mu"], scale=p["sigma"]), "real", ("sigma",)),
    "log-logistic": _Family(
        ("mu", "sigma"), lambda p: stats.fisk(1.0 / p["sigma"], scale=math.exp(p["mu"])), "pos", ("sigma",)
    ),
    "log-normal": _Family(
        ("mu", "sigma"), lambda p: stats.lognorm(p["sigma"], scale=math.exp(p["mu"])), "pos", ("sigma",)
    ),
    "nakagami": _Family(
        ("m", "omega"), lambda p: stats.nakagami(p["m"], scale=math.sqrt(p["omega"])), "pos", ("m", "omega")
    ),
    "normal": _Family(("mu", "sigma"), lambda p: stats.norm(loc=p["mu"], scale=p["sigma"]), "real", ("sigma",)),
    "poisson": _Family(("lam",), lambda p: stats.poisson(p["lam"]), "count", ("lam",), discrete=True),
    "rayleigh": _Family(("b",), lambda p: stats.rayleigh(scale=p["b"]), "pos", ("b",)),
    "rician": _Family(("s", "sigma"), lambda p: stats.rice(p["s"] / p["sigma"], scale=p["sigma"]), "pos", ("sigma",)),
    "t-location-scale": _Family(
        ("mu", "sigma", "nu"), lambda p: stats.t(p["nu"], loc=p["mu"], scale=p["sigma"]), "real", ("sigma", "nu")
    ),
    "weibull": _Family(("lam", "k"), lambda p: stats.weibull_min(p["k"], scale=p["lam"]), "pos", ("lam", "k")),
}
assert tuple(sorted(_FAMILIES)) == tuple(sorted(CATALOG))


@dataclass(frozen=True)
class DistributionSpec:
    """A member of the catalog with concrete parameters."""

    family: str
    params: Mapping[str, float]

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown distribution family {self.family!r}")
        fam = _FAMILIES[self.family]
        if set(self.params) != set(fam.params):
            raise ValueError(f"{self.family} expects parameters {fam.params}, got {tuple(self.params)}")
        p = {k: float(self.params[k]) for k in fam.params}
        for k, v in p.items():
            if not math.isfinite(v):
                raise ValueError(f"{self.family}: parameter {k} must be finite")
        for k in fam.positive:
            if not p[k] > 0:
                raise ValueError(f"{self.family}: parameter {k} must be > 0, got {p[k]!r}")
        if self.family == "rician" and p["s"] < 0:
            raise ValueError("rician: s must be >= 0")
        object.__setattr__(self, "params", MappingProxyType(p))

    def __hash__(self):
        return hash((self.family, tuple(self.params.items())))

    def __eq__(self, other):
        return (
            isinstance(other, DistributionSpec)
            and self.family == other.family
            and dict(self.params) == dict(other.params)
        )

    @property
    def discrete(self) -> bool:
        return _FAMILIES[self.family].discrete

    def frozen(self):
        # building a frozen scipy distribution is slow; keep one per spec
        d = self.__dict__.get("_frozen")
        if d is None:
            d = _FAMILIES[self.family].scipy(self.params)
            object.__setattr__(self, "_frozen", d)
        return d

    def pdf(self, x):
        d = self.frozen()
        return d.pmf(x) if self.discrete else d.pdf(x)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "gev":
            return gev_logpdf(x, **self.params)
        d = self.frozen()
        return d.logpmf(x) if self.discrete else d.logpdf(x)

    def cdf(self, x):
        return self.frozen().cdf(x)

    def logcdf(self, x):
        return self.frozen().logcdf(x)

    def logsf(self, x):
        return self.frozen().logsf(x)

    def ppf(self, q):
        return self.frozen().ppf(q)

    def rvs(self, size, rng) -> np.ndarray:
        return np.asarray(self.frozen().rvs(size=size, random_state=rng), dtype=float)

    def mean(self) -> float:
        return float(self.frozen().mean())

    def std(self) -> float:
        return float(self.frozen().std())

    def loglik(self, x) -> float:
        return float(np.sum(self.logpdf(x)))


@dataclass(frozen=True)
class DistributionFit:
    """Fitted distribution with its goodness-of-fit record."""

    spec: DistributionSpec
    log_likelihood: float
    sample_count: int
    ad_statistic: float = float("nan")
    p_value: float | None = None
    notes: tuple[str, ...] = field(default=())

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def params(self) -> Mapping[str, float]:
        return self.spec.params


# ---------------------------------------------------------------- helpers


def population_moments(samples) -> tuple[float, float]:
    """Sample mean and unbiased (n-1) standard deviation."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 2:
        raise DegenerateSampleError("need at least two samples")
    return float(np.mean(x)), float(np.std(x, ddof=1))


def gev_mean(k: float, sigma: float, mu: float) -> float:
    """Closed-form GEV mean; infinite for ``k >= 1``."""
    if k >= 1:
        return math.inf
    if abs(k) < 1e-12:
        return mu + sigma * np.euler_gamma
    return mu + sigma * (math.gamma(1.0 - k) - 1.0) / k


def gev_logpdf(x, k: float, sigma: float, mu: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = (x - mu) / sigma
    if abs(k) < 1e-12:
        return -math.log(sigma) - y - np.exp(-y)
    t = 1.0 + k * y
    out = np.full(x.shape, -np.inf)
    ok = t > 0
    lt = np.log(t[ok])
    out[ok] = -math.log(sigma) - (1.0 + 1.0 / k) * lt - np.exp(-lt / k)
    return out


def check_domain(x: np.ndarray, family: str) -> None:
    """Raise :class:`DomainError` if ``x`` falls outside the family's support."""
    sup = _FAMILIES[family].support
    bad = {
        "real": lambda v: np.zeros(v.shape, bool),
        "nonneg": lambda v: v < 0,
        "pos": lambda v: v <= 0,
        "unit": lambda v: (v <= 0) | (v >= 1),
        "count": lambda v: v < 0,
    }[sup](x)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DomainError(f"{family}: sample {x[i]!r} at index {i} is outside the support")


def _prepare(samples, family: str) -> np.ndarray:
    if family not in _FAMILIES:
        raise ValueError(f"unknown distribution family {family!r}")
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 2:
        raise DegenerateSampleError("need at least two samples")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    if np.ptp(x) == 0:
        raise DomainError(f"{family}: all samples are identical; no fit")
    check_domain(x, family)
    return x


def _simplex(nll, x0, tol=SIMPLEX_TOL, what=""):
    x0 = np.asarray(x0, dtype=float)
    res = optimize.minimize(
        nll,
        x0,
        method="Nelder-Mead",
        options={"xatol": tol, "fatol": tol, "maxiter": 4000 * x0.size, "maxfev": 8000 * x0.size},
    )
    if not res.success:
        fs = res.final_simplex[1]
        # stalled at round-off: accept
        if not (np.isfinite(fs).all() and np.ptp(fs) <= 1e-12 * max(1.0, abs(fs[0]))):
            raise ConvergenceError(f"{what}: simplex did not converge ({res.message})", last_iterate=res.x)
    return res.x


def _coarse_simplex(nll, x0, tol=1e-3, maxiter=400):
    """Cheap basin finder ahead of a Newton polish; never raises."""
    res = optimize.minimize(nll, np.asarray(x0, float), method="Nelder-Mead",
                            options={"xatol": tol, "fatol": tol * 1e-3, "maxiter": maxiter})
    return res.x if np.isfinite(res.fun) else np.asarray(x0, float)


def _newton(fun, theta0, max_iter=100, tol=1e-10, what=""):
    """Damped Newton ascent on a mean log-likelihood.

    ``fun(theta)`` returns ``(value, gradient)``; ``value`` is ``-inf``
    outside the parameter domain. The Hessian comes from central
    differences of the analytic gradient.
    """
    th = np.asarray(theta0, dtype=float).copy()
    f, g = fun(th)
    if not np.isfinite(f):
        raise ConvergenceError(f"{what}: infeasible starting point", last_iterate=th)
    n = th.size
    for it in range(max_iter):
        H = np.empty((n, n))
        for j in range(n):
            h = 1e-5 * max(1.0, abs(th[j]))
            e = np.zeros(n)
            e[j] = h
            fp, gp = fun(th + e)
            fm, gm = fun(th - e)
            if np.isfinite(fp) and np.isfinite(fm):
                H[:, j] = (gp - gm) / (2 * h)
            elif np.isfinite(fp):
                H[:, j] = (gp - g) / h
            elif np.isfinite(fm):
                H[:, j] = (g - gm) / h
            else:
                raise ConvergenceError(f"{what}: optimum on the support boundary", last_iterate=th, iterations=it)
        H = 0.5 * (H + H.T)
        w, V = np.linalg.eigh(-H)
        # ascent direction from the positive-definite part of -H
        w = np.maximum(w, 1e-8 * max(1.0, np.max(np.abs(w))))
        step = V @ ((V.T @ g) / w)
        t = 1.0
        while True:
            cand = th + t * step
            fc, gc = fun(cand)
            if np.isfinite(fc) and fc >= f - 1e-15 * abs(f):
                break
            t *= 0.5
            if t < 1e-12:
                if np.max(np.abs(g)) < 1e-6:
                    return th
                raise ConvergenceError(f"{what}: line search failed", last_iterate=th, iterations=it)
        th, f_old, f, g = cand, f, fc, gc
        if np.max(np.abs(t * step)) <= tol * max(1.0, np.max(np.abs(th))) or (abs(f - f_old) <= 1e-15 and np.max(np.abs(g)) < 1e-9):
            return th
    if np.max(np.abs(g)) < 1e-6:
        return th
    raise ConvergenceError(f"{what}: Newton iteration did not converge", last_iterate=th, iterations=max_iter)


def _robust_center_scale(x):
    med = float(np.median(x))
    q1, q3 = np.percentile(x, [25, 75])
    s = float(q3 - q1)
    if s <= 0:
        s = float(np.std(x)) or 1.0
    return med, s


# ---------------------------------------------------------------- family fits


def _fit_normal(x, init=None):
    mu = float(np.mean(x))
    return {"mu": mu, "sigma": float(np.sqrt(np.mean((x - mu) ** 2)))}


def _fit_lognormal(x, init=None):
    p = _fit_normal(np.log(x))
    return p


def _fit_exponential(x, init=None):
    m = float(np.mean(x))
    if not m > 0:
        raise DomainError("exponential: sample mean must be positive")
    return {"rate": 1.0 / m}


def _fit_rayleigh(x, init=None):
    return {"b": float(np.sqrt(np.mean(x * x) / 2.0))}


def _fit_poisson(x, init=None):
    r = np.rint(x)
    if np.any(r != x):
        warnings.warn("poisson: non-integer samples rounded to the nearest integer", UserWarning, stacklevel=3)
    lam = float(np.mean(r))
    if not lam > 0:
        raise DomainError("poisson: rounded samples are all zero")
    return {"lam": lam}


def _fit_invgauss(x, init=None):
    mu = float(np.mean(x))
    inv = float(np.mean(1.0 / x - 1.0 / mu))
    if not inv > 0:
        raise DomainError("inverse-gaussian: degenerate sample")
    return {"mu": mu, "lam": 1.0 / inv}


def _solve_gamma_shape(s: float) -> float:
    """Root of ``log(a) - digamma(a) = s`` for ``s > 0``."""
    if not s > 0:
        raise DomainError("gamma-type fit needs a positive log-mean gap")
    a0 = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    f = lambda a: math.log(a) - special.digamma(a) - s  # noqa: E731
    lo, hi = a0 / 2.0, a0 * 2.0
    while f(lo) < 0:
        lo /= 2.0
    while f(hi) > 0:
        hi *= 2.0
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)


def _fit_gamma(x, init=None):
    m = float(np.mean(x))
    a = _solve_gamma_shape(math.log(m) - float(np.mean(np.log(x))))
    return {"a": a, "b": m / a}


def _fit_nakagami(x, init=None):
    y = x * x
    omega = float(np.mean(y))
    m = _solve_gamma_shape(math.log(omega) - float(np.mean(np.log(y))))
    return {"m": m, "omega": omega}


def _fit_weibull(x, init=None):
    lx = np.log(x)
    lmax = lx.max()
    mlx = float(np.mean(lx))

    def f(k):
        w = np.exp(k * (lx - lmax))
        return float(w @ lx / w.sum()) - 1.0 / k - mlx

    lo, hi = 0.5, 2.0
    while f(lo) > 0:
        lo /= 2.0
        if lo < 1e-8:
            raise ConvergenceError("weibull: shape root not bracketed")
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e8:
            raise ConvergenceError("weibull: shape root not bracketed")
    k = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    lam = math.exp(lmax) * float(np.mean(np.exp(k * (lx - lmax)))) ** (1.0 / k)
    return {"lam": lam, "k": k}


def _fit_gumbel(x, init=None):
    c, s = _robust_center_scale(x)
    z = (x - c) / s
    mz = float(np.mean(z))

    def f(sig):
        e = -z / sig
        w = np.exp(e - e.max())
        return sig - mz + float(w @ z / w.sum())

    sd = float(np.std(z))
    lo, hi = 0.5 * sd * math.sqrt(6) / math.pi, 2.0 * sd * math.sqrt(6) / math.pi
    while f(lo) > 0:
        lo /= 2.0
        if lo < 1e-12:
            raise ConvergenceError("gumbel: scale root not bracketed")
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("gumbel: scale root not bracketed")
    sig = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-14)
    e = -z / sig
    emax = e.max()
    mu = -sig * (emax + math.log(float(np.mean(np.exp(e - emax)))))
    return {"mu": c + s * mu, "sigma": s * sig}


def _gev_mean_ll(z):
    n = z.size

    def fun(th):
        k, ls, m = th
        if not (np.isfinite(k) and np.isfinite(m) and -50.0 < ls < 50.0):
            return -np.inf, np.zeros(3)
        s = math.exp(ls)
        y = (z - m) / s
        t = 1.0 + k * y
        if k <= -1.0 or np.any(t <= 0):
            return -np.inf, np.zeros(3)
        if abs(k) < 1e-6:
            # Gumbel limit with numeric k-derivative
            f0 = float(np.mean(-ls - y - np.exp(-y)))
            u = np.exp(-y)
            dm = float(np.mean((1.0 - u) / s))
            dls = float(np.mean(-1.0 + y * (1.0 - u)))
            h = 1e-5
            fp = fun((h, ls, m))[0]
            fm = fun((-h, ls, m))[0]
            return f0, np.array([(fp - fm) / (2 * h), dls, dm])
        lt = np.log(t)
        u = np.exp(-lt / k)
        f = float(np.sum(-ls - (1.0 + 1.0 / k) * lt - u)) / n
        r = (1.0 + k - u) / t
        dm = float(np.sum(r)) / (s * n)
        dls = float(np.sum(-1.0 + r * y)) / n
        dk = float(np.sum((1.0 - u) * lt / (k * k) - r * y / k)) / n
        return f, np.array([dk, dls, dm])

    return fun


def _fit_gev(x, init=None):
    c, s = _robust_center_scale(x)
    z = (x - c) / s
    fun = _gev_mean_ll(z)
    starts = []
    if init is not None:
        starts.append((init["k"], math.log(init["sigma"] / s), (init["mu"] - c) / s))
    else:
        # Gumbel quantile match: IQR = 1.5725 sigma, median = mu - sigma ln ln 2
        sg = 1.0 / 1.5725
        m0 = sg * math.log(math.log(2.0))
        for k0 in (-0.3, 0.1, 0.5, 1.2):
            starts.append((k0, math.log(sg), m0))
    # basin search on evenly spaced order statistics, polish on everything
    zc = np.sort(z)[:: max(1, z.size // 2000)]
    coarse = _gev_mean_ll(zc)
    located = []
    for th0 in starts:
        th0 = np.array(th0, dtype=float)
        if not np.isfinite(fun(th0)[0]):
            # widen the scale until every sample is inside the support
            k0, m0 = th0[0], th0[2]
            reach = (m0 - z.min()) if k0 > 0 else (z.max() - m0)
            th0[1] = max(th0[1], math.log(max(1.1 * abs(k0) * reach, 1e-6)))
            if not np.isfinite(fun(th0)[0]):
                continue
        if init is None:
            th1 = _coarse_simplex(lambda th: -coarse(th)[0], th0)
            # the subsample may miss the extremes that bound the support
            if np.isfinite(fun(th1)[0]):
                th0 = th1
        located.append((fun(th0)[0], tuple(th0)))
    # polish the most promising basin first; others only if it fails
    best = None
    for _, th0 in sorted(set(located), reverse=True):
        try:
            th = _newton(fun, th0, what="gev")
        except ConvergenceError:
            continue
        best = (fun(th)[0], th)
        break
    if best is None:
        raise ConvergenceError("gev: no start converged")
    k, ls, m = best[1]
    return {"k": float(k), "sigma": float(s * math.exp(ls)), "mu": float(c + s * m)}


def _logistic_mean_ll(z):
    n = z.size

    def fun(th):
        m, ls = th
        if not (np.isfinite(m) and -50.0 < ls < 50.0):
            return -np.inf, np.zeros(2)
        s = math.exp(ls)
        y = (z - m) / s
        f = float(np.sum(-ls - y - 2.0 * np.logaddexp(0.0, -y))) / n
        th_ = np.tanh(y / 2.0)
        return f, np.array([float(np.sum(th_)) / (s * n), float(np.sum(-1.0 + y * th_)) / n])

    return fun


def _fit_logistic(x, init=None):
    c, s = _robust_center_scale(x)
    z = (x - c) / s
    th0 = (0.0, math.log(0.5 / math.log(3.0))) if init is None else ((init["mu"] - c) / s, math.log(init["sigma"] / s))
    m, ls = _newton(_logistic_mean_ll(z), th0, what="logistic")
    return {"mu": float(c + s * m), "sigma": float(s * math.exp(ls))}


def _fit_loglogistic(x, init=None):
    return _fit_logistic(np.log(x), init)


def _t_log_ratio(a: float) -> float:
    """``log Gamma(a + 1/2) - log Gamma(a) - log(a) / 2``.

    For large ``a`` the gammaln difference cancels to ~1e-9 noise, which
    stalls the simplex near the normal limit; the asymptotic series is smooth.
    """
    if a < 20.0:
        return float(special.gammaln(a + 0.5) - special.gammaln(a) - 0.5 * math.log(a))
    return -1.0 / (8 * a) + 1.0 / (192 * a**3) - 1.0 / (640 * a**5)


def _fit_t(x, init=None):
    c, s = _robust_center_scale(x)
    z = (x - c) / s
    n = z.size

    def nll(th):
        m, ls, lnu = th
        if lnu < math.log(1e-3):
            return np.inf
        # flat beyond the upper bound so light-tailed data converge onto it
        nu = math.exp(min(lnu, math.log(T_NU_MAX)))
        q = ((z - m) / math.exp(ls)) ** 2
        c = _t_log_ratio(nu / 2) - 0.5 * math.log(2 * math.pi) - ls
        return -(c - (nu + 1) / 2 * float(np.sum(np.log1p(q / nu))) / n)

    th0 = (0.0, math.log(0.5 / 0.6745), math.log(5.0)) if init is None else (
        (init["mu"] - c) / s, math.log(init["sigma"] / s), math.log(min(init["nu"], T_NU_MAX))
    )
    m, ls, lnu = _simplex(nll, th0, what="t-location-scale")
    return {"mu": float(c + s * m), "sigma": float(s * math.exp(ls)), "nu": float(math.exp(min(lnu, math.log(T_NU_MAX))))}


def _fit_beta(x, init=None):
    n = x.size
    lx, l1x = np.log(x), np.log1p(-x)
    sl, sl1 = float(lx.sum()), float(l1x.sum())

    def nll(th):
        a, b = np.exp(th)
        return -((a - 1) * sl + (b - 1) * sl1 - n * special.betaln(a, b)) / n

    if init is None:
        m, v = float(np.mean(x)), float(np.var(x))
        c = m * (1 - m) / v - 1.0 if v > 0 else 1.0
        c = max(c, 1e-3)
        th0 = (math.log(m * c), math.log((1 - m) * c))
    else:
        th0 = (math.log(init["a"]), math.log(init["b"]))
    a, b = np.exp(_simplex(nll, th0, what="beta"))
    return {"a": float(a), "b": float(b)}


def _fit_bs(x, init=None):
    n = x.size
    scale = float(np.median(x))
    y = x / scale

    ly = np.log(y)

    def nll(th):
        lb, lg = th
        be, ga = math.exp(lb), math.exp(lg)
        r = np.sqrt(y / be)
        u = (r - 1.0 / r) / ga
        # log of (r + 1/r) / (2 gamma y) * phi(u)
        ll = np.log(r + 1.0 / r) - math.log(2.0) - lg - ly - 0.5 * u * u - 0.5 * math.log(2 * math.pi)
        return -float(np.sum(ll)) / n

    if init is None:
        sm, rm = float(np.mean(y)), 1.0 / float(np.mean(1.0 / y))
        be0 = math.sqrt(sm * rm)
        ga0 = math.sqrt(max(2.0 * (math.sqrt(sm / rm) - 1.0), 1e-6))
        th0 = (math.log(be0), math.log(ga0))
    else:
        th0 = (math.log(init["beta"] / scale), math.log(init["gamma"]))
    be, ga = np.exp(_simplex(nll, th0, what="birnbaum-saunders"))
    return {"beta": float(be * scale), "gamma": float(ga)}


def _fit_rician(x, init=None):
    n = x.size
    scale = float(np.sqrt(np.mean(x * x)))
    y = x / scale

    ly = np.log(y)
    y2 = float(np.mean(y * y))

    def nll(th):
        u, ls = th
        s_ = abs(u)
        v = math.exp(2 * ls)
        z = y * (s_ / v)
        # log I0(z) = log(i0e(z)) + z
        ll = float(np.mean(ly + np.log(special.i0e(z)) + z)) - 2 * ls - (y2 + s_ * s_) / (2 * v)
        return -ll

    if init is None:
        m2, m4 = float(np.mean(y**2)), float(np.mean(y**4))
        s4 = 2.0 * m2 * m2 - m4
        s0 = s4**0.25 if s4 > 0 else 0.5 * math.sqrt(m2)
        sg0 = math.sqrt(max((m2 - s0 * s0) / 2.0, 1e-4))
        th0 = (s0, math.log(sg0))
    else:
        th0 = (init["s"] / scale, math.log(init["sigma"] / scale))
    u, ls = _simplex(nll, th0, what="rician")
    return {"s": float(abs(u) * scale), "sigma": float(math.exp(ls) * scale)}


_FITTERS = {
    "beta": _fit_beta,
    "birnbaum-saunders": _fit_bs,
    "exponential": _fit_exponential,
    "gamma": _fit_gamma,
    "gev": _fit_gev,
    "gumbel": _fit_gumbel,
    "inverse-gaussian": _fit_invgauss,
    "logistic": _fit_logistic,
    "log-logistic": _fit_loglogistic,
    "log-normal": _fit_lognormal,
    "nakagami": _fit_nakagami,
    "normal": _fit_normal,
    "poisson": _fit_poisson,
    "rayleigh": _fit_rayleigh,
    "rician": _fit_rician,
    "t-location-scale": _fit_t,
    "weibull": _fit_weibull,
}

CLOSED_FORM = frozenset({"normal", "log-normal", "exponential", "rayleigh", "poisson", "inverse-gaussian"})


def fit_params(samples, family: str, init: Mapping[str, float] | None = None) -> DistributionSpec:
    """Maximum-likelihood parameters of ``family`` for ``samples``.

    ``init`` optionally seeds the iterative fitters (ignored by closed forms).
    """
    x = _prepare(samples, family)
    p = _FITTERS[family](x, init)
    try:
        return DistributionSpec(family, p)
    except ValueError as exc:
        raise ConvergenceError(f"{family}: fit produced invalid parameters {p}") from exc


def mle_fit(samples, family: str, init: Mapping[str, float] | None = None) -> DistributionFit:
    """Fit ``family`` by maximum likelihood and attach the AD statistic.

    The p-value is left empty; see :func:`mpmfit.stats.goodness.anderson_darling`.
    """
    from .goodness import ad_statistic

    x = np.asarray(samples, dtype=float).reshape(-1)
    spec = fit_params(x, family, init)
    xs = np.rint(x) if family == "poisson" else x
    ll = spec.loglik(xs)
    return DistributionFit(spec, ll, int(x.size), ad_statistic(xs, spec))
