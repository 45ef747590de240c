"""Anderson-Darling goodness of fit and catalog selection.

With parameters estimated from the same data the A^2 statistic has no
family-independent null distribution, so p-values come from a parametric
bootstrap: draw from the fitted model, refit, recompute A^2. Each replicate
draws from its own seeded substream, so the result does not depend on the
order in which replicates run.

Candidates whose statistic is far out in the tail of the known-parameter
asymptotic distribution (p below ``screen``) skip the simulation and get the
smallest attainable bootstrap p-value, ``1 / (B + 1)``. Estimating
parameters only shrinks A^2, so the bootstrap would not have produced a
larger value either.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DataError, MpmError, NumericalError
from .distributions import CATALOG, DistributionFit, DistributionSpec, check_domain, fit_params, mle_fit

DEFAULT_BOOTSTRAP = 999
DEFAULT_ALPHA = 0.05
DEFAULT_SCREEN = 1e-6
_LOG_TINY = math.log(np.finfo(float).tiny)


def ad_statistic(samples, spec: DistributionSpec) -> float:
    """A^2 of ``samples`` against a fully specified distribution."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    if n < 1:
        raise DataError("no samples")
    lF = np.maximum(spec.logcdf(x), _LOG_TINY)
    lS = np.maximum(spec.logsf(x), _LOG_TINY)
    i = np.arange(1, n + 1)
    return float(-n - np.sum((2 * i - 1) * (lF + lS[::-1])) / n)


def _ad_batch(X: np.ndarray, logcdf, logsf) -> np.ndarray:
    X = np.sort(X, axis=1)
    n = X.shape[1]
    lF = np.maximum(logcdf(X), _LOG_TINY)
    lS = np.maximum(logsf(X), _LOG_TINY)
    w = 2 * np.arange(1, n + 1) - 1
    return -n - ((lF + lS[:, ::-1]) @ w) / n


def ad_asymptotic_pvalue(a2: float) -> float:
    """Upper-tail probability of the limiting A^2 law with known parameters.

    Marsaglia & Marsaglia's approximation of the limiting distribution.
    """
    z = float(a2)
    if z <= 0:
        return 1.0
    if z < 2.0:
        cdf = math.exp(-1.2337141 / z) / math.sqrt(z) * (
            2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z
        )
        return float(min(max(1.0 - cdf, 0.0), 1.0))
    e = math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)
    return float(-math.expm1(-e))


def _stream(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _bootstrap_closed_form(spec: DistributionSpec, n: int, B: int, seed: int, fam_key: int) -> np.ndarray:
    fam = spec.family
    X = np.stack([spec.rvs(n, _stream(seed, (fam_key, b))) for b in range(B)])
    if fam == "normal":
        mu = X.mean(axis=1, keepdims=True)
        sg = np.sqrt(np.mean((X - mu) ** 2, axis=1, keepdims=True))
        from scipy.special import log_ndtr

        return _ad_batch(X, lambda v: log_ndtr((v - mu) / sg), lambda v: log_ndtr(-(v - mu) / sg))
    if fam == "log-normal":
        from scipy.special import log_ndtr

        L = np.log(X)
        mu = L.mean(axis=1, keepdims=True)
        sg = np.sqrt(np.mean((L - mu) ** 2, axis=1, keepdims=True))
        return _ad_batch(L, lambda v: log_ndtr((v - mu) / sg), lambda v: log_ndtr(-(v - mu) / sg))
    if fam == "exponential":
        rate = 1.0 / X.mean(axis=1, keepdims=True)
        return _ad_batch(X, lambda v: np.log(-np.expm1(-rate * v)), lambda v: -rate * v)
    if fam == "rayleigh":
        b2 = np.mean(X * X, axis=1, keepdims=True) / 2.0
        return _ad_batch(X, lambda v: np.log(-np.expm1(-v * v / (2 * b2))), lambda v: -v * v / (2 * b2))
    raise KeyError(fam)


_VECTORIZED = frozenset({"normal", "log-normal", "exponential", "rayleigh"})


def bootstrap_pvalue(
    samples,
    fit: DistributionFit,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    max_failures: float = 0.1,
) -> float | None:
    """Parametric-bootstrap p-value of ``fit``'s A^2; ``None`` when too many refits fail."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    spec = fit.spec
    n = x.size
    fam_key = CATALOG.index(spec.family)
    a2 = fit.ad_statistic
    if spec.family in _VECTORIZED:
        stats_ = _bootstrap_closed_form(spec, n, n_boot, seed, fam_key)
        ok = np.isfinite(stats_)
        return float((1 + np.sum(stats_[ok] >= a2)) / (ok.sum() + 1))
    exceed = 0
    done = 0
    failed = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for b in range(n_boot):
            xb = spec.rvs(n, _stream(seed, (fam_key, b)))
            try:
                sb = fit_params(xb, spec.family, init=spec.params)
            except MpmError:
                failed += 1
                if failed > max_failures * n_boot:
                    return None
                continue
            xb = np.rint(xb) if spec.family == "poisson" else xb
            if ad_statistic(xb, sb) >= a2:
                exceed += 1
            done += 1
    return float((1 + exceed) / (done + 1))


def anderson_darling(
    samples,
    fit: DistributionFit | DistributionSpec,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    screen: float | None = DEFAULT_SCREEN,
) -> tuple[float, float | None]:
    """A^2 statistic and p-value.

    For a :class:`DistributionFit` (parameters estimated from ``samples``) the
    p-value is bootstrapped. For a bare :class:`DistributionSpec`
    (parameters known in advance) the limiting distribution is used.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if isinstance(fit, DistributionSpec):
        check_domain(x, fit.family)
        a2 = ad_statistic(x, fit)
        return a2, ad_asymptotic_pvalue(a2)
    xs = np.rint(x) if fit.family == "poisson" else x
    a2 = ad_statistic(xs, fit.spec)
    if not np.isfinite(a2):
        return a2, None
    if screen is not None and ad_asymptotic_pvalue(a2) < screen:
        return a2, 1.0 / (n_boot + 1)
    try:
        p = bootstrap_pvalue(x, replace(fit, ad_statistic=a2), n_boot, seed)
    except NumericalError:
        p = None
    return a2, p


@dataclass(frozen=True)
class Selection:
    best: DistributionFit
    candidates: dict[str, DistributionFit]
    excluded: dict[str, str] = field(default_factory=dict)
    rule: str = "p-value"


def choose(fits: list[DistributionFit], alpha: float = DEFAULT_ALPHA) -> tuple[DistributionFit, str]:
    """Apply the selection rule to fitted candidates.

    The highest p-value wins; ties at the top go to the higher
    log-likelihood. If every p-value is missing, below ``alpha``, or equal,
    the highest log-likelihood wins outright.
    """
    if not fits:
        raise DataError("no candidate distribution could be fitted")
    ps = [f.p_value for f in fits if f.p_value is not None]
    by_ll = max(fits, key=lambda f: f.log_likelihood)
    if not ps or max(ps) < alpha or (len(ps) == len(fits) and len(set(ps)) == 1 and len(fits) > 1):
        return by_ll, "log-likelihood"
    top = max(ps)
    tied = [f for f in fits if f.p_value == top]
    return max(tied, key=lambda f: f.log_likelihood), "p-value"


def select_distribution(
    samples,
    families=CATALOG,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    screen: float | None = DEFAULT_SCREEN,
) -> Selection:
    """Fit every compatible family, test each, and pick one.

    Families whose support excludes the data, or whose fit fails, are
    listed in ``excluded`` with the reason. Poisson rounds non-integer data
    to the nearest integer and warns.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    fits: dict[str, DistributionFit] = {}
    excluded: dict[str, str] = {}
    for fam in families:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                f = mle_fit(x, fam)
        except MpmError as exc:
            excluded[fam] = str(exc)
            continue
        a2, p = anderson_darling(x, f, n_boot=n_boot, seed=seed, screen=screen)
        fits[fam] = replace(f, ad_statistic=a2, p_value=p)
    best, rule = choose(list(fits.values()), alpha)
    return Selection(best, fits, excluded, rule)
