"""Random multipath parameter sets and channels.

A channel is drawn in the order path count, attenuation and scale, lengths,
gains:

1. ``N`` from its distribution, rounded and restricted to
   ``[1, min(N_lattice, max_paths)]`` by inverse-CDF truncation;
2. ``a0``, ``a1`` and ``A`` independently;
3. ``N`` distinct lattice cells, without replacement, weighted by the
   length mixture's mass on each cell;
4. ``|g|`` from the gain mixture, an independent random sign, and a
   division by the largest magnitude so that ``max|g| = 1``.

Every distribution slot also accepts a plain number, which pins that
parameter. Channel ``i`` of a corpus draws from its own stream
``SeedSequence(seed, spawn_key=(i,))``, so corpus contents do not depend
on how the work is split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .channel import ChannelRecord
from .decimation import MpmParameterSet
from .errors import DegenerateSampleError, GenerationError
from .grid import FrequencyGrid, PathLattice, lattice_for
from .stats.distributions import DistributionSpec
from .stats.mixtures import GainMixture, LengthMixture
from .synth import synthesize

# Marginals fitted to the measured 1-80 MHz indoor corpus.
DEFAULT_A0 = DistributionSpec("gev", {"k": -0.2744, "sigma": 4.9492e-4, "mu": 9.337e-4})
DEFAULT_A1 = DistributionSpec("gev", {"k": -0.1781, "sigma": 3.898e-12, "mu": 4.4536e-12})
DEFAULT_A = DistributionSpec("log-logistic", {"mu": -3.8584, "sigma": 0.671})
DEFAULT_N = DistributionSpec("gev", {"k": 0.1641, "sigma": 84.3237, "mu": 153.5548})
DEFAULT_GAINS = GainMixture(pi1=4.6017e-3, mu=-2.9139, sigma=1.5445)
DEFAULT_LENGTH_PARAMS = {"pi0": 0.95074, "lam0": 218.94, "k0": 1.2314, "k1": 1.3432, "sigma1": 42.5933, "mu1": 27.4299}

Scalar = Union[DistributionSpec, float]


def default_length_mixture(lattice: PathLattice) -> LengthMixture:
    return LengthMixture(d_max=lattice.d_last, **DEFAULT_LENGTH_PARAMS)


@dataclass(frozen=True)
class GeneratorConfig:
    """Distributions and options for :func:`sample_parameter_set`.

    ``lengths`` is a :class:`LengthMixture` (``None`` selects the default
    mixture on ``grid``'s lattice) or a fixed sequence of lengths, which
    are snapped to the lattice and override ``N``.
    """

    a0: Scalar = DEFAULT_A0
    a1: Scalar = DEFAULT_A1
    A: Scalar = DEFAULT_A
    N: Scalar = DEFAULT_N
    gains: GainMixture = DEFAULT_GAINS
    lengths: LengthMixture | Sequence[float] | None = None
    seed: int = 0
    grid: FrequencyGrid = field(default_factory=FrequencyGrid.reference)
    sign_flip_probability: float = 0.5
    max_paths: int | None = None
    min_abs_gain: float = 0.0
    fold_into_A: bool = False

    def __post_init__(self):
        for name in ("a0", "a1", "A", "N"):
            v = getattr(self, name)
            if not isinstance(v, DistributionSpec):
                v = float(v)
                if not math.isfinite(v):
                    raise ValueError(f"{name} must be finite")
                object.__setattr__(self, name, v)
        if isinstance(self.A, float) and not self.A > 0:
            raise ValueError("A must be > 0")
        if isinstance(self.N, float) and (self.N < 1 or self.N != round(self.N)):
            raise ValueError("a fixed N must be a positive integer")
        if not 0.0 <= self.sign_flip_probability <= 1.0:
            raise ValueError("sign_flip_probability must lie in [0, 1]")
        if self.max_paths is not None and self.max_paths < 1:
            raise ValueError("max_paths must be >= 1")
        if not 0.0 <= self.min_abs_gain < 1.0:
            raise ValueError("min_abs_gain must lie in [0, 1)")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.lengths is not None and not isinstance(self.lengths, LengthMixture):
            d = np.array(self.lengths, dtype=float).reshape(-1)
            if d.size == 0:
                raise ValueError("fixed lengths must not be empty")
            object.__setattr__(self, "lengths", tuple(d.tolist()))

    @property
    def lattice(self) -> PathLattice:
        return lattice_for(self.grid)

    @property
    def length_model(self) -> LengthMixture | tuple[float, ...]:
        return default_length_mixture(self.lattice) if self.lengths is None else self.lengths


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for channel ``index`` of a corpus."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


@lru_cache(maxsize=16)
def _cell_probabilities(model: LengthMixture, lattice: PathLattice) -> np.ndarray:
    return model.cell_probabilities(lattice)


def _scalar(spec: Scalar, rng: np.random.Generator) -> float:
    if isinstance(spec, DistributionSpec):
        return float(spec.rvs(1, rng)[0])
    return float(spec)


def _path_count(spec: Scalar, n_max: int, rng: np.random.Generator) -> int:
    """Rounded draw restricted to ``[1, n_max]``.

    The continuous law is truncated to ``[0.5, n_max + 0.5)`` and sampled by
    inverse CDF, which is exact and never rejects.
    """
    if not isinstance(spec, DistributionSpec):
        n = int(spec)
        if n > n_max:
            raise GenerationError(f"fixed path count {n} exceeds the limit {n_max}")
        return n
    lo, hi = spec.cdf(np.array([0.5, n_max + 0.5]))
    if not hi > lo:
        raise GenerationError(f"path-count law puts no mass on [1, {n_max}]")
    u = lo + (hi - lo) * rng.random()
    x = float(spec.ppf(u))
    if not math.isfinite(x):
        raise GenerationError("path-count draw is not finite")
    return int(min(max(round(x), 1), n_max))


def _gain_magnitudes(mix: GainMixture, n: int, floor: float, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(0)
    for _ in range(1000):
        draw = mix.sample(n - out.size, rng)
        out = np.concatenate([out, draw[draw >= floor]])
        if out.size == n:
            return out
    raise GenerationError(f"could not draw {n} gains with |g| >= {floor}")


def sample_parameter_set(config: GeneratorConfig, index: int = 0, rng: np.random.Generator | None = None):
    """One random :class:`MpmParameterSet`, deterministic in ``(config, index)``."""
    rng = stream(config.seed, index) if rng is None else rng
    lattice = config.lattice
    model = config.length_model
    n_max = lattice.N if config.max_paths is None else min(lattice.N, config.max_paths)

    if isinstance(model, tuple):
        idx = np.unique(lattice.index_of(model))
        n = idx.size
        if n > n_max:
            raise GenerationError(f"{n} fixed lengths exceed the limit {n_max}")
    else:
        n = _path_count(config.N, n_max, rng)
    a0 = _scalar(config.a0, rng)
    a1 = _scalar(config.a1, rng)
    A = _scalar(config.A, rng)
    if not (math.isfinite(A) and A > 0):
        raise GenerationError(f"scale draw A = {A!r} is not positive")
    if not isinstance(model, tuple):
        try:
            p = _cell_probabilities(model, lattice)
        except DegenerateSampleError as exc:
            raise GenerationError(str(exc)) from exc
        if np.count_nonzero(p) < n:
            raise GenerationError(f"length law covers fewer than {n} lattice cells")
        idx = np.sort(rng.choice(lattice.N, size=n, replace=False, p=p))

    mag = _gain_magnitudes(config.gains, n, config.min_abs_gain, rng)
    flip = rng.random(n) < config.sign_flip_probability
    g = np.where(flip, -mag, mag)
    peak = float(np.max(np.abs(g)))
    g = g / peak  # exact +-1 at the peak
    if config.fold_into_A:
        A *= peak
    return MpmParameterSet(
        a0=a0, a1=a1, A=A, lengths=lattice.lengths[idx], gains=g, grid=config.grid, indices=idx
    )


def sample_channel(config: GeneratorConfig, index: int = 0) -> ChannelRecord:
    """Frequency response of ``sample_parameter_set(config, index)``."""
    return synthesize(sample_parameter_set(config, index), config.grid, id=channel_id(index))


def channel_id(index: int) -> str:
    return f"gen-{index:05d}"


def generate(config: GeneratorConfig, count: int, start: int = 0):
    """``count`` parameter sets and channels for indices ``start..start+count-1``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    out = []
    for i in range(start, start + count):
        params = sample_parameter_set(config, i)
        out.append((params, synthesize(params, config.grid, id=channel_id(i))))
    return out
