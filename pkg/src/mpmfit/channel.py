from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateSampleError
from .grid import FrequencyGrid


@dataclass(frozen=True, eq=False)
class ChannelRecord:
    """Complex channel frequency response sampled on a uniform grid."""

    grid: FrequencyGrid
    samples: np.ndarray
    id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        h = np.array(self.samples, dtype=complex)
        if h.ndim != 1 or h.size != self.grid.M:
            raise DataError(f"channel {self.id!r}: expected {self.grid.M} samples, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            bad = int(np.argmax(~np.isfinite(h)))
            raise DataError(f"channel {self.id!r}: non-finite sample at index {bad}")
        h.setflags(write=False)
        object.__setattr__(self, "samples", h)

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.samples)

    def require_nonzero(self, what: str = "operation") -> None:
        """Raise if any sample has zero magnitude."""
        zero = np.flatnonzero(self.samples == 0)
        if zero.size:
            raise DegenerateSampleError(
                f"channel {self.id!r}: zero-magnitude sample at index {int(zero[0])} ({what})",
                index=int(zero[0]),
            )


def as_samples(x) -> np.ndarray:
    if isinstance(x, ChannelRecord):
        return x.samples
    return np.asarray(x, dtype=complex)
