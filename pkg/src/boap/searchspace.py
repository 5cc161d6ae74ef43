"""Box-bounded search spaces and unit-cube normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SearchSpace:
    """A compact box-bounded design space.

    All surrogate modeling happens in coordinates normalized to the unit
    cube; designs are reported back to callers in their original units.

    Parameters
    ----------
    lower, upper : array-like, shape (dim,)
        Per-dimension box bounds with ``lower[i] < upper[i]``.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if lower.size == 0:
            raise ValueError("search space must have at least one dimension")
        if not np.all(lower < upper):
            raise ValueError("each lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def from_bounds(cls, bounds) -> "SearchSpace":
        """Build from an iterable of (lo, hi) pairs."""
        arr = np.asarray(bounds, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("bounds must be a sequence of (lo, hi) pairs")
        return cls(lower=arr[:, 0], upper=arr[:, 1])

    def normalize(self, x: np.ndarray) -> np.ndarray:
        """Map points from the box to [0, 1]^dim."""
        x = np.asarray(x, dtype=float)
        return (x - self.lower) / (self.upper - self.lower)

    def denormalize(self, u: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`normalize`."""
        u = np.asarray(u, dtype=float)
        return self.lower + u * (self.upper - self.lower)

    def contains(self, x: np.ndarray, atol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))
