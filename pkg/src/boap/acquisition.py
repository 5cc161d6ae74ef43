"""Acquisition strategies over a finite candidate set: Thompson sampling
from the joint GP posterior, expected improvement, and the GP-UCB
trade-off schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, qmc

from .gp import GpPosterior, cholesky_with_jitter, gp_joint_posterior, gp_predict

# Joint covariances whose largest diagonal entry falls below this are
# treated as degenerate: the sample is the mean.
DEGENERATE_VAR = 1e-12


@dataclass(frozen=True)
class CandidateGrid:
    """A finite discretization of the (normalized) search space."""

    points: np.ndarray
    seed: object = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 0:
            raise ValueError("candidate grid must be non-empty")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def make_grid(dim: int, size: int, seed) -> CandidateGrid:
    """Quasi-random candidate grid inside [0, 1]^dim (scrambled Halton);
    identical points for identical seeds."""
    sampler = qmc.Halton(d=dim, scramble=True, seed=np.random.default_rng(seed))
    return CandidateGrid(points=sampler.random(size), seed=seed)


@dataclass(frozen=True)
class ThompsonSample:
    values: np.ndarray
    argmax_idx: int


def thompson_sample_inputs(post: GpPosterior, query_inputs, n_points: int, seed) -> ThompsonSample:
    """Thompson sample over arbitrary query inputs (raw arrays or
    augmented-input bundles, whatever the posterior's kernel accepts).

    The joint covariance is factorized with escalating jitter; a
    numerically degenerate posterior (all variances ~ 0) yields the mean
    itself. Ties at the argmax resolve to the lowest index.
    """
    mean, cov = gp_joint_posterior(post, query_inputs)
    cov = 0.5 * (cov + cov.T)
    if float(np.max(np.diag(cov))) <= DEGENERATE_VAR:
        values = mean
    else:
        L, _ = cholesky_with_jitter(cov, initial_scale=1e-12, max_scale=1e-2)
        z = np.random.default_rng(seed).standard_normal(n_points)
        values = mean + L @ z
    return ThompsonSample(values=values, argmax_idx=int(np.argmax(values)))


def thompson_sample(post: GpPosterior, grid: CandidateGrid, seed) -> ThompsonSample:
    """Draw one function sample from the joint posterior over the grid;
    deterministic for a fixed seed."""
    return thompson_sample_inputs(post, grid.points, grid.size, seed)


def expected_improvement(post: GpPosterior, Xq, best_y: float) -> np.ndarray:
    """EI of each query point over the incumbent value ``best_y``; zero
    wherever the predictive deviation vanishes."""
    mean, var = gp_predict(post, Xq)
    sd = np.sqrt(var)
    improve = mean - best_y
    ei = np.zeros_like(mean)
    positive = sd > 0
    z = improve[positive] / sd[positive]
    ei[positive] = improve[positive] * norm.cdf(z) + sd[positive] * norm.pdf(z)
    return np.clip(ei, 0.0, None)


def ucb_beta(t: int, d: int, delta_prime: float) -> float:
    """Confidence-width schedule ``2 log(t^(d/2+2) pi^2 / (3 delta'))``."""
    if t < 1:
        raise ValueError("iteration index must be >= 1")
    if not (0.0 < delta_prime < 1.0):
        raise ValueError("delta_prime must lie strictly inside (0, 1)")
    return 2.0 * ((d / 2.0 + 2.0) * math.log(t) + math.log(math.pi**2 / (3.0 * delta_prime)))
