"""Gaussian process regression: exact posterior inference, marginal and
held-out (predictive) log-likelihoods."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .kernels import (
    ArdKernelParams,
    SpatialKernelParams,
    ard_kernel_matrix,
    spatial_kernel_matrix,
)

LOG_2PI = math.log(2.0 * math.pi)


class ConditioningError(np.linalg.LinAlgError):
    """Raised when a Gram matrix stays indefinite after maximum jitter."""


def cholesky_with_jitter(
    matrix: np.ndarray,
    initial_scale: float = 1e-10,
    max_scale: float = 1e-4,
) -> tuple[np.ndarray, float]:
    """Lower-triangular Cholesky factor with escalating diagonal jitter.

    Jitter starts at ``initial_scale * mean(diag)`` and is multiplied by 10
    until factorization succeeds or it exceeds ``max_scale * mean(diag)``.

    Returns
    -------
    (L, jitter) : the factor and the jitter actually added.
    """
    matrix = np.asarray(matrix, dtype=float)
    jitter = 0.0
    try:
        return cholesky(matrix, lower=True, check_finite=False), jitter
    except np.linalg.LinAlgError:
        pass
    base = float(np.mean(np.diag(matrix)))
    if not np.isfinite(base) or base <= 0:
        base = 1.0
    jitter = initial_scale * base
    eye = np.eye(matrix.shape[0])
    while True:
        try:
            L = cholesky(matrix + jitter * eye, lower=True, check_finite=False)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > max_scale * base:
                raise ConditioningError(
                    "Gram matrix is not positive definite even after "
                    f"jitter of {max_scale:g} * mean(diag)"
                ) from None


@dataclass(frozen=True)
class AugmentedInputs:
    """Points in the augmented space together with the per-point,
    per-dimension lengthscale values the spatial kernel needs."""

    coords: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        lengths = np.atleast_2d(np.asarray(self.lengths, dtype=float))
        if coords.shape != lengths.shape:
            raise ValueError("coords and lengths must have identical shapes")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "lengths", lengths)

    def __len__(self) -> int:
        return self.coords.shape[0]


def kernel_matrix(A, B, params: Union[ArdKernelParams, SpatialKernelParams]) -> np.ndarray:
    """Dispatch a cross-covariance computation on the parameter type."""
    if isinstance(params, ArdKernelParams):
        return ard_kernel_matrix(A, B, params)
    if isinstance(params, SpatialKernelParams):
        if not (isinstance(A, AugmentedInputs) and isinstance(B, AugmentedInputs)):
            raise TypeError("spatial kernel expects AugmentedInputs operands")
        return spatial_kernel_matrix(A.coords, A.lengths, B.coords, B.lengths)
    raise TypeError(f"unsupported kernel parameters: {type(params)!r}")


def kernel_diag(A, params) -> np.ndarray:
    """Prior variances k(x, x); both supported kernels have unit-height
    correlation so this is constant along the diagonal."""
    if isinstance(params, ArdKernelParams):
        n = np.atleast_2d(np.asarray(A, dtype=float)).shape[0]
        return np.full(n, params.signal_variance)
    if isinstance(params, SpatialKernelParams):
        return np.ones(len(A))
    raise TypeError(f"unsupported kernel parameters: {type(params)!r}")


@dataclass(frozen=True)
class GpPosterior:
    """Exact GP posterior over standardized targets.

    Holds the Cholesky factor of ``K + noise_variance * I`` and the solved
    weights; immutable once fitted.
    """

    train_inputs: object
    train_targets: np.ndarray
    params: object
    noise_variance: float
    chol_factor: np.ndarray
    alpha_weights: np.ndarray
    jitter: float


def _n_inputs(X) -> int:
    if isinstance(X, AugmentedInputs):
        return len(X)
    return np.atleast_2d(np.asarray(X, dtype=float)).shape[0]


def gp_fit(X, y, params, noise_variance: float | None = None) -> GpPosterior:
    """Fit the exact GP posterior.

    ``y`` is expected to be standardized (zero mean, unit variance) by the
    caller; ``noise_variance`` defaults to the value carried by ``params``
    for ARD kernels and must be given explicitly for the spatial kernel.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = _n_inputs(X)
    if n < 1:
        raise ValueError("need at least one training point")
    if y.size != n:
        raise ValueError(f"got {n} inputs but {y.size} targets")
    if noise_variance is None:
        if not isinstance(params, ArdKernelParams):
            raise ValueError("noise_variance is required for spatial kernels")
        noise_variance = params.noise_variance
    K = kernel_matrix(X, X, params)
    L, jitter = cholesky_with_jitter(K + noise_variance * np.eye(n))
    alpha = cho_solve((L, True), y, check_finite=False)
    return GpPosterior(
        train_inputs=X,
        train_targets=y,
        params=params,
        noise_variance=float(noise_variance),
        chol_factor=L,
        alpha_weights=alpha,
        jitter=jitter,
    )


def gp_predict(post: GpPosterior, Xq) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance (noise-free latent) at query points."""
    k = kernel_matrix(post.train_inputs, Xq, post.params)
    mean = k.T @ post.alpha_weights
    v = solve_triangular(post.chol_factor, k, lower=True, check_finite=False)
    var = kernel_diag(Xq, post.params) - np.sum(v * v, axis=0)
    return mean, np.clip(var, 0.0, None)


def gp_joint_posterior(post: GpPosterior, Xq) -> tuple[np.ndarray, np.ndarray]:
    """Joint posterior mean vector and covariance matrix over query points."""
    k = kernel_matrix(post.train_inputs, Xq, post.params)
    mean = k.T @ post.alpha_weights
    v = solve_triangular(post.chol_factor, k, lower=True, check_finite=False)
    cov = kernel_matrix(Xq, Xq, post.params) - v.T @ v
    return mean, cov


def log_marginal_from_gram(K: np.ndarray, y: np.ndarray, noise_variance: float) -> float:
    """log p(y) for a precomputed kernel matrix; the fast path for
    hyperparameter search loops."""
    y = np.asarray(y, dtype=float).ravel()
    L, _ = cholesky_with_jitter(K + noise_variance * np.eye(y.size))
    alpha = cho_solve((L, True), y, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * float(y @ alpha) - 0.5 * logdet - 0.5 * y.size * LOG_2PI


def gp_log_marginal_likelihood(post: GpPosterior) -> float:
    """log p(y | X, params) of the fitted posterior."""
    y = post.train_targets
    quad = float(y @ post.alpha_weights)
    logdet = 2.0 * float(np.sum(np.log(np.diag(post.chol_factor))))
    return -0.5 * quad - 0.5 * logdet - 0.5 * y.size * LOG_2PI


def gp_predictive_log_likelihood(post: GpPosterior, Xq, yq) -> float:
    """Sum of held-out log-densities log N(y | mu(x), var(x) + noise)."""
    yq = np.asarray(yq, dtype=float).ravel()
    if yq.size == 0:
        raise ValueError("holdout set must be non-empty")
    mean, var = gp_predict(post, Xq)
    total_var = var + post.noise_variance
    return float(
        np.sum(-0.5 * (LOG_2PI + np.log(total_var)) - 0.5 * (yq - mean) ** 2 / total_var)
    )


def standardize(y) -> tuple[np.ndarray, float, float]:
    """Zero-mean unit-variance transform; degenerate spread keeps scale 1."""
    y = np.asarray(y, dtype=float).ravel()
    mean = float(np.mean(y))
    std = float(np.std(y))
    if not np.isfinite(std) or std <= 1e-12:
        std = 1.0
    return (y - mean) / std, mean, std
