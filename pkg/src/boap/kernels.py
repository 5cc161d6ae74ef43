"""Covariance functions: ARD squared exponential and a variant with
input-dependent (spatially varying) lengthscales.

The spatially varying form multiplies, per dimension, a normalization
prefactor ``sqrt(2 l(x) l(x') / (l(x)^2 + l(x')^2))`` with
``exp(-(x - x')^2 / (l(x)^2 + l(x')^2))``; with a constant lengthscale it
collapses exactly to the squared-exponential kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class KernelError(ValueError):
    """Raised for invalid kernel inputs (dimension mismatch, bad lengthscales)."""


def _as_2d(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


@dataclass(frozen=True)
class ArdKernelParams:
    """Hyperparameters of the ARD squared-exponential kernel.

    ``signal_variance`` stays pinned at 1 when targets are standardized;
    ``noise_variance`` is the observation noise added to the Gram diagonal.
    """

    lengthscales: np.ndarray
    signal_variance: float = 1.0
    noise_variance: float = 0.1

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ls <= 0):
            raise KernelError("lengthscales must be strictly positive")
        if self.signal_variance <= 0:
            raise KernelError("signal_variance must be strictly positive")
        if self.noise_variance < 0:
            raise KernelError("noise_variance must be non-negative")
        object.__setattr__(self, "lengthscales", ls)


def ard_kernel(x, x_prime, params: ArdKernelParams) -> float:
    """Evaluate the ARD squared-exponential kernel on a single pair.

    Returns ``signal_variance * exp(-0.5 * sum_d (x_d - x'_d)^2 / l_d^2)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != xp.shape or x.shape != params.lengthscales.shape:
        raise KernelError(
            f"dimension mismatch: x {x.shape}, x' {xp.shape}, "
            f"lengthscales {params.lengthscales.shape}"
        )
    z = (x - xp) / params.lengthscales
    return float(params.signal_variance * np.exp(-0.5 * np.dot(z, z)))


def ard_kernel_matrix(A, B, params: ArdKernelParams) -> np.ndarray:
    """Cross-covariance matrix of the ARD SE kernel, shape (len(A), len(B))."""
    A = _as_2d(A)
    B = _as_2d(B)
    if A.shape[1] != B.shape[1] or A.shape[1] != params.lengthscales.size:
        raise KernelError("input dimension does not match lengthscale count")
    a = A / params.lengthscales
    b = B / params.lengthscales
    # ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b, clipped to guard tiny negatives
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    np.clip(sq, 0.0, None, out=sq)
    return params.signal_variance * np.exp(-0.5 * sq)


def pairwise_sqdists(A, B=None) -> np.ndarray:
    """Per-dimension squared differences, shape (n, m, d); precompute once
    when many kernel evaluations share the same points."""
    A = _as_2d(A)
    B = A if B is None else _as_2d(B)
    diff = A[:, None, :] - B[None, :, :]
    return diff * diff


def ard_from_sqdists(D2: np.ndarray, params: ArdKernelParams) -> np.ndarray:
    """ARD SE kernel matrix from precomputed squared differences."""
    inv = 0.5 / (params.lengthscales**2)
    return params.signal_variance * np.exp(-(D2 @ inv))


def spatial_kernel(x, x_prime, lengths_x, lengths_x_prime) -> float:
    """Evaluate the spatially varying kernel on one pair of points.

    ``lengths_x`` and ``lengths_x_prime`` give the lengthscale function
    evaluated per dimension at each point.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    lx = np.atleast_1d(np.asarray(lengths_x, dtype=float))
    lxp = np.atleast_1d(np.asarray(lengths_x_prime, dtype=float))
    if not (x.shape == xp.shape == lx.shape == lxp.shape):
        raise KernelError("points and lengthscale vectors must share one shape")
    if np.any(lx <= 0) or np.any(lxp <= 0):
        raise KernelError("lengthscale function values must be strictly positive")
    denom = lx**2 + lxp**2
    prefactor = np.prod(np.sqrt(2.0 * lx * lxp / denom))
    expo = np.sum((x - xp) ** 2 / denom)
    return float(prefactor * np.exp(-expo))


def spatial_kernel_matrix(A, LA, B, LB) -> np.ndarray:
    """Cross-covariance of the spatially varying kernel.

    Parameters
    ----------
    A, B : arrays, shapes (n, d) and (m, d)
        Point coordinates.
    LA, LB : arrays, same shapes as A and B
        Lengthscale function values at each point and dimension.
    """
    A, B = _as_2d(A), _as_2d(B)
    LA, LB = _as_2d(LA), _as_2d(LB)
    if A.shape != LA.shape or B.shape != LB.shape or A.shape[1] != B.shape[1]:
        raise KernelError("coordinate and lengthscale arrays must align")
    if np.any(LA <= 0) or np.any(LB <= 0):
        raise KernelError("lengthscale function values must be strictly positive")
    la = LA[:, None, :]
    lb = LB[None, :, :]
    denom = la**2 + lb**2
    pref = np.prod(np.sqrt(2.0 * la * lb / denom), axis=-1)
    diff = A[:, None, :] - B[None, :, :]
    expo = np.sum(diff**2 / denom, axis=-1)
    return pref * np.exp(-expo)


@dataclass(frozen=True)
class SpatialKernelParams:
    """Hyperparameters of the augmented-input kernel.

    The first ``len(base_lengthscales)`` dimensions use constant
    lengthscales; every remaining (augmented) dimension uses
    ``alpha * sigma_fn_i(x)`` where ``sigma_fn_i`` maps raw input points to
    normalized predictive standard deviations in [0, 1].
    """

    base_lengthscales: np.ndarray
    alpha: float
    sigma_floor: float = 1e-6

    def __post_init__(self):
        base = np.atleast_1d(np.asarray(self.base_lengthscales, dtype=float))
        if np.any(base <= 0):
            raise KernelError("base lengthscales must be strictly positive")
        if not (0.0 < self.alpha <= 2.0):
            raise KernelError("alpha must lie in (0, 2]")
        object.__setattr__(self, "base_lengthscales", base)

    def lengthscale_array(self, sigmas: np.ndarray) -> np.ndarray:
        """Per-point lengthscale array for points with normalized
        uncertainties ``sigmas`` of shape (n, m)."""
        sigmas = _as_2d(sigmas)
        n = sigmas.shape[0]
        base = np.broadcast_to(self.base_lengthscales, (n, self.base_lengthscales.size))
        aug = self.alpha * np.maximum(sigmas, self.sigma_floor)
        return np.concatenate([base, aug], axis=1)
