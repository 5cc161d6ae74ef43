"""Rank (preference) Gaussian processes.

Latent utilities over a set of instances are inferred from pairwise
winner/loser relations through a probit likelihood
``P(x beats x') = Phi((w(x) - w(x')) / sqrt(2 * pref_noise))`` and a GP
prior, using a Laplace approximation around the Newton-Raphson MAP.

Sign convention: ``likelihood_derivatives`` returns ``b`` as the gradient
of ``sum_p ln Phi(z_p)`` and ``C`` as the *negative* Hessian of that sum,
so ``C`` is positive semidefinite and the Newton ascent step solves
``(Ktilde^-1 + C) step = g`` with ``g = -Ktilde^-1 w + b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import log_ndtr, ndtr

from .gp import LOG_2PI, cholesky_with_jitter
from .kernels import ArdKernelParams, ard_kernel_matrix


@dataclass(frozen=True)
class PreferencePair:
    winner_idx: int
    loser_idx: int

    def __post_init__(self):
        if self.winner_idx == self.loser_idx:
            raise ValueError("a preference pair needs two distinct instances")


@dataclass
class PreferenceSet:
    """Instances and the pairwise relations observed over them for one
    abstract property."""

    instances: np.ndarray
    pairs: list[PreferencePair]
    property_id: str = ""

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.instances, dtype=float))
        if X.shape[0] >= 2:
            uniq = np.unique(X, axis=0)
            if uniq.shape[0] != X.shape[0]:
                raise ValueError("duplicate instances are not allowed")
        for p in self.pairs:
            if not (0 <= p.winner_idx < X.shape[0] and 0 <= p.loser_idx < X.shape[0]):
                raise ValueError("pair references an unknown instance index")
        self.instances = X
        self._pair_cache = None

    @property
    def n(self) -> int:
        return self.instances.shape[0]

    def pair_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Winner/loser index arrays, cached (pairs are append-only per
        fit; refits build fresh sets)."""
        if self._pair_cache is None or self._pair_cache[0].size != len(self.pairs):
            self._pair_cache = _pair_arrays(self.pairs)
        return self._pair_cache


def pref_likelihood(omega_w: float, omega_l: float, pref_noise: float) -> float:
    """Probability that the first instance wins given latent utilities."""
    if pref_noise <= 0:
        raise ValueError("pref_noise must be strictly positive")
    z = (omega_w - omega_l) / math.sqrt(2.0 * pref_noise)
    return float(ndtr(z))


def pref_log_prior(omega: np.ndarray, gram: np.ndarray) -> float:
    """Log-density of the zero-mean GP prior N(0, gram) at ``omega``."""
    omega = np.asarray(omega, dtype=float).ravel()
    L, _ = cholesky_with_jitter(np.asarray(gram, dtype=float))
    v = solve_triangular(L, omega, lower=True, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * float(v @ v) - 0.5 * logdet - 0.5 * omega.size * LOG_2PI


def _pair_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    if len(pairs) == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    w = np.array([p.winner_idx for p in pairs], dtype=int)
    l = np.array([p.loser_idx for p in pairs], dtype=int)
    return w, l


def _phi_over_big_phi(z: np.ndarray) -> np.ndarray:
    # exp(log pdf - log cdf) stays finite far into the left tail where
    # ndtr underflows.
    log_pdf = -0.5 * z * z - 0.5 * LOG_2PI
    return np.exp(log_pdf - log_ndtr(z))


def _loglik_arrays(omega, w, l, c) -> float:
    if w.size == 0:
        return 0.0
    z = (omega[w] - omega[l]) / c
    return float(np.sum(log_ndtr(z)))


def _scatter_indices(w, l, n):
    idx_b = np.concatenate([w, l])
    idx_C = np.concatenate([w * n + w, l * n + l, w * n + l, l * n + w])
    return idx_b, idx_C


def _deriv_arrays(omega, w, l, c, n, scatter=None):
    if w.size == 0:
        return np.zeros(n), np.zeros((n, n))
    if scatter is None:
        scatter = _scatter_indices(w, l, n)
    idx_b, idx_C = scatter
    z = (omega[w] - omega[l]) / c
    r = _phi_over_big_phi(z)
    grad = r / c
    b = np.bincount(idx_b, np.concatenate([grad, -grad]), n)
    q = r * (r + z) / (c * c)
    C = np.bincount(idx_C, np.concatenate([q, q, -q, -q]), n * n).reshape(n, n)
    return b, C


def pairwise_log_likelihood(omega: np.ndarray, pairs, pref_noise: float) -> float:
    """``sum_p ln Phi(z_p)`` over the preference pairs."""
    omega = np.asarray(omega, dtype=float).ravel()
    w, l = _pair_arrays(pairs)
    return _loglik_arrays(omega, w, l, math.sqrt(2.0 * pref_noise))


def likelihood_derivatives(omega: np.ndarray, pairs, pref_noise: float):
    """Gradient ``b`` and negative Hessian ``C`` of ``sum_p ln Phi(z_p)``.

    ``C`` is symmetric positive semidefinite: each pair contributes
    ``q_p * (e_w - e_l)(e_w - e_l)^T`` with ``q_p >= 0``.
    """
    omega = np.asarray(omega, dtype=float).ravel()
    w, l = _pair_arrays(pairs)
    return _deriv_arrays(omega, w, l, math.sqrt(2.0 * pref_noise), omega.size)


@dataclass(frozen=True)
class RankGpModel:
    """Laplace-approximate rank GP for one abstract property."""

    prefset: PreferenceSet
    kernel_params: ArdKernelParams
    pref_noise: float
    omega_map: np.ndarray
    gram: np.ndarray            # K over instances (no noise)
    gram_chol: np.ndarray       # factor of K + pref_noise * I
    curvature: np.ndarray       # C at the MAP
    hessian: np.ndarray         # (K + pref_noise I)^-1 + C
    cov_chol: np.ndarray        # factor of (K + pref_noise I) + (C + ridge)^-1
    predict_weights: np.ndarray  # (K + pref_noise I)^-1 omega_map
    grad_norm: float
    converged: bool
    iterations: int


def _unnorm_log_posterior(omega, Kt_chol, w, l, c) -> float:
    v = solve_triangular(Kt_chol, omega, lower=True, check_finite=False)
    return -0.5 * float(v @ v) + _loglik_arrays(omega, w, l, c)


def _derivs_from_z(z, w, l, c, n, scatter):
    idx_b, idx_C = scatter
    r = _phi_over_big_phi(z)
    grad = r / c
    b = np.bincount(idx_b, np.concatenate([grad, -grad]), n)
    q = r * (r + z) / (c * c)
    C = np.bincount(idx_C, np.concatenate([q, q, -q, -q]), n * n).reshape(n, n)
    return b, C


def fit_map(
    prefset: PreferenceSet,
    kernel_params: ArdKernelParams,
    pref_noise: float = 0.1,
    tol: float = 1e-6,
    max_iter: int = 100,
    warm_start: np.ndarray | None = None,
    curvature_ridge: float = 1e-8,
    compute_predictive: bool = True,
    gram: np.ndarray | None = None,
) -> RankGpModel:
    """Newton-Raphson MAP of the latent utilities with step damping.

    A step that fails to improve the unnormalized log-posterior is halved
    up to 20 times. Non-convergence within ``max_iter`` returns the best
    iterate with ``converged=False`` rather than raising; cyclic
    preference sets are legal (the probit likelihood just trades off).
    ``gram`` may carry a precomputed kernel matrix over the instances.
    """
    n = prefset.n
    if n < 1:
        raise ValueError("preference set has no instances")
    K = (
        gram
        if gram is not None
        else ard_kernel_matrix(prefset.instances, prefset.instances, kernel_params)
    )
    Kt = K + pref_noise * np.eye(n)
    Kt_chol, _ = cholesky_with_jitter(Kt)
    Kt_inv = cho_solve((Kt_chol, True), np.eye(n), check_finite=False)
    w, l = prefset.pair_arrays()
    scatter = _scatter_indices(w, l, n)
    c = math.sqrt(2.0 * pref_noise)
    have_pairs = w.size > 0

    def z_and_posterior(om):
        # the quadratic prior term reuses Kt_inv; z is shared between the
        # posterior value and the derivative assembly
        quad = -0.5 * float(om @ (Kt_inv @ om))
        if not have_pairs:
            return None, quad
        z = (om[w] - om[l]) / c
        return z, quad + float(np.sum(log_ndtr(z)))

    omega = np.zeros(n) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    if omega.size != n:
        omega = np.zeros(n)
    z, obj = z_and_posterior(omega)
    b, C = (
        _derivs_from_z(z, w, l, c, n, scatter)
        if have_pairs
        else (np.zeros(n), np.zeros((n, n)))
    )
    g = -(Kt_inv @ omega) + b
    converged = float(np.max(np.abs(g))) <= tol if n else True
    iterations = 0

    while not converged and iterations < max_iter:
        iterations += 1
        step = np.linalg.solve(Kt_inv + C, g)
        scale = 1.0
        for _ in range(21):
            trial = omega + scale * step
            trial_z, trial_obj = z_and_posterior(trial)
            if trial_obj >= obj or scale < 2**-20:
                break
            scale *= 0.5
        if trial_obj < obj:
            break  # no improving step left; keep the current iterate
        omega, obj, z = trial, trial_obj, trial_z
        b, C = _derivs_from_z(z, w, l, c, n, scatter)
        g = -(Kt_inv @ omega) + b
        converged = float(np.max(np.abs(g))) <= tol

    hessian = Kt_inv + C
    cov_chol = None
    predict_weights = None
    if compute_predictive:
        C_reg = C + curvature_ridge * np.eye(n)
        C_inv = np.linalg.inv(C_reg)
        cov_chol, _ = cholesky_with_jitter(Kt + 0.5 * (C_inv + C_inv.T))
        predict_weights = cho_solve((Kt_chol, True), omega, check_finite=False)
    return RankGpModel(
        prefset=prefset,
        kernel_params=kernel_params,
        pref_noise=pref_noise,
        omega_map=omega,
        gram=K,
        gram_chol=Kt_chol,
        curvature=C,
        hessian=hessian,
        cov_chol=cov_chol,
        predict_weights=predict_weights,
        grad_norm=float(np.max(np.abs(g))) if n else 0.0,
        converged=converged,
        iterations=iterations,
    )


def rank_gp_log_likelihood(model: RankGpModel) -> float:
    """Hyperparameter-selection score: the GP log-likelihood with the MAP
    utilities standing in for observed targets."""
    omega = model.omega_map
    v = solve_triangular(model.gram_chol, omega, lower=True, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(model.gram_chol))))
    return -0.5 * float(v @ v) - 0.5 * logdet - 0.5 * omega.size * LOG_2PI


def rank_predict(model: RankGpModel, Xq) -> tuple[np.ndarray, np.ndarray]:
    """Latent-utility predictive mean and standard deviation at queries."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    k = ard_kernel_matrix(model.prefset.instances, Xq, model.kernel_params)
    mean = k.T @ model.predict_weights
    v = solve_triangular(model.cov_chol, k, lower=True, check_finite=False)
    var = model.kernel_params.signal_variance - np.sum(v * v, axis=0)
    return mean, np.sqrt(np.clip(var, 0.0, None))


@dataclass(frozen=True)
class OutputNormalizer:
    """Min-max map of rank-GP predictions onto [0, 1], with the standard
    deviation scaled by its maximum over the reference set."""

    lo: float
    hi: float
    max_sd: float
    degenerate_mean: bool
    degenerate_sd: bool

    def mean(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.degenerate_mean:
            return np.full_like(values, 0.5)
        scaled = (values - self.lo) / (self.hi - self.lo)
        return np.clip(scaled, 0.0, 1.0)

    def sd(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.degenerate_sd:
            return np.ones_like(values)
        return np.clip(values / self.max_sd, 0.0, 1.0)


def normalize_outputs(model: RankGpModel, reference_points) -> OutputNormalizer:
    """Calibrate the [0, 1] normalization on a reference set of points
    (in the optimization loop: every design evaluated so far)."""
    reference_points = np.atleast_2d(np.asarray(reference_points, dtype=float))
    if reference_points.shape[0] < 2:
        raise ValueError("need at least two reference points")
    mu, sd = rank_predict(model, reference_points)
    lo, hi = float(np.min(mu)), float(np.max(mu))
    max_sd = float(np.max(sd))
    return OutputNormalizer(
        lo=lo,
        hi=hi,
        max_sd=max_sd,
        degenerate_mean=(hi - lo) <= 1e-12,
        degenerate_sd=max_sd <= 1e-12,
    )
