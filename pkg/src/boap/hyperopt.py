"""Derivative-free hyperparameter search: multi-start Powell refinement
over log-transformed parameters inside box bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .gp import ConditioningError


@dataclass(frozen=True)
class HyperoptResult:
    params: np.ndarray
    objective: float
    fallback: bool  # True when every start failed and midpoint was returned


def optimize_hyperparams(
    objective,
    bounds,
    seed,
    n_starts: int = 8,
    maxfev: int | None = None,
    warm_start=None,
) -> HyperoptResult:
    """Maximize ``objective(params)`` over a box.

    The search runs in log-space: one start at the log-midpoint of the
    bounds, the rest drawn uniformly (in log-space) from a generator seeded
    by ``seed``; each start is refined with bounded Powell. A supplied
    ``warm_start`` replaces the last random start. The best evaluated point
    (raw starts included) is returned, so the result never scores below any
    start that was tried.

    Parameters
    ----------
    objective : callable (k,) -> float
        Score to maximize. May raise ``ConditioningError`` or return
        non-finite values for bad regions; those candidates are skipped.
    bounds : sequence of (lo, hi)
        Positive box bounds per parameter.
    seed : int | numpy SeedSequence | Generator
        Source for the random starts.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or np.any(bounds[:, 0] <= 0):
        raise ValueError("bounds must be positive (lo, hi) pairs")
    log_lo = np.log(bounds[:, 0])
    log_hi = np.log(bounds[:, 1])
    k = bounds.shape[0]
    rng = np.random.default_rng(seed)
    if maxfev is None:
        maxfev = 50 * k

    def safe_neg(log_p: np.ndarray) -> float:
        log_p = np.clip(log_p, log_lo, log_hi)
        try:
            val = objective(np.exp(log_p))
        except (ConditioningError, np.linalg.LinAlgError):
            return np.inf
        if not np.isfinite(val):
            return np.inf
        return -float(val)

    starts = [0.5 * (log_lo + log_hi)]
    n_random = max(n_starts - 1, 0)
    for _ in range(n_random):
        starts.append(rng.uniform(log_lo, log_hi))
    if warm_start is not None and n_random > 0:
        ws = np.clip(np.log(np.asarray(warm_start, dtype=float)), log_lo, log_hi)
        starts[-1] = ws

    best_log, best_neg = None, np.inf
    for x0 in starts:
        f0 = safe_neg(x0)
        if f0 < best_neg:
            best_log, best_neg = x0, f0
        if not np.isfinite(f0):
            continue
        res = minimize(
            safe_neg,
            x0,
            method="Powell",
            bounds=list(zip(log_lo, log_hi)),
            options={"maxfev": maxfev, "xtol": 1e-2, "ftol": 1e-4},
        )
        if np.isfinite(res.fun) and res.fun < best_neg:
            best_log, best_neg = np.clip(res.x, log_lo, log_hi), float(res.fun)

    if best_log is None or not np.isfinite(best_neg):
        return HyperoptResult(
            params=np.exp(0.5 * (log_lo + log_hi)), objective=-np.inf, fallback=True
        )
    return HyperoptResult(params=np.exp(best_log), objective=-best_neg, fallback=False)
