"""The two-arm preference-guided optimization loop.

Each iteration refits one rank GP per abstract property from the pairwise
preferences gathered so far, rebuilds the augmented representation
``[x, mu_1(x), ..., mu_m(x)]`` of every evaluated design, tunes both a
raw-input GP (control arm) and an augmented-input GP with
uncertainty-coupled lengthscales (human arm), picks the arm with the
higher held-out predictive likelihood, and Thompson-samples the chosen
arm over a fresh candidate grid.

The loop body is written as a generator that yields
:class:`OracleRequest` bundles (objective measurements plus pairwise
comparisons) and resumes once answers arrive, so the same code drives
simulated oracles and live human sessions.

Randomness is split into independent named substreams keyed on the run
seed (see :func:`substream`), which makes every decision replayable and
insensitive to how much randomness other components consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Generator, Optional

import numpy as np

from .acquisition import (
    CandidateGrid,
    expected_improvement,
    make_grid,
    thompson_sample_inputs,
)
from .gp import (
    AugmentedInputs,
    GpPosterior,
    gp_fit,
    gp_log_marginal_likelihood,
    gp_predictive_log_likelihood,
    log_marginal_from_gram,
    standardize,
)
from .hyperopt import optimize_hyperparams
from .kernels import (
    ArdKernelParams,
    SpatialKernelParams,
    ard_from_sqdists,
    pairwise_sqdists,
)
from .rankgp import (
    OutputNormalizer,
    PreferencePair,
    PreferenceSet,
    RankGpModel,
    fit_map,
    normalize_outputs,
    rank_gp_log_likelihood,
    rank_predict,
)
from .searchspace import SearchSpace

MODES = ("boap", "boap_oa", "bo_ts", "bo_ei")

# Substream identifiers for seed splitting: every random decision draws
# from default_rng(substream(seed, STREAM, *key)) so streams never
# interfere with each other. Initial designs, observation noise, and
# expert flips are mode-agnostic (methods sharing a run seed see the
# same initialization and the same noise draw for the k-th evaluation,
# giving paired comparisons); the per-iteration algorithmic streams are
# additionally keyed by the mode so each method is an independent run
# (two methods must not collide on identical candidate grids or
# Thompson draws).
STREAM_INIT = 0    # initial designs
STREAM_NOISE = 1   # observation noise, keyed by evaluation index
STREAM_EXPERT = 2  # preference flips, keyed by (property, i, j)
STREAM_OPT = 3     # hyperparameter starts, keyed by (mode, iteration, slot)
STREAM_TS = 4      # Thompson draws, keyed by (mode, iteration)
STREAM_GRID = 5    # candidate grids, keyed by (mode, iteration)
STREAM_SPLIT = 6   # holdout splits, keyed by (mode, iteration)


def mode_salt(mode: str) -> int:
    return MODES.index(mode)

SLOT_CONTROL = 0
SLOT_HUMAN = 1
SLOT_RANK_BASE = 2  # rank GP for property i uses slot SLOT_RANK_BASE + i


def substream(seed: int, *key: int) -> np.random.SeedSequence:
    """Named, order-independent child seed of a run seed."""
    return np.random.SeedSequence([int(seed), *[int(k) for k in key]])


class EngineError(RuntimeError):
    """Raised when a run aborts; carries the partial trace."""

    def __init__(self, message: str, trace: "RunTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class LoopConfig:
    """Configuration of one optimization run.

    Defaults follow the experimental protocol: ``t_init = dim + 3`` and
    ``budget = 10 * dim + 5`` total evaluations, observation and
    preference noise variances both 0.1, unit signal variance on
    standardized outputs, lengthscales tuned in [0.1, 1] on normalized
    inputs and the augmented-dimension scale ``alpha`` in (0, 2].
    """

    dim: int
    bounds: tuple
    mode: str = "boap"
    n_properties: int = 2
    seed: int = 0
    t_init: Optional[int] = None
    budget: Optional[int] = None
    noise_variance: float = 0.1
    pref_noise: float = 0.1
    signal_variance: float = 1.0
    lengthscale_bounds: tuple = (0.1, 1.0)
    alpha_bounds: tuple = (0.05, 2.0)
    holdout_fraction: float = 0.2
    # arm-selection likelihoods average the held-out score over this many
    # seeded splits; hyperparameters are still fit on the first split's
    # training subset (one split reproduces the single-draw protocol)
    selection_splits: int = 5
    grid_size: Optional[int] = None
    hyperopt_starts: int = 8
    hyperopt_maxfev: Optional[int] = None
    observation_noise: bool = True
    true_max: Optional[float] = None
    property_names: tuple = ()
    candidates: Optional[tuple] = None  # discrete pool (rows of raw designs)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.n_properties < 0:
            raise ValueError("n_properties must be >= 0")
        if not (0.0 < self.holdout_fraction < 1.0):
            raise ValueError("holdout_fraction must lie in (0, 1)")
        if self.resolved_t_init() < 1:
            raise ValueError("t_init must be at least 1")
        # budget == t_init is legal and runs zero steps (initialization only)
        if self.resolved_t_init() > self.resolved_budget():
            raise ValueError("t_init cannot exceed the total budget")

    def resolved_t_init(self) -> int:
        return self.t_init if self.t_init is not None else self.dim + 3

    def resolved_budget(self) -> int:
        return self.budget if self.budget is not None else 10 * self.dim + 5

    def resolved_grid_size(self) -> int:
        return self.grid_size if self.grid_size is not None else 100 * self.dim

    def space(self) -> SearchSpace:
        return SearchSpace.from_bounds(np.asarray(self.bounds, dtype=float))

    def uses_preferences(self) -> bool:
        return self.mode in ("boap", "boap_oa") and self.n_properties > 0

    def property_labels(self) -> list[str]:
        if self.property_names:
            return list(self.property_names)
        return [f"property_{i + 1}" for i in range(self.n_properties)]


@dataclass(frozen=True)
class ObservationQuery:
    qid: str
    eval_index: int
    x: tuple  # raw-space design


@dataclass(frozen=True)
class ComparisonQuery:
    qid: str
    property_idx: int
    property_name: str
    left_idx: int
    right_idx: int
    left_x: tuple
    right_x: tuple


@dataclass(frozen=True)
class OracleRequest:
    """One bundle of pending work; the loop resumes when every query in
    the bundle has an answer."""

    observations: tuple
    comparisons: tuple


@dataclass(frozen=True)
class ObservationAnswer:
    value: float
    true_value: Optional[float] = None


@dataclass(frozen=True)
class ComparisonAnswer:
    choice: Optional[str]  # "left", "right", or None for "cannot judge"


@dataclass(frozen=True)
class ArmModel:
    kind: str  # "control" | "human"
    posterior: Optional[GpPosterior]
    params: object
    pred_likelihood: Optional[float]


def select_arm(human: ArmModel, control: ArmModel) -> str:
    """Pick the arm with the strictly higher predictive likelihood; ties
    and missing human scores fall back to the control arm."""
    if human.pred_likelihood is None or control.pred_likelihood is None:
        return "control"
    return "human" if human.pred_likelihood > control.pred_likelihood else "control"


class RunTrace:
    """Ordered iteration records plus a final summary, serializable as
    line-delimited JSON."""

    def __init__(self, records: Optional[list] = None):
        self.records: list[dict] = records or []

    def append(self, record: dict) -> None:
        self.records.append(record)

    def step_records(self) -> list[dict]:
        return [r for r in self.records if r.get("type") == "step"]

    def summary(self) -> Optional[dict]:
        for r in reversed(self.records):
            if r.get("type") == "summary":
                return r
        return None

    def regret_series(self) -> list:
        """Regret after initialization and after each step
        (length = budget - t_init + 1 for a completed run)."""
        series = []
        for r in self.records:
            if r.get("type") in ("init", "step"):
                series.append(r.get("regret"))
        return series

    def to_jsonl(self) -> str:
        import json

        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "RunTrace":
        import json

        return cls([json.loads(line) for line in text.splitlines() if line.strip()])


def _f(x) -> float:
    return float(x)


def _vec(x) -> list:
    return [float(v) for v in np.asarray(x, dtype=float).ravel()]


class _LoopState:
    """Mutable inner state of one run."""

    def __init__(self, config: LoopConfig):
        self.config = config
        self.space = config.space()
        self.X_raw: list[np.ndarray] = []
        self.y: list[float] = []
        self.f_true: list[Optional[float]] = []
        self.pairs: list[list[PreferencePair]] = [[] for _ in range(config.n_properties)]
        self.pool_indices: list[int] = []  # dataset mode bookkeeping
        self.warm_rank_ls: list[Optional[np.ndarray]] = [None] * config.n_properties
        self.warm_rank_omega: list[Optional[np.ndarray]] = [None] * config.n_properties
        self.warm_control: Optional[np.ndarray] = None
        self.warm_human: Optional[np.ndarray] = None
        if config.candidates is not None:
            self.pool = np.atleast_2d(np.asarray(config.candidates, dtype=float))
        else:
            self.pool = None

    @property
    def n(self) -> int:
        return len(self.y)

    def X_norm(self) -> np.ndarray:
        return self.space.normalize(np.asarray(self.X_raw, dtype=float))

    def incumbent(self) -> tuple[np.ndarray, float]:
        idx = int(np.argmax(self.y))
        return self.X_raw[idx], self.y[idx]

    def regret(self) -> Optional[float]:
        if self.config.true_max is None:
            return None
        truths = [t for t in self.f_true if t is not None]
        if len(truths) != len(self.f_true):
            return None
        return float(self.config.true_max - max(truths))


def _comparison_queries(state: _LoopState, new_index: Optional[int]) -> list[ComparisonQuery]:
    """Comparison queries for the new design against every earlier design
    (or all initial pairs when ``new_index`` is None), per property."""
    cfg = state.config
    labels = cfg.property_labels()
    queries = []
    X = state.X_raw
    if new_index is None:
        index_pairs = [(i, j) for i in range(len(X)) for j in range(i + 1, len(X))]
    else:
        index_pairs = [(k, new_index) for k in range(new_index)]
    for prop in range(cfg.n_properties):
        for i, j in index_pairs:
            queries.append(
                ComparisonQuery(
                    qid=f"cmp-{prop}-{i}-{j}",
                    property_idx=prop,
                    property_name=labels[prop],
                    left_idx=i,
                    right_idx=j,
                    left_x=tuple(_vec(X[i])),
                    right_x=tuple(_vec(X[j])),
                )
            )
    return queries


def _ingest_comparisons(state: _LoopState, queries, answers) -> None:
    for q in queries:
        ans = answers[q.qid]
        if ans.choice is None:
            continue  # "cannot judge": the pair simply never constrains the fit
        if ans.choice not in ("left", "right"):
            raise ValueError(f"comparison answer must be left/right/None, got {ans.choice!r}")
        winner = q.left_idx if ans.choice == "left" else q.right_idx
        loser = q.right_idx if ans.choice == "left" else q.left_idx
        state.pairs[q.property_idx].append(PreferencePair(winner, loser))


def _fit_rank_models(state: _LoopState, t: int):
    """Refit the per-property rank GPs, tuning lengthscales by the
    rank-GP log-likelihood."""
    cfg = state.config
    X = state.X_norm()
    models: list[RankGpModel] = []
    all_converged = True
    for prop in range(cfg.n_properties):
        prefset = PreferenceSet(
            instances=X,
            pairs=list(state.pairs[prop]),
            property_id=cfg.property_labels()[prop],
        )
        warm_omega = state.warm_rank_omega[prop]
        if warm_omega is not None and warm_omega.size < prefset.n:
            warm_omega = np.pad(warm_omega, (0, prefset.n - warm_omega.size))
        # The MAP is the unique optimum of a strictly concave objective,
        # so warm-starting Newton from the last fit only saves iterations.
        warm_cell = [warm_omega]
        D2 = pairwise_sqdists(X)

        def objective(ls, prefset=prefset, warm_cell=warm_cell, D2=D2):
            params = ArdKernelParams(ls, cfg.signal_variance, 0.0)
            model = fit_map(
                prefset,
                params,
                pref_noise=cfg.pref_noise,
                warm_start=warm_cell[0],
                compute_predictive=False,
                gram=ard_from_sqdists(D2, params),
            )
            warm_cell[0] = model.omega_map
            return rank_gp_log_likelihood(model)

        result = optimize_hyperparams(
            objective,
            bounds=[cfg.lengthscale_bounds] * cfg.dim,
            seed=substream(cfg.seed, STREAM_OPT, mode_salt(cfg.mode), t, SLOT_RANK_BASE + prop),
            n_starts=cfg.hyperopt_starts,
            maxfev=cfg.hyperopt_maxfev,
            warm_start=state.warm_rank_ls[prop],
        )
        params = ArdKernelParams(result.params, cfg.signal_variance, 0.0)
        model = fit_map(prefset, params, pref_noise=cfg.pref_noise, warm_start=warm_cell[0])
        state.warm_rank_ls[prop] = result.params
        state.warm_rank_omega[prop] = model.omega_map
        all_converged = all_converged and model.converged
        models.append(model)
    return models, all_converged


@dataclass(frozen=True)
class _Augmentation:
    models: list
    normalizers: list

    def features(self, X_norm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Normalized predictive means and standard deviations, columns
        aligned with the property list."""
        n = np.atleast_2d(X_norm).shape[0]
        if not self.models:
            return np.zeros((n, 0)), np.zeros((n, 0))
        F, S = [], []
        for model, norm in zip(self.models, self.normalizers):
            mu, sd = rank_predict(model, X_norm)
            F.append(norm.mean(mu))
            S.append(norm.sd(sd))
        return np.column_stack(F), np.column_stack(S)


def _build_augmentation(state: _LoopState, models) -> _Augmentation:
    X = state.X_norm()
    normalizers = [normalize_outputs(m, X) for m in models]
    return _Augmentation(models=models, normalizers=normalizers)


def _augmented_inputs(
    X_norm: np.ndarray, aug: _Augmentation, spk: SpatialKernelParams
) -> AugmentedInputs:
    F, S = aug.features(X_norm)
    coords = np.concatenate([np.atleast_2d(X_norm), F], axis=1)
    return AugmentedInputs(coords=coords, lengths=spk.lengthscale_array(S))


def _fit_control_arm(state: _LoopState, t: int, splits, y_std) -> ArmModel:
    cfg = state.config
    X = state.X_norm()
    fit_idx = splits[0][0] if splits is not None else np.arange(state.n)
    X_fit, y_fit = X[fit_idx], y_std[fit_idx]

    def objective(ls):
        params = ArdKernelParams(ls, cfg.signal_variance, cfg.noise_variance)
        return gp_log_marginal_likelihood(gp_fit(X_fit, y_fit, params))

    result = optimize_hyperparams(
        objective,
        bounds=[cfg.lengthscale_bounds] * cfg.dim,
        seed=substream(cfg.seed, STREAM_OPT, mode_salt(cfg.mode), t, SLOT_CONTROL),
        n_starts=cfg.hyperopt_starts,
        maxfev=cfg.hyperopt_maxfev,
        warm_start=state.warm_control,
    )
    state.warm_control = result.params
    params = ArdKernelParams(result.params, cfg.signal_variance, cfg.noise_variance)
    pred_lik = None
    if splits is not None:
        scores = []
        for fit_k, hold_k in splits:
            post_k = gp_fit(X[fit_k], y_std[fit_k], params)
            scores.append(
                gp_predictive_log_likelihood(post_k, X[hold_k], y_std[hold_k])
            )
        pred_lik = float(np.mean(scores))
    full_post = gp_fit(X, y_std, params)
    return ArmModel(kind="control", posterior=full_post, params=params, pred_likelihood=pred_lik)


def _fit_human_arm(
    state: _LoopState, t: int, splits, y_std, aug: _Augmentation
) -> ArmModel:
    cfg = state.config
    X = state.X_norm()
    fit_idx = splits[0][0] if splits is not None else np.arange(state.n)
    F, S = aug.features(X)
    coords = np.concatenate([X, F], axis=1)

    def build(theta):
        return SpatialKernelParams(base_lengthscales=theta[: cfg.dim], alpha=theta[cfg.dim])

    # Fast objective: with per-iteration-fixed features the augmented-dim
    # prefactor is independent of alpha and the exponent separates into a
    # base part scaled by the lengthscales and a fixed part scaled by
    # 1/alpha^2 (see SpatialKernelParams; regression-tested against the
    # direct kernel matrix).
    floor = SpatialKernelParams(np.ones(cfg.dim), 1.0).sigma_floor
    s_fit = np.maximum(S[fit_idx], floor)
    D2_base = pairwise_sqdists(X[fit_idx])
    sa2 = s_fit[:, None, :] ** 2 + s_fit[None, :, :] ** 2
    D2_aug = pairwise_sqdists(F[fit_idx])
    T = np.sum(D2_aug / sa2, axis=-1)
    P = np.prod(np.sqrt(2.0 * s_fit[:, None, :] * s_fit[None, :, :] / sa2), axis=-1)
    y_fit = y_std[fit_idx]

    def objective(theta):
        ls, alpha = theta[: cfg.dim], theta[cfg.dim]
        expo = (D2_base @ (0.5 / ls**2)) + T / (alpha * alpha)
        K = P * np.exp(-expo)
        return log_marginal_from_gram(K, y_fit, cfg.noise_variance)

    bounds = [cfg.lengthscale_bounds] * cfg.dim + [cfg.alpha_bounds]
    result = optimize_hyperparams(
        objective,
        bounds=bounds,
        seed=substream(cfg.seed, STREAM_OPT, mode_salt(cfg.mode), t, SLOT_HUMAN),
        n_starts=cfg.hyperopt_starts,
        maxfev=cfg.hyperopt_maxfev,
        warm_start=state.warm_human,
    )
    state.warm_human = result.params
    spk = build(result.params)
    pred_lik = None
    if splits is not None:
        scores = []
        for fit_k, hold_k in splits:
            inputs_fit = AugmentedInputs(coords[fit_k], spk.lengthscale_array(S[fit_k]))
            post_k = gp_fit(inputs_fit, y_std[fit_k], spk, noise_variance=cfg.noise_variance)
            inputs_hold = AugmentedInputs(coords[hold_k], spk.lengthscale_array(S[hold_k]))
            scores.append(
                gp_predictive_log_likelihood(post_k, inputs_hold, y_std[hold_k])
            )
        pred_lik = float(np.mean(scores))
    full_inputs = AugmentedInputs(coords, spk.lengthscale_array(S))
    full_post = gp_fit(full_inputs, y_std, spk, noise_variance=cfg.noise_variance)
    return ArmModel(kind="human", posterior=full_post, params=spk, pred_likelihood=pred_lik)


def _candidate_grid(state: _LoopState, t: int) -> tuple[CandidateGrid, Optional[np.ndarray]]:
    """Fresh quasi-random grid, or the not-yet-evaluated pool rows in
    discrete-candidate mode (returned with their pool indices)."""
    cfg = state.config
    if state.pool is None:
        return make_grid(cfg.dim, cfg.resolved_grid_size(), substream(cfg.seed, STREAM_GRID, mode_salt(cfg.mode), t)), None
    remaining = np.array(
        [i for i in range(state.pool.shape[0]) if i not in set(state.pool_indices)], dtype=int
    )
    if remaining.size == 0:
        remaining = np.arange(state.pool.shape[0])
    points = state.space.normalize(state.pool[remaining])
    return CandidateGrid(points=points), remaining


def _holdout_splits(state: _LoopState, t: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded (fit, holdout) index splits for this iteration; the first
    one doubles as the hyperparameter-fitting subset."""
    cfg = state.config
    n = state.n
    n_hold = max(1, math.ceil(cfg.holdout_fraction * n))
    splits = []
    for k in range(max(1, cfg.selection_splits)):
        rng = np.random.default_rng(
            substream(cfg.seed, STREAM_SPLIT, mode_salt(cfg.mode), t, k)
        )
        hold = np.sort(rng.choice(n, size=n_hold, replace=False))
        fit = np.setdiff1d(np.arange(n), hold)
        splits.append((fit, hold))
    return splits


def _params_dict(arm: ArmModel) -> Optional[dict]:
    if arm is None or arm.params is None:
        return None
    p = arm.params
    if isinstance(p, ArdKernelParams):
        return {"lengthscales": _vec(p.lengthscales)}
    if isinstance(p, SpatialKernelParams):
        return {"lengthscales": _vec(p.base_lengthscales), "alpha": _f(p.alpha)}
    return None


def engine_loop(
    config: LoopConfig, trace: Optional[RunTrace] = None
) -> Generator[OracleRequest, dict, RunTrace]:
    """Generator form of the optimization loop.

    Yields :class:`OracleRequest` bundles and expects ``send()`` with a
    dict mapping each query id to its answer. Returns the completed
    :class:`RunTrace` via ``StopIteration.value``; when a ``trace`` is
    passed in, records are appended to it live, so callers keep the
    partial trace even if the loop never finishes.
    """
    cfg = config
    state = _LoopState(cfg)
    if trace is None:
        trace = RunTrace()
    t_init = cfg.resolved_t_init()
    budget = cfg.resolved_budget()

    # Initial designs: uniform in the unit cube (continuous spaces) or a
    # uniform draw without replacement from the candidate pool.
    rng_init = np.random.default_rng(substream(cfg.seed, STREAM_INIT))
    if state.pool is None:
        U = rng_init.random((t_init, cfg.dim))
        init_raw = state.space.denormalize(U)
    else:
        chosen = rng_init.choice(state.pool.shape[0], size=t_init, replace=False)
        state.pool_indices.extend(int(i) for i in chosen)
        init_raw = state.pool[chosen]
    state.X_raw.extend(np.asarray(row, dtype=float) for row in init_raw)

    obs_queries = [
        ObservationQuery(qid=f"obs-{i}", eval_index=i, x=tuple(_vec(x)))
        for i, x in enumerate(state.X_raw)
    ]
    cmp_queries = _comparison_queries(state, None) if cfg.uses_preferences() else []
    answers = yield OracleRequest(observations=tuple(obs_queries), comparisons=tuple(cmp_queries))
    for q in obs_queries:
        ans = answers[q.qid]
        state.y.append(_f(ans.value))
        state.f_true.append(None if ans.true_value is None else _f(ans.true_value))
    if cmp_queries:
        _ingest_comparisons(state, cmp_queries, answers)

    inc_x, inc_y = state.incumbent()
    trace.append(
        {
            "type": "init",
            "t": t_init,
            "xs": [_vec(x) for x in state.X_raw],
            "ys": [_f(v) for v in state.y],
            "incumbent_x": _vec(inc_x),
            "incumbent_y": _f(inc_y),
            "regret": state.regret(),
            "initial_pairs_per_property": (
                t_init * (t_init - 1) // 2 if cfg.uses_preferences() else 0
            ),
        }
    )

    for t in range(t_init + 1, budget + 1):
        rank_models, rank_ok = ([], True)
        aug = None
        if cfg.uses_preferences():
            rank_models, rank_ok = _fit_rank_models(state, t)
            aug = _build_augmentation(state, rank_models)

        y_std, _, _ = standardize(state.y)
        human_arm = ArmModel("human", None, None, None)
        control_arm = ArmModel("control", None, None, None)
        if cfg.mode == "boap":
            splits = _holdout_splits(state, t)
            control_arm = _fit_control_arm(state, t, splits, y_std)
            human_arm = _fit_human_arm(state, t, splits, y_std, aug)
            arm = select_arm(human_arm, control_arm) if rank_ok else "control"
        elif cfg.mode == "boap_oa":
            human_arm = _fit_human_arm(state, t, None, y_std, aug)
            arm = "human"
        else:  # bo_ts / bo_ei: plain GP on raw inputs, full-data fit
            control_arm = _fit_control_arm(state, t, None, y_std)
            arm = "control"

        grid, pool_map = _candidate_grid(state, t)
        chosen = human_arm if arm == "human" else control_arm
        if arm == "human":
            spk = chosen.params
            query_inputs = _augmented_inputs(grid.points, aug, spk)
        else:
            query_inputs = grid.points

        if cfg.mode == "bo_ei":
            ei = expected_improvement(chosen.posterior, query_inputs, float(np.max(y_std)))
            pick = int(np.argmax(ei))
        else:
            # Thompson sampling happens in the chosen arm's input space:
            # grid points are mapped through the rank GPs for the human arm.
            sample = thompson_sample_inputs(
                chosen.posterior, query_inputs, grid.size, substream(cfg.seed, STREAM_TS, mode_salt(cfg.mode), t)
            )
            pick = sample.argmax_idx

        if pool_map is not None:
            pool_idx = int(pool_map[pick])
            state.pool_indices.append(pool_idx)
            x_raw = state.pool[pool_idx]
        else:
            x_raw = state.space.denormalize(grid.points[pick])

        new_index = state.n
        state.X_raw.append(np.asarray(x_raw, dtype=float))
        obs_q = ObservationQuery(qid=f"obs-{new_index}", eval_index=new_index, x=tuple(_vec(x_raw)))
        cmp_qs = _comparison_queries(state, new_index) if cfg.uses_preferences() else []
        answers = yield OracleRequest(observations=(obs_q,), comparisons=tuple(cmp_qs))
        ans = answers[obs_q.qid]
        state.y.append(_f(ans.value))
        state.f_true.append(None if ans.true_value is None else _f(ans.true_value))
        if cmp_qs:
            _ingest_comparisons(state, cmp_qs, answers)

        inc_x, inc_y = state.incumbent()
        trace.append(
            {
                "type": "step",
                "t": t,
                "arm": arm,
                "x": _vec(x_raw),
                "y": _f(state.y[-1]),
                "f_true": None if state.f_true[-1] is None else _f(state.f_true[-1]),
                "incumbent_x": _vec(inc_x),
                "incumbent_y": _f(inc_y),
                "regret": state.regret(),
                "pred_likelihood_human": None
                if human_arm.pred_likelihood is None
                else _f(human_arm.pred_likelihood),
                "pred_likelihood_control": None
                if control_arm.pred_likelihood is None
                else _f(control_arm.pred_likelihood),
                "params_human": _params_dict(human_arm),
                "params_control": _params_dict(control_arm),
                "rank_gps_converged": bool(rank_ok),
                "pairs_per_property": [len(p) for p in state.pairs],
            }
        )

    inc_x, inc_y = state.incumbent()
    trace.append(
        {
            "type": "summary",
            "mode": cfg.mode,
            "seed": int(cfg.seed),
            "dim": int(cfg.dim),
            "t_init": t_init,
            "budget": budget,
            "n_evals": state.n,
            "n_properties": int(cfg.n_properties),
            "noise_variance": _f(cfg.noise_variance),
            "pref_noise": _f(cfg.pref_noise),
            "signal_variance": _f(cfg.signal_variance),
            "lengthscale_bounds": [_f(v) for v in cfg.lengthscale_bounds],
            "alpha_bounds": [_f(v) for v in cfg.alpha_bounds],
            "best_x": _vec(inc_x),
            "best_y": _f(inc_y),
            "final_regret": state.regret(),
        }
    )
    return trace


def run(config: LoopConfig, oracle) -> RunTrace:
    """Drive the loop to completion with an in-process oracle.

    ``oracle.answer(request)`` must return a dict mapping each query id in
    the request to an :class:`ObservationAnswer` / :class:`ComparisonAnswer`.
    Oracle failures abort the run; the partial trace rides on the raised
    :class:`EngineError`.
    """
    trace = RunTrace()
    gen = engine_loop(config, trace)
    answers = None
    while True:
        try:
            request = gen.send(answers) if answers is not None else next(gen)
        except StopIteration as stop:
            return stop.value
        try:
            answers = oracle.answer(request)
        except Exception as exc:  # noqa: BLE001 - oracle faults become aborted runs
            gen.close()
            raise EngineError(f"oracle failed: {exc}", trace) from exc
