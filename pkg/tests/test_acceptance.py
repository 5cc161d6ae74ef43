"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured evidence.

The statistical criteria run the full experiment protocol on a pinned
master seed (shared per-repeat run seeds across methods, paired
comparisons); tolerances are asserted exactly as stated, nothing is
calibrated at test time.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from boap.acquisition import make_grid, thompson_sample
from boap.engine import (
    MODES,
    SLOT_CONTROL,
    STREAM_GRID,
    STREAM_INIT,
    STREAM_OPT,
    STREAM_TS,
    LoopConfig,
    ObservationQuery,
    RunTrace,
    run,
    substream,
)
from boap.gp import gp_fit, gp_log_marginal_likelihood, gp_predict, standardize
from boap.harness import ExperimentConfig, build_run, run_experiment
from boap.hyperopt import optimize_hyperparams
from boap.kernels import (
    ArdKernelParams,
    ard_kernel_matrix,
    spatial_kernel,
    spatial_kernel_matrix,
)
from boap.oracles import SimulatedOracle, get_objective
from boap.rankgp import (
    PreferencePair,
    PreferenceSet,
    fit_map,
    likelihood_derivatives,
    pairwise_log_likelihood,
    rank_gp_log_likelihood,
    rank_predict,
)
from boap.searchspace import SearchSpace

MASTER_SEED = 20240515
FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def report(name: str, detail: str) -> None:
    print(f"ACCEPTANCE {name}: PASS ({detail})")


# ---------------------------------------------------------------------
# shared experiment fixtures (module scope: run once, reused)
# ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def head_to_head(tmp_path_factory):
    out = tmp_path_factory.mktemp("h2h")
    config = ExperimentConfig(
        methods=["boap", "boap_oa", "bo_ts"],
        objective="benchmark1d",
        repeats=10,
        seed=MASTER_SEED,
        hyperopt_maxfev=40,
        output_dir=str(out),
    )
    started = time.perf_counter()
    result = run_experiment(config, parallelism=4)
    elapsed = time.perf_counter() - started
    assert not result["failures"]
    return {"config": config, "curves": result["curves"], "elapsed": elapsed}


@pytest.fixture(scope="module")
def robustness_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("robust")
    config = ExperimentConfig(
        methods=["boap_ia", "boap_np", "bo_ts"],
        objective="benchmark1d",
        repeats=10,
        seed=MASTER_SEED,
        flip_prob=0.3,
        hyperopt_maxfev=40,
        output_dir=str(out),
    )
    started = time.perf_counter()
    result = run_experiment(config, parallelism=4)
    elapsed = time.perf_counter() - started
    assert not result["failures"]
    return {"config": config, "curves": result["curves"], "elapsed": elapsed}


# ---------------------------------------------------------------------
# criterion 1: derivative correctness
# ---------------------------------------------------------------------


def test_derivative_correctness():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    checked = 0
    for _ in range(20):
        n = int(rng.integers(3, 7))
        n_pairs = int(rng.integers(1, 11))
        pairs = []
        for _ in range(n_pairs):
            i, j = rng.choice(n, size=2, replace=False)
            pairs.append(PreferencePair(int(i), int(j)))
        omega = rng.standard_normal(n)
        pref_noise = 0.1
        b, C = likelihood_derivatives(omega, pairs, pref_noise)

        f = lambda om: pairwise_log_likelihood(om, pairs, pref_noise)
        h = 1e-5
        grad_fd = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            grad_fd[i] = (f(omega + e) - f(omega - e)) / (2 * h)
        hess_fd = np.zeros((n, n))
        hh = 1e-4
        for i in range(n):
            for j in range(n):
                ei, ej = np.zeros(n), np.zeros(n)
                ei[i], ej[j] = hh, hh
                hess_fd[i, j] = (
                    f(omega + ei + ej)
                    - f(omega + ei - ej)
                    - f(omega - ei + ej)
                    + f(omega - ei - ej)
                ) / (4 * hh * hh)
        scale_b = max(1.0, float(np.max(np.abs(grad_fd))))
        scale_c = max(1.0, float(np.max(np.abs(hess_fd))))
        np.testing.assert_allclose(b, grad_fd, atol=1e-4 * scale_b)
        np.testing.assert_allclose(C, -hess_fd, atol=1e-4 * scale_c)
        checked += 1
    elapsed = time.perf_counter() - started
    assert checked == 20
    assert elapsed < 5.0
    report("derivative-correctness", f"20 problems, rel 1e-4, {elapsed:.2f}s")


# ---------------------------------------------------------------------
# criterion 2: MAP ordering on consistent chains
# ---------------------------------------------------------------------


def test_map_ordering_on_consistent_chains():
    started = time.perf_counter()
    rng = np.random.default_rng(202)
    converged = 0
    for _ in range(50):
        n = int(rng.integers(3, 9))
        d = int(rng.integers(1, 3))
        X = rng.random((n, d))
        for _ in range(200):
            D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
            np.fill_diagonal(D, np.inf)
            if D.min() >= 0.05:
                break
            X = rng.random((n, d))
        w = rng.standard_normal(d)
        b0 = rng.standard_normal()
        amp = rng.uniform(0.5, 3.0)
        utility = lambda x: float(w @ x + amp * np.sin(2 * np.pi * (x[0] + b0)))
        order = np.argsort([-utility(x) for x in X])
        pairs = [PreferencePair(int(order[k]), int(order[k + 1])) for k in range(n - 1)]
        model = fit_map(
            PreferenceSet(X, pairs),
            ArdKernelParams([0.1] * d, 1.0, 0.0),
            pref_noise=0.1,
            tol=1e-6,
            max_iter=100,
        )
        converged += model.converged
        for p in pairs:
            assert model.omega_map[p.winner_idx] > model.omega_map[p.loser_idx]
    elapsed = time.perf_counter() - started
    assert converged >= 49
    assert elapsed < 30.0
    report(
        "map-ordering", f"50/50 chains ordered, {converged}/50 converged, {elapsed:.2f}s"
    )


# ---------------------------------------------------------------------
# criterion 3: dense-algebra oracle equivalence
# ---------------------------------------------------------------------


def test_dense_oracle_equivalence():
    rng = np.random.default_rng(303)
    log2pi = math.log(2 * math.pi)
    for n in (2, 4, 6, 8):
        d = int(rng.integers(1, 3))
        X = rng.random((n, d))
        y = rng.standard_normal(n)
        params = ArdKernelParams(rng.uniform(0.2, 1.0, d), 1.0, 0.1)
        post = gp_fit(X, y, params)
        Xq = rng.random((5, d))
        mu, var = gp_predict(post, Xq)
        Kn = ard_kernel_matrix(X, X, params) + 0.1 * np.eye(n)
        A = np.linalg.inv(Kn)
        k = ard_kernel_matrix(X, Xq, params)
        np.testing.assert_allclose(mu, k.T @ A @ y, atol=1e-8)
        np.testing.assert_allclose(
            var, 1.0 - np.einsum("ij,jk,ki->i", k.T, A, k), atol=1e-8
        )
        lml_dense = -0.5 * y @ A @ y - 0.5 * np.linalg.slogdet(Kn)[1] - 0.5 * n * log2pi
        assert gp_log_marginal_likelihood(post) == pytest.approx(lml_dense, abs=1e-8)

        # rank GP: likelihood and predictive mean against explicit algebra
        Xr = np.sort(rng.random((n, 1)), axis=0) + np.arange(n)[:, None] * 1e-3
        pairs = [PreferencePair(i, i + 1) for i in range(n - 1)]
        rparams = ArdKernelParams([0.4], 1.0, 0.0)
        model = fit_map(PreferenceSet(Xr, pairs), rparams, pref_noise=0.1)
        Kt = ard_kernel_matrix(Xr, Xr, rparams) + 0.1 * np.eye(n)
        om = model.omega_map
        expected = (
            -0.5 * om @ np.linalg.inv(Kt) @ om
            - 0.5 * np.linalg.slogdet(Kt)[1]
            - 0.5 * n * log2pi
        )
        assert rank_gp_log_likelihood(model) == pytest.approx(expected, abs=1e-8)
        Xq1 = rng.random((4, 1))
        kq = ard_kernel_matrix(Xr, Xq1, rparams)
        mu_r, _ = rank_predict(model, Xq1)
        np.testing.assert_allclose(mu_r, kq.T @ np.linalg.inv(Kt) @ om, atol=1e-8)
    report("dense-oracle-equivalence", "n in {2,4,6,8}, tol 1e-8")


# ---------------------------------------------------------------------
# criterion 4: spatial kernel PSD + reduction
# ---------------------------------------------------------------------


def test_spatial_kernel_psd_and_reduction():
    rng = np.random.default_rng(404)
    min_eig = np.inf
    for _ in range(100):
        d = int(rng.integers(1, 5))
        X = rng.random((20, d))
        L = rng.uniform(0.05, 2.0, size=(20, d))
        K = spatial_kernel_matrix(X, L, X, L)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(K).min()))
    assert min_eig >= -1e-8

    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 5))
        x, xp = rng.random(d), rng.random(d)
        l = float(rng.uniform(0.1, 1.5))
        ls = np.full(d, l)
        closed_form = math.exp(-float(np.sum((x - xp) ** 2)) / (2 * l * l))
        worst = max(worst, abs(spatial_kernel(x, xp, ls, ls) - closed_form))
    assert worst <= 1e-12
    report(
        "spatial-kernel",
        f"min eig {min_eig:.2e} over 100 sets; reduction err {worst:.1e}",
    )


# ---------------------------------------------------------------------
# criterion 5: protocol constants honored
# ---------------------------------------------------------------------


@pytest.mark.parametrize("name,d", [("benchmark1d", 1), ("rosenbrock3d", 3), ("griewank5d", 5)])
def test_protocol_constants(name, d):
    obj = get_objective(name)
    config = ExperimentConfig(
        methods=["boap"],
        objective=name,
        repeats=1,
        seed=MASTER_SEED + d,
        hyperopt_maxfev=25,
        output_dir="unused",
    )
    loop, oracle = build_run(config, "boap", config.run_seeds()[0])
    trace = run(loop, oracle)
    summary = trace.summary()
    assert summary["dim"] == d
    assert summary["t_init"] == d + 3
    assert summary["budget"] == 10 * d + 5
    assert summary["n_evals"] == 10 * d + 5
    assert summary["signal_variance"] == 1.0
    assert summary["noise_variance"] == 0.1
    assert summary["pref_noise"] == 0.1
    assert summary["lengthscale_bounds"] == [0.1, 1.0]
    init = trace.records[0]
    assert init["initial_pairs_per_property"] == math.comb(d + 3, 2)
    for r in trace.step_records():
        assert 0.0 < r["params_human"]["alpha"] <= 2.0
    report(
        f"protocol-constants[{name}]",
        f"t'={d + 3}, T={10 * d + 5}, p0=C({d + 3},2)={math.comb(d + 3, 2)}, "
        "sigma_f^2=1, noise=0.1 both, alpha in (0,2]",
    )


# ---------------------------------------------------------------------
# criterion 6: engine bo_ts == standalone Thompson-sampling loop
# ---------------------------------------------------------------------


def standalone_ts_loop(seed, bounds, t_init, budget, oracle):
    """Independent implementation of the plain Thompson-sampling loop
    (initial designs -> per-iteration hyperparameter tuning on all data ->
    posterior sample over a fresh candidate grid -> evaluate argmax),
    following the documented seed-splitting rule."""
    space = SearchSpace.from_bounds(bounds)
    d = space.dim
    salt = MODES.index("bo_ts")
    rng_init = np.random.default_rng(substream(seed, STREAM_INIT))
    X_raw = [space.denormalize(u) for u in rng_init.random((t_init, d))]
    y = []
    for i, x in enumerate(X_raw):
        q = ObservationQuery(qid=f"obs-{i}", eval_index=i, x=tuple(float(v) for v in x))
        y.append(oracle.observe(q).value)
    suggestions = []
    warm = None
    for t in range(t_init + 1, budget + 1):
        y_std, _, _ = standardize(y)
        X_norm = space.normalize(np.asarray(X_raw))

        def lml(ls):
            params = ArdKernelParams(ls, 1.0, 0.1)
            return gp_log_marginal_likelihood(gp_fit(X_norm, y_std, params))

        res = optimize_hyperparams(
            lml,
            [(0.1, 1.0)] * d,
            seed=substream(seed, STREAM_OPT, salt, t, SLOT_CONTROL),
            n_starts=8,
            warm_start=warm,
        )
        warm = res.params
        post = gp_fit(X_norm, y_std, ArdKernelParams(res.params, 1.0, 0.1))
        grid = make_grid(d, 100 * d, substream(seed, STREAM_GRID, salt, t))
        sample = thompson_sample(post, grid, substream(seed, STREAM_TS, salt, t))
        x_new = space.denormalize(grid.points[sample.argmax_idx])
        x_new = np.atleast_1d(x_new)
        suggestions.append([float(v) for v in x_new])
        q = ObservationQuery(
            qid=f"obs-{len(y)}", eval_index=len(y), x=tuple(float(v) for v in x_new)
        )
        X_raw.append(x_new)
        y.append(oracle.observe(q).value)
    return suggestions


def test_engine_matches_standalone_ts():
    obj = get_objective("benchmark1d")
    bounds = [(float(lo), float(hi)) for lo, hi in zip(obj.space.lower, obj.space.upper)]
    seed = 424242
    budget = 4 + 20  # twenty optimization iterations
    loop = LoopConfig(
        dim=1,
        bounds=tuple(bounds),
        mode="bo_ts",
        n_properties=0,
        seed=seed,
        budget=budget,
        true_max=obj.true_max_value,
    )
    engine_trace = run(loop, SimulatedOracle(obj.fn, None, run_seed=seed))
    engine_xs = [r["x"] for r in engine_trace.step_records()]
    standalone_xs = standalone_ts_loop(
        seed, bounds, 4, budget, SimulatedOracle(obj.fn, None, run_seed=seed)
    )
    assert len(engine_xs) == 20
    assert engine_xs == standalone_xs  # bit-for-bit float equality
    report("engine-equivalence", "20 suggestions identical to standalone loop")


# ---------------------------------------------------------------------
# criteria 7-8: head-to-head ordering and robustness
# ---------------------------------------------------------------------


def test_head_to_head_ordering(head_to_head):
    curves = head_to_head["curves"]
    seeds = head_to_head["config"].run_seeds()
    mean_boap = curves["boap"].final_mean
    mean_oa = curves["boap_oa"].final_mean
    mean_ts = curves["bo_ts"].final_mean
    assert mean_boap <= mean_ts
    assert mean_oa <= mean_ts
    wins = sum(
        curves["boap"].per_seed[s][-1] < curves["bo_ts"].per_seed[s][-1] for s in seeds
    )
    assert wins >= 6
    assert head_to_head["elapsed"] < 600.0
    report(
        "head-to-head",
        f"means boap={mean_boap:.3f} oa={mean_oa:.3f} bo_ts={mean_ts:.3f}, "
        f"strict wins {wins}/10, {head_to_head['elapsed']:.0f}s",
    )


def test_robustness_to_bad_experts(head_to_head, robustness_runs):
    ts_mean = robustness_runs["curves"]["bo_ts"].final_mean
    ia_mean = robustness_runs["curves"]["boap_ia"].final_mean
    np_mean = robustness_runs["curves"]["boap_np"].final_mean
    assert ia_mean <= 1.5 * ts_mean
    assert np_mean <= 1.5 * ts_mean
    total = head_to_head["elapsed"] + robustness_runs["elapsed"]
    assert robustness_runs["elapsed"] < 900.0
    report(
        "robustness",
        f"ia={ia_mean:.3f}, np={np_mean:.3f} vs 1.5*bo_ts={1.5 * ts_mean:.3f}, "
        f"{total:.0f}s cumulative",
    )


# ---------------------------------------------------------------------
# criterion 9: discrete-candidate (dataset) mode
# ---------------------------------------------------------------------


def test_dataset_mode_finds_planted_optimum(tmp_path):
    data = FIXTURES / "planted.csv"
    schema = FIXTURES / "planted.schema"
    if not data.exists():
        from boap.fixtures import write_planted_fixture

        info = write_planted_fixture(tmp_path)
        data, schema = Path(info["data"]), Path(info["schema"])
    config = ExperimentConfig(
        methods=["boap"],
        dataset_path=str(data),
        dataset_schema=str(schema),
        repeats=10,
        seed=MASTER_SEED,
        hyperopt_maxfev=40,
        output_dir=str(tmp_path / "dataset_results"),
    )
    result = run_experiment(config, parallelism=4)
    assert not result["failures"]
    curve = result["curves"]["boap"]
    finals = [series[-1] for series in curve.per_seed.values()]
    found = sum(f == 0.0 for f in finals)
    # sanity on the protocol: 4 initial observations + 50 iterations
    any_trace = next(iter(curve.per_seed))
    assert len(curve.per_seed[any_trace]) == 51
    assert found >= 8
    report("dataset-mode", f"planted optimum found in {found}/10 seeds")


# ---------------------------------------------------------------------
# criterion 10: byte-identical determinism
# ---------------------------------------------------------------------


def test_trace_determinism(tmp_path):
    blobs = []
    for label in ("a", "b"):
        config = ExperimentConfig(
            methods=["boap", "bo_ts"],
            objective="benchmark1d",
            repeats=2,
            seed=90125,
            budget=8,
            hyperopt_maxfev=20,
            output_dir=str(tmp_path / label),
        )
        run_experiment(config)
        out = Path(config.output_dir)
        blobs.append(
            {
                p.relative_to(out).as_posix(): p.read_bytes()
                for p in sorted(out.rglob("seed_*.jsonl"))
            }
        )
    assert blobs[0].keys() == blobs[1].keys()
    for key in blobs[0]:
        assert blobs[0][key] == blobs[1][key]
    report("determinism", f"{len(blobs[0])} trace files byte-identical across reruns")
