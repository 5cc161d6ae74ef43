"""Figure rendering for experiment results: regret curves with standard
error bands and a final-regret comparison, written next to the delimited
summaries."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import aggregate_curve, load_results

_COLORS = {
    "boap": "tab:blue",
    "boap_oa": "tab:cyan",
    "boap_ia": "tab:purple",
    "boap_np": "tab:olive",
    "bo_ts": "tab:orange",
    "bo_ei": "tab:green",
}


def render_report(results_dir, out_dir=None, dpi: int = 150) -> list[str]:
    """Render regret-vs-iteration curves (mean with SE band per method)
    and a final-regret bar chart; returns the written file paths."""
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    traces = load_results(results_dir)
    if not traces:
        raise FileNotFoundError(f"no traces found under {results_dir}")
    curves = {m: aggregate_curve(m, t) for m, t in traces.items()}

    written = []
    fig, ax = plt.subplots(figsize=(7.0, 4.4))
    positive = True
    for method, curve in sorted(curves.items()):
        if any(v is None for v in curve.mean):
            continue
        mean = np.asarray(curve.mean, dtype=float)
        se = np.asarray(curve.stderr, dtype=float)
        its = np.asarray(curve.iterations)
        color = _COLORS.get(method)
        ax.plot(its, mean, label=method, color=color, lw=1.8)
        ax.fill_between(its, mean - se, mean + se, color=color, alpha=0.2, lw=0)
        positive = positive and bool(np.all(mean - se > 0))
    if positive:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean simple regret")
    ax.legend(frameon=False, fontsize=9)
    ax.spines[["top", "right"]].set_visible(False)
    fig.tight_layout()
    path = out_dir / "regret_curves.png"
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    written.append(str(path))

    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    methods = sorted(curves)
    finals = [curves[m].final_mean for m in methods]
    errs = [curves[m].final_stderr for m in methods]
    bars = ax.bar(
        methods,
        finals,
        yerr=errs,
        capsize=4,
        color=[_COLORS.get(m, "tab:gray") for m in methods],
    )
    if all(f is not None and f > 0 for f in finals):
        ax.set_yscale("log")
    ax.set_ylabel("final mean simple regret")
    ax.spines[["top", "right"]].set_visible(False)
    fig.tight_layout()
    path = out_dir / "final_regret.png"
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    written.append(str(path))
    return written
