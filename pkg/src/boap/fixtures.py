"""Deterministic fixture generation: small dataset files shaped like the
battery case studies, a planted-optimum pool for end-to-end checks, and
the brute-force regret references for the synthetic benchmarks."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .oracles import OBJECTIVE_NAMES, compute_true_optimum, get_objective

TRUE_OPTIMA_GRID = {"benchmark1d": 200001, "rosenbrock3d": 81, "griewank5d": 21}


def _write_csv(path: Path, header: list[str], rows: list[list[float]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_schema(path: Path, design, objective, properties) -> None:
    path.write_text(
        "# column-role map: design variables, objective, preference properties\n"
        f"design = {', '.join(design)}\n"
        f"objective = {objective}\n"
        f"properties = {', '.join(properties)}\n"
    )


def write_calendering_fixture(out_dir, seed: int = 20240201, n_settings: int = 55) -> dict:
    """Electrode-calendering-shaped pool: 8 process variables, an active
    surface objective, and tortuosity/porosity property columns. A handful
    of settings appear twice (with jittered outputs) to exercise the
    duplicate-averaging rule."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    design_cols = [
        "cal_pressure",
        "cbd_fraction",
        "init_porosity",
        "active_fraction",
        "binder_fraction",
        "coating_speed",
        "mass_loading",
        "solid_content",
    ]
    X = rng.random((n_settings, len(design_cols)))
    tau_liq = 1.2 + 0.8 * X[:, 0] + 0.5 * X[:, 2] ** 2 + 0.05 * rng.standard_normal(n_settings)
    porosity = 0.5 - 0.3 * X[:, 0] + 0.2 * X[:, 2] + 0.02 * rng.standard_normal(n_settings)
    active_surface = (
        60.0
        + 25.0 * np.exp(-4.0 * (X[:, 0] - 0.65) ** 2)
        + 10.0 * X[:, 3]
        - 8.0 * (X[:, 2] - 0.4) ** 2
        + 0.5 * rng.standard_normal(n_settings)
    )
    rows = []
    for i in range(n_settings):
        rows.append(list(X[i]) + [active_surface[i], tau_liq[i], porosity[i]])
    # duplicate the first five settings with re-measured outputs
    for i in range(5):
        rows.append(
            list(X[i])
            + [
                active_surface[i] + 0.4 * rng.standard_normal(),
                tau_liq[i] + 0.03 * rng.standard_normal(),
                porosity[i] + 0.01 * rng.standard_normal(),
            ]
        )
    header = design_cols + ["active_surface", "tau_liquid", "output_porosity"]
    data_path = out_dir / "calendering.csv"
    schema_path = out_dir / "calendering.schema"
    _write_csv(data_path, header, rows)
    _write_schema(schema_path, design_cols, "active_surface", ["tau_liquid", "output_porosity"])
    return {"data": str(data_path), "schema": str(schema_path)}


def write_manufacturing_fixture(out_dir, seed: int = 20240202, n_cells: int = 48) -> dict:
    """Cell-manufacturing-shaped pool: 12 process variables (anode
    thickness and active mass double as the preference properties) and a
    discharge-retention endurance objective."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    design_cols = [
        "mix_time",
        "mix_speed",
        "solvent_ratio",
        "coating_gap",
        "coating_speed",
        "dry_temp",
        "dry_time",
        "cal_pressure",
        "cal_temp",
        "slurry_viscosity",
        "anode_thickness",
        "active_mass",
    ]
    X = rng.random((n_cells, len(design_cols)))
    endurance = (
        0.82
        + 0.1 * np.exp(-6.0 * (X[:, 10] - 0.55) ** 2)
        + 0.05 * X[:, 11]
        - 0.04 * (X[:, 5] - 0.5) ** 2
        + 0.01 * rng.standard_normal(n_cells)
    )
    rows = [list(X[i]) + [endurance[i]] for i in range(n_cells)]
    header = design_cols + ["endurance"]
    data_path = out_dir / "manufacturing.csv"
    schema_path = out_dir / "manufacturing.schema"
    _write_csv(data_path, header, rows)
    _write_schema(schema_path, design_cols, "endurance", ["anode_thickness", "active_mass"])
    return {"data": str(data_path), "schema": str(schema_path)}


def write_planted_fixture(out_dir, seed: int = 20240203, n_rows: int = 100) -> dict:
    """100-row pool with a smooth objective, a unique planted optimum,
    and two property columns strongly correlated with the objective."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    d = 4
    center = np.array([0.62, 0.31, 0.55, 0.44])
    X = rng.random((n_rows, d))
    dist2 = np.sum((X - center) ** 2, axis=1)
    objective = 10.0 * np.exp(-3.0 * dist2)
    prop1 = objective + 0.2 * rng.standard_normal(n_rows)
    prop2 = -np.sqrt(dist2) + 0.05 * rng.standard_normal(n_rows)
    header = [f"x{i + 1}" for i in range(d)] + ["score", "prop_a", "prop_b"]
    rows = [list(X[i]) + [objective[i], prop1[i], prop2[i]] for i in range(n_rows)]
    data_path = out_dir / "planted.csv"
    schema_path = out_dir / "planted.schema"
    _write_csv(data_path, header, rows)
    _write_schema(schema_path, header[:d], "score", ["prop_a", "prop_b"])
    return {"data": str(data_path), "schema": str(schema_path)}


def write_true_optima(path) -> dict:
    """Brute-force + polish regret references for every synthetic
    benchmark, recorded with the grid resolution used."""
    records = {}
    for name in OBJECTIVE_NAMES:
        obj = get_objective(name, with_reference=False)
        records[name] = compute_true_optimum(obj, TRUE_OPTIMA_GRID[name])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(records, indent=2, sort_keys=True) + "\n")
    return records


def write_all(out_dir) -> dict:
    out_dir = Path(out_dir)
    result = {
        "calendering": write_calendering_fixture(out_dir),
        "manufacturing": write_manufacturing_fixture(out_dir),
        "planted": write_planted_fixture(out_dir),
    }
    return result
