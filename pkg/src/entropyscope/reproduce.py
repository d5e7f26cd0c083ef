"""Bundled single-qubit experiments: sampling convergence, a four-state
batch, and noise-robustness sweeps.

Each driver writes versioned CSV files and renders companion figures next
to them. The experiment names fig3/fig4/fig5 are the stable CLI tokens for
the three studies.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .estimator import EstimatorConfig, estimate_renyi, estimate_von_neumann, noise_sweep
from .states import DensityMatrix, renyi_exact, validate_state, von_neumann_exact
from . import plots

# randomly generated single-qubit demo states (eigenvalues all above 0.35)
DEMO_STATE = validate_state([[0.48786, 0.0094], [0.0094, 0.51214]])
NOISE_INPUT_STATE = validate_state([[0.5398, -0.1217], [-0.1217, 0.4602]])
BATCH_STATES = (
    validate_state([[0.37336237, -0.02597119], [-0.02597119, 0.62663763]]),
    validate_state([[0.42050704, -0.08174482], [-0.08174482, 0.57949296]]),
    validate_state([[0.58221067, -0.04587666], [-0.04587666, 0.41778933]]),
    validate_state([[0.42932114, -0.02696812], [-0.02696812, 0.57067886]]),
)

NOISE_LEVELS = (0.0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.15)
CONVERGENCE_EPSILONS = (0.2, 0.4)


def _csv_open(path: Path, schema: str, seed: int):
    fh = open(path, "w", newline="")
    fh.write(f"# schema: entropyscope/{schema} v1\n")
    fh.write(f"# seed: {seed}\n")
    return fh


def _running_estimates(report) -> np.ndarray:
    """Per-draw running estimate recovered from the report records."""
    values = np.array([r.value for r in report.records])
    cummean = np.cumsum(values) / np.arange(1, len(values) + 1)
    if report.target == "vn":
        return report.plan_l1_norm * cummean
    arg = 1.0 + report.plan_l1_norm * cummean
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.log(arg) / (1.0 - report.alpha)
    out[arg <= 0] = np.nan
    return out


def _grid_seeds(seed: int, count: int) -> list:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def run_convergence(
    out_dir,
    seed: int = 2,
    repeats: int = 20,
    draws: int = 100,
    level: str = "matrix",
    render: bool = True,
) -> dict:
    """Running-mean estimates on the demo state for two error budgets.

    Writes fig3.csv with one row per (entropy, epsilon, repeat, draw) and,
    when render is set, fig3.png with the repeat-averaged curves.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracles = {"vn": von_neumann_exact(DEMO_STATE), "renyi": renyi_exact(DEMO_STATE, 2.0)}
    seeds = _grid_seeds(seed, 2 * len(CONVERGENCE_EPSILONS) * repeats)
    curves = {}
    seed_iter = iter(seeds)
    for entropy in ("vn", "renyi"):
        for eps in CONVERGENCE_EPSILONS:
            runs = []
            for _ in range(repeats):
                cfg = EstimatorConfig(
                    epsilon=eps,
                    delta=0.1,
                    lambda_floor=0.35,
                    alpha=2.0 if entropy == "renyi" else None,
                    seed=next(seed_iter),
                    level=level,
                    shot_mode="sampled",
                    num_samples=draws,
                )
                report = (
                    estimate_renyi(DEMO_STATE, cfg)
                    if entropy == "renyi"
                    else estimate_von_neumann(DEMO_STATE, cfg)
                )
                runs.append(_running_estimates(report))
            curves[(entropy, eps)] = np.vstack(runs)

    csv_path = out_dir / "fig3.csv"
    with _csv_open(csv_path, "convergence", seed) as fh:
        writer = csv.writer(fh)
        writer.writerow(["entropy", "epsilon", "repeat", "draw", "running_estimate"])
        for (entropy, eps), mat in curves.items():
            for rep_idx, row in enumerate(mat):
                for draw_idx, value in enumerate(row):
                    writer.writerow(
                        [entropy, eps, rep_idx + 1, draw_idx + 1, _fmt(value)]
                    )
    outputs = {"csv": csv_path}
    if render:
        outputs["figure"] = plots.convergence_figure(curves, oracles, out_dir / "fig3.png")
    return outputs


def run_state_batch(
    out_dir,
    seed: int = 2,
    repeats: int = 20,
    draws: int = 100,
    level: str = "matrix",
    render: bool = True,
) -> dict:
    """Oracle, series value, and repeated estimates for the four demo states."""
    from .series import build_plan_renyi, build_plan_vn, eval_plan_exact, power_trace_budget
    from .states import purity_exact

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    eps = 0.2
    seeds = _grid_seeds(seed, 2 * len(BATCH_STATES) * repeats)
    seed_iter = iter(seeds)
    rows = []
    for entropy in ("vn", "renyi"):
        for state_idx, rho in enumerate(BATCH_STATES):
            if entropy == "vn":
                oracle = von_neumann_exact(rho)
                series_value = eval_plan_exact(build_plan_vn(0.35, eps), rho)
            else:
                oracle = renyi_exact(rho, 2.0)
                xi = power_trace_budget(2.0, eps, purity_exact(rho))
                f_value = eval_plan_exact(build_plan_renyi(2.0, 0.35, xi), rho)
                series_value = math.log(f_value) / (1.0 - 2.0)
            estimates = []
            for _ in range(repeats):
                cfg = EstimatorConfig(
                    epsilon=eps,
                    delta=0.1,
                    lambda_floor=0.35,
                    alpha=2.0 if entropy == "renyi" else None,
                    seed=next(seed_iter),
                    level=level,
                    shot_mode="sampled",
                    num_samples=draws,
                )
                report = (
                    estimate_renyi(rho, cfg) if entropy == "renyi" else estimate_von_neumann(rho, cfg)
                )
                estimates.append(report.estimate)
            rows.append(
                {
                    "entropy": entropy,
                    "state": f"rho{state_idx + 1}",
                    "oracle": oracle,
                    "series_value": series_value,
                    "mean_estimate": float(np.mean(estimates)),
                    "std_estimate": float(np.std(estimates, ddof=1)),
                    "repeats": repeats,
                    "draws": draws,
                }
            )

    csv_path = out_dir / "fig4.csv"
    with _csv_open(csv_path, "state-batch", seed) as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["entropy", "state", "oracle", "series_value", "mean_estimate", "std_estimate", "repeats", "draws"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["entropy"],
                    row["state"],
                    _fmt(row["oracle"]),
                    _fmt(row["series_value"]),
                    _fmt(row["mean_estimate"]),
                    _fmt(row["std_estimate"]),
                    row["repeats"],
                    row["draws"],
                ]
            )
    outputs = {"csv": csv_path}
    if render:
        outputs["figure"] = plots.state_batch_figure(rows, out_dir / "fig4.png")
    return outputs


def run_noise_robustness(
    out_dir,
    seed: int = 2,
    level: str = "matrix",
    levels=NOISE_LEVELS,
    render: bool = True,
) -> dict:
    """Noise sweeps of both channels for both entropies on the noisy-input state."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_rows = {}
    outputs = {}
    for entropy in ("vn", "renyi"):
        for family in ("amplitude_damping", "depolarizing"):
            cfg = EstimatorConfig(
                epsilon=0.2,
                delta=0.1,
                lambda_floor=0.35,
                alpha=2.0 if entropy == "renyi" else None,
                seed=seed,
                level=level,
                shot_mode="sampled",
            )
            rows = noise_sweep(NOISE_INPUT_STATE, family, list(levels), cfg)
            all_rows[(entropy, family)] = rows
            csv_path = Path(out_dir) / f"fig5_{entropy}_{family}.csv"
            with _csv_open(csv_path, "noise-sweep", seed) as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    ["p", "estimate", "oracle_noisy", "oracle_clean", "stderr", "copies", "gates"]
                )
                for row in rows:
                    writer.writerow(
                        [
                            _fmt(row.p),
                            _fmt(row.estimate),
                            _fmt(row.oracle_noisy),
                            _fmt(row.oracle_clean),
                            _fmt(row.stderr),
                            row.copies,
                            row.gates,
                        ]
                    )
            outputs[f"csv_{entropy}_{family}"] = csv_path
    if render:
        outputs["figure"] = plots.noise_sweep_figure(all_rows, Path(out_dir) / "fig5.png")
    return outputs


EXPERIMENTS = {
    "fig3": run_convergence,
    "fig4": run_state_batch,
    "fig5": run_noise_robustness,
}


def _fmt(x) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))
