"""Importance-sampling entropy estimators and resource accounting.

The estimators draw plan terms with probability proportional to |weight|,
evaluate each drawn term with the segmented interference circuit, and
average. Per-term circuit expectations are exact; statistical noise enters
only through the optional shot sampling, so bias and fluctuation can be
tested separately.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .circuits import ResourceTally, hadamard_test_expectation, sample_shots, estimate_purity_swap_test
from .exceptions import AlphaOutOfRange, InfeasibleBudget, NonpositiveArgument
from .series import (
    SeriesPlan,
    build_plan_renyi,
    build_plan_vn,
    generalized_binomial,
    power_trace_budget,
)
from .states import (
    DensityMatrix,
    amplitude_damping_channel,
    apply_channel,
    depolarizing_channel,
    purity_exact,
    renyi_exact,
    spectrum,
    von_neumann_exact,
)

LEVELS = ("matrix", "gate")
SHOT_MODES = ("exact_expectation", "sampled")
PURITY_SOURCES = ("oracle", "swap_test", "user")


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs shared by both estimators.

    num_samples overrides the Hoeffding-derived draw count when set (the
    reproduction experiments fix it to 100); enumerate_terms replaces
    sampling with a deterministic weighted sum over every plan term.
    """

    epsilon: float = 0.2
    delta: float = 0.1
    lambda_floor: float = 0.35
    alpha: float | None = None
    seed: int = 0
    level: str = "matrix"
    shot_mode: str = "sampled"
    purity_source: str = "oracle"
    purity_value: float | None = None
    purity_shots: int = 100_000
    num_samples: int | None = None
    enumerate_terms: bool = False
    copy_ceiling: int | None = None
    log_base: float = math.e

    def validate(self) -> None:
        for name in ("epsilon", "delta", "lambda_floor"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0,1), got {value}")
        if self.alpha is not None and (self.alpha <= 0 or self.alpha == 1):
            raise AlphaOutOfRange(f"alpha must be in (0,1) or (1,inf), got {self.alpha}")
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")
        if self.shot_mode not in SHOT_MODES:
            raise ValueError(f"shot_mode must be one of {SHOT_MODES}, got {self.shot_mode!r}")
        if self.purity_source not in PURITY_SOURCES:
            raise ValueError(
                f"purity_source must be one of {PURITY_SOURCES}, got {self.purity_source!r}"
            )
        if self.purity_source == "user" and self.purity_value is None:
            raise ValueError("purity_source 'user' requires purity_value")


@dataclass(frozen=True)
class TermRecord:
    """One evaluated draw (or one term in enumerate mode)."""

    s: int
    l: int
    t: float
    n_segments: int
    shots: int
    value: float  # sign-adjusted circuit estimate entering the mean


@dataclass(frozen=True)
class EstimateReport:
    """Full account of one estimation run; reproducible from its records."""

    target: str
    estimate: float
    stderr: float
    alpha: float | None
    n_qubits: int
    plan_taylor_order: int
    plan_degree: int
    plan_l1_norm: float
    window_count: int
    num_samples: int
    shots_per_sample: int
    power_trace_budget: float | None
    purity_used: float | None
    power_trace_estimate: float | None
    records: tuple
    tally: ResourceTally
    seed: int
    config: dict


class ImportanceSampler:
    """Cumulative distribution over plan terms with |weight| probabilities."""

    def __init__(self, plan: SeriesPlan):
        weights = plan.weights
        self.l1_norm = float(np.abs(weights).sum())
        if self.l1_norm <= 0:
            raise ValueError("plan has no weight to sample from")
        self.probabilities = np.abs(weights) / self.l1_norm
        self.cumulative = np.cumsum(self.probabilities)
        self.cumulative[-1] = 1.0
        self.signs = np.where(weights >= 0, 1.0, -1.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        return np.searchsorted(self.cumulative, u, side="right")


def sample_counts(l1_norm: float, eps_budget: float, delta: float, n_terms: int):
    """Hoeffding draw and shot counts at per-term precision eps_budget/l1.

    Two-sided Hoeffding for variables of range 2, with the failure budget
    split half to sampling and half (union-bounded over n_terms terms) to
    per-term measurement.
    """
    eps_prime = eps_budget / l1_norm
    n_draws = math.ceil(2 * math.log(4 / delta) / eps_prime**2)
    shots = math.ceil(2 * math.log(4 * n_terms / delta) / eps_prime**2)
    return n_draws, shots


def segment_count(t: float, eps_prime: float) -> int:
    """Number of time slices keeping the circuit bias below eps_prime."""
    return max(1, math.ceil(2 * t * t / eps_prime))


def _thread_count() -> int:
    raw = os.environ.get("ENTROPYSCOPE_THREADS", "").strip()
    if not raw:
        return 1
    return max(1, int(raw))


def _evaluate_distinct(rho, plan, indices, eps_prime, level):
    """Exact expectation and slice count per distinct |2s-l| among indices."""
    keys = {}
    for idx in indices:
        key = abs(int(2 * plan.s_index[idx] - plan.l_index[idx]))
        keys.setdefault(key, idx)

    def run(item):
        key, idx = item
        t = float(plan.times[idx])
        n_seg = segment_count(t, eps_prime)
        expectation, tally = hadamard_test_expectation(rho, t, n_seg, level=level)
        return key, (expectation, n_seg, tally)

    items = sorted(keys.items())
    threads = _thread_count()
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]
    return dict(results)


def _check_ceiling(cfg, plan, eps_prime, n_draws, shots):
    if cfg.copy_ceiling is None:
        return
    t_max = float(np.abs(plan.times).max()) if plan.n_terms else 0.0
    worst = n_draws * shots * (segment_count(t_max, eps_prime) + 1)
    if worst > cfg.copy_ceiling:
        raise InfeasibleBudget(
            f"planned copy consumption {worst} exceeds ceiling {cfg.copy_ceiling}"
        )


def _run_plan(rho: DensityMatrix, plan: SeriesPlan, budget: float, cfg: EstimatorConfig):
    """Common sampling core; returns (signed mean, stderr, records, tally, B, M)."""
    l1 = plan.l1_norm
    eps_prime = budget / l1
    n_draws_formula, shots = sample_counts(l1, budget, cfg.delta, plan.window_count)
    n_draws = cfg.num_samples if cfg.num_samples is not None else n_draws_formula
    sampled = cfg.shot_mode == "sampled"
    shots_per_eval = shots if sampled else 1

    root = np.random.SeedSequence(cfg.seed)
    sampler_seed, shots_parent = root.spawn(2)

    if cfg.enumerate_terms:
        indices = np.arange(plan.n_terms)
    else:
        sampler = ImportanceSampler(plan)
        indices = sampler.sample(np.random.default_rng(sampler_seed), n_draws)
    _check_ceiling(cfg, plan, eps_prime, len(indices), shots_per_eval)

    cache = _evaluate_distinct(rho, plan, indices, eps_prime, cfg.level)
    shot_seeds = shots_parent.spawn(len(indices))

    records = []
    tally = ResourceTally()
    for j, idx in enumerate(indices):
        key = abs(int(2 * plan.s_index[idx] - plan.l_index[idx]))
        expectation, n_seg, run_tally = cache[key]
        if sampled:
            value = sample_shots(expectation, shots, shot_seeds[j])
        else:
            value = expectation
        sign = 1.0 if plan.weights[idx] >= 0 else -1.0
        records.append(
            TermRecord(
                s=int(plan.s_index[idx]),
                l=int(plan.l_index[idx]),
                t=float(plan.times[idx]),
                n_segments=n_seg,
                shots=shots_per_eval,
                value=float(sign * value),
            )
        )
        tally = tally + ResourceTally(
            copies_used=(n_seg + 1) * shots_per_eval,
            primitive_gates=run_tally.primitive_gates * shots_per_eval,
            shots=shots_per_eval if sampled else 0,
        )

    values = np.array([r.value for r in records])
    if cfg.enumerate_terms:
        # records store sign-adjusted values; |weights| times those recovers
        # the weighted sum, and dividing by l1 keeps the l1 * mean convention
        mean = float(np.abs(plan.weights) @ values) / l1
        stderr = 0.0
    else:
        mean = float(values.mean()) if len(values) else 0.0
        stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return mean, stderr, tuple(records), tally, len(indices), shots


def _warn_floor(rho: DensityMatrix, lambda_floor: float) -> None:
    lam_min = float(spectrum(rho).eigenvalues.min())
    if lam_min < lambda_floor - 1e-12:
        warnings.warn(
            f"state's minimum eigenvalue {lam_min:.4f} is below the assumed floor "
            f"{lambda_floor}; the accuracy guarantee does not apply",
            stacklevel=3,
        )


def estimate_von_neumann(rho: DensityMatrix, cfg: EstimatorConfig) -> EstimateReport:
    """Sampled evaluation of the von Neumann series; returns l1 * mean."""
    cfg.validate()
    _warn_floor(rho, cfg.lambda_floor)
    plan = build_plan_vn(cfg.lambda_floor, cfg.epsilon)
    mean, mean_err, records, tally, n_draws, shots = _run_plan(rho, plan, cfg.epsilon, cfg)
    estimate = plan.l1_norm * mean
    stderr = plan.l1_norm * mean_err
    return EstimateReport(
        target="vn",
        estimate=float(estimate),
        stderr=float(stderr),
        alpha=None,
        n_qubits=rho.n_qubits,
        plan_taylor_order=plan.taylor_order,
        plan_degree=plan.degree,
        plan_l1_norm=plan.l1_norm,
        window_count=plan.window_count,
        num_samples=n_draws,
        shots_per_sample=shots,
        power_trace_budget=None,
        purity_used=None,
        power_trace_estimate=None,
        records=records,
        tally=tally,
        seed=cfg.seed,
        config=_config_dict(cfg),
    )


def _resolve_purity(rho: DensityMatrix, cfg: EstimatorConfig) -> float:
    if cfg.purity_source == "oracle":
        return purity_exact(rho)
    if cfg.purity_source == "user":
        return float(cfg.purity_value)
    purity_seed = np.random.SeedSequence(cfg.seed).spawn(3)[2]
    raw = estimate_purity_swap_test(rho, cfg.purity_shots, purity_seed)
    # shot noise can push the estimate outside (0, 1]; clamp to the valid range
    return min(max(raw, 1.0 / rho.dim), 1.0)


def estimate_renyi(rho: DensityMatrix, cfg: EstimatorConfig) -> EstimateReport:
    """Sampled evaluation of the power-trace series, then the log transform.

    Each drawn value is multiplied by the sign of its weight so the
    estimator stays unbiased for the signed series; raises
    NonpositiveArgument if the resulting power-trace estimate is <= 0.
    """
    cfg.validate()
    if cfg.alpha is None:
        raise AlphaOutOfRange("estimate_renyi requires cfg.alpha")
    _warn_floor(rho, cfg.lambda_floor)
    purity = _resolve_purity(rho, cfg)
    xi = power_trace_budget(cfg.alpha, cfg.epsilon, purity)
    xi = min(xi, 1.0 - 1e-9)  # order selection needs a sub-unit budget
    plan = build_plan_renyi(cfg.alpha, cfg.lambda_floor, xi)
    mean, mean_err, records, tally, n_draws, shots = _run_plan(rho, plan, xi, cfg)
    power_trace = 1.0 + plan.l1_norm * mean
    if power_trace <= 0:
        raise NonpositiveArgument(
            f"power-trace estimate {power_trace:.6f} <= 0; cannot take its logarithm"
        )
    log_value = math.log(power_trace) / math.log(cfg.log_base)
    estimate = log_value / (1.0 - cfg.alpha)
    stderr = plan.l1_norm * mean_err / (abs(1.0 - cfg.alpha) * power_trace * math.log(cfg.log_base))
    return EstimateReport(
        target="renyi",
        estimate=float(estimate),
        stderr=float(stderr),
        alpha=cfg.alpha,
        n_qubits=rho.n_qubits,
        plan_taylor_order=plan.taylor_order,
        plan_degree=plan.degree,
        plan_l1_norm=plan.l1_norm,
        window_count=plan.window_count,
        num_samples=n_draws,
        shots_per_sample=shots,
        power_trace_budget=xi,
        purity_used=purity,
        power_trace_estimate=float(power_trace),
        records=records,
        tally=tally,
        seed=cfg.seed,
        config=_config_dict(cfg),
    )


def estimate_with_plan(rho: DensityMatrix, plan: SeriesPlan, cfg: EstimatorConfig) -> EstimateReport:
    """Run the estimator against a prebuilt (possibly re-loaded) plan."""
    cfg.validate()
    _warn_floor(rho, plan.lambda_floor)
    mean, mean_err, records, tally, n_draws, shots = _run_plan(rho, plan, plan.epsilon_budget, cfg)
    if plan.target == "vn":
        estimate = plan.l1_norm * mean
        stderr = plan.l1_norm * mean_err
        power_trace = None
    else:
        alpha = plan.alpha
        power_trace = 1.0 + plan.l1_norm * mean
        if power_trace <= 0:
            raise NonpositiveArgument(
                f"power-trace estimate {power_trace:.6f} <= 0; cannot take its logarithm"
            )
        estimate = math.log(power_trace) / (math.log(cfg.log_base) * (1.0 - alpha))
        stderr = plan.l1_norm * mean_err / (abs(1.0 - alpha) * power_trace * math.log(cfg.log_base))
    return EstimateReport(
        target=plan.target,
        estimate=float(estimate),
        stderr=float(stderr),
        alpha=plan.alpha,
        n_qubits=rho.n_qubits,
        plan_taylor_order=plan.taylor_order,
        plan_degree=plan.degree,
        plan_l1_norm=plan.l1_norm,
        window_count=plan.window_count,
        num_samples=n_draws,
        shots_per_sample=shots,
        power_trace_budget=plan.epsilon_budget if plan.target == "renyi" else None,
        purity_used=None,
        power_trace_estimate=power_trace,
        records=records,
        tally=tally,
        seed=cfg.seed,
        config=_config_dict(cfg),
    )


CHANNEL_FAMILIES = {
    "amplitude_damping": amplitude_damping_channel,
    "depolarizing": depolarizing_channel,
}


@dataclass(frozen=True)
class SweepRow:
    p: float
    estimate: float
    oracle_noisy: float
    oracle_clean: float
    stderr: float
    copies: int
    gates: int


def noise_sweep(
    rho: DensityMatrix, channel_family: str, levels, cfg: EstimatorConfig
) -> list:
    """Estimate the entropy of the channel output at each noise level.

    Every consumed copy passes through the channel, i.e. the estimator sees
    N_p(rho); the rows therefore carry both the noisy-state oracle (the
    quantity the guarantee addresses) and the clean-state oracle for
    context.
    """
    if channel_family not in CHANNEL_FAMILIES:
        raise ValueError(f"unknown channel family {channel_family!r}")
    make = CHANNEL_FAMILIES[channel_family]
    renyi = cfg.alpha is not None
    oracle_clean = (
        renyi_exact(rho, cfg.alpha, cfg.log_base) if renyi else von_neumann_exact(rho)
    )
    level_seeds = np.random.SeedSequence(cfg.seed).generate_state(len(levels))
    rows = []
    for p, level_seed in zip(levels, level_seeds):
        noisy = apply_channel(rho, make(float(p)))
        cfg_p = replace(cfg, seed=int(level_seed))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = (
                estimate_renyi(noisy, cfg_p) if renyi else estimate_von_neumann(noisy, cfg_p)
            )
        oracle_noisy = (
            renyi_exact(noisy, cfg.alpha, cfg.log_base) if renyi else von_neumann_exact(noisy)
        )
        rows.append(
            SweepRow(
                p=float(p),
                estimate=report.estimate,
                oracle_noisy=oracle_noisy,
                oracle_clean=oracle_clean,
                stderr=report.stderr,
                copies=report.tally.copies_used,
                gates=report.tally.primitive_gates,
            )
        )
    return rows


@dataclass(frozen=True)
class ResourceSummary:
    """Measured totals plus the worst-case scaling formulas for context."""

    copies_total: int
    gates_total: int
    gates_applicable: bool
    shots_total: int
    worst_case_copies: str
    worst_case_gates: str


def resource_report(report: EstimateReport) -> ResourceSummary:
    """Totals from the tally alongside the analytic worst-case scalings."""
    cfg = report.config
    eps = cfg["epsilon"]
    lam = cfg["lambda_floor"]
    if report.target == "vn":
        copies_formula = (
            f"O~(1/(eps^5 lambda^2)) ~ {1 / (eps**5 * lam**2):.3e} (log factors dropped)"
        )
        gates_formula = (
            f"O~(n/(eps^3 lambda^2)) ~ {report.n_qubits / (eps**3 * lam**2):.3e}"
            " (log factors dropped)"
        )
    else:
        alpha = report.alpha
        weight_sum = sum(
            abs(generalized_binomial(alpha - 1, k))
            for k in range(1, report.plan_taylor_order + 1)
        )
        purity = report.purity_used if report.purity_used is not None else 1.0
        scale = purity ** (alpha - 1) if (alpha < 1 or alpha > 2) else purity
        denom = (abs(1 - alpha) * scale * eps) ** 5 * lam**2
        copies_formula = f"O~(W^5/(|1-a|^5 q^5 eps^5 lambda^2)) ~ {weight_sum**5 / denom:.3e}"
        denom_g = (abs(1 - alpha) * scale * eps) ** 3 * lam**2
        gates_formula = (
            f"O~(n W^3/(|1-a|^3 q^3 eps^3 lambda^2)) ~ "
            f"{report.n_qubits * weight_sum**3 / denom_g:.3e}"
        )
    gates_applicable = cfg["level"] == "gate"
    return ResourceSummary(
        copies_total=report.tally.copies_used,
        gates_total=report.tally.primitive_gates if gates_applicable else 0,
        gates_applicable=gates_applicable,
        shots_total=report.tally.shots,
        worst_case_copies=copies_formula,
        worst_case_gates=gates_formula,
    )


def _config_dict(cfg: EstimatorConfig) -> dict:
    return {
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "lambda_floor": cfg.lambda_floor,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "level": cfg.level,
        "shot_mode": cfg.shot_mode,
        "purity_source": cfg.purity_source,
        "purity_value": cfg.purity_value,
        "purity_shots": cfg.purity_shots,
        "num_samples": cfg.num_samples,
        "enumerate_terms": cfg.enumerate_terms,
        "copy_ceiling": cfg.copy_ceiling,
        "log_base": cfg.log_base,
    }


def report_to_dict(report: EstimateReport) -> dict:
    """JSON-ready dict mirroring the report dataclass."""
    return {
        "target": report.target,
        "estimate": report.estimate,
        "stderr": report.stderr,
        "alpha": report.alpha,
        "n_qubits": report.n_qubits,
        "plan": {
            "K": report.plan_taylor_order,
            "L": report.plan_degree,
            "l1_norm": report.plan_l1_norm,
            "window_count": report.window_count,
        },
        "num_samples": report.num_samples,
        "shots_per_sample": report.shots_per_sample,
        "power_trace_budget": report.power_trace_budget,
        "purity_used": report.purity_used,
        "power_trace_estimate": report.power_trace_estimate,
        "records": [
            {
                "s": r.s,
                "l": r.l,
                "t": r.t,
                "segments": r.n_segments,
                "shots": r.shots,
                "value": r.value,
            }
            for r in report.records
        ],
        "tally": {
            "copies": report.tally.copies_used,
            "gates": report.tally.primitive_gates,
            "shots": report.tally.shots,
        },
        "seed": report.seed,
        "config": report.config,
    }
