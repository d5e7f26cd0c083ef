"""Fourier-series approximations of the von Neumann and Renyi entropies.

Both entropies reduce to weighted sums of terms tr(rho cos(rho t)) over a
finite grid of times t(s,l) = (2s-l)pi/2. This module builds the coefficient
tables (Taylor coefficients of powers of arcsin), selects the truncation
orders from the eigenvalue floor and the accuracy budget, and materializes
the weighted term set as a :class:`SeriesPlan`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import AlphaOutOfRange, BetaOutOfRange
from .states import DensityMatrix, spectrum

TARGET_VN = "vn"
TARGET_RENYI = "renyi"


def arcsin_series_coeffs(max_degree: int) -> np.ndarray:
    """Taylor coefficients of arcsin(y)/(pi/2) up to y^max_degree.

    Even-degree entries are zero. Odd entries follow the running-product
    recursion c_{2m+1} = c_{2m-1} * (2m-1)^2 / ((2m)(2m+1)) seeded with
    c_1 = 2/pi, which avoids factorial overflow at any degree.
    """
    if max_degree < 0:
        raise ValueError(f"max_degree must be nonnegative, got {max_degree}")
    out = np.zeros(max_degree + 1)
    if max_degree >= 1:
        out[1] = 2.0 / np.pi
    n_odd = (max_degree - 1) // 2
    if n_odd >= 1:
        m = np.arange(1, n_odd + 1)
        ratios = (2 * m - 1.0) ** 2 / ((2 * m) * (2 * m + 1.0))
        out[2 * m + 1] = out[1] * np.cumprod(ratios)
    return out


def power_convolve(table_k: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Convolution of two coefficient lists, truncated to the common length.

    Feeding the degree-k coefficient row and the base arcsin row yields the
    degree-(k+1) row; the dropped tail only ever removes nonnegative mass.
    """
    a = np.asarray(table_k, dtype=float)
    b = np.asarray(base, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"coefficient lists must have equal length, got {a.shape} and {b.shape}")
    return np.convolve(a, b)[: a.shape[0]]


@dataclass(frozen=True)
class ArcsinPowerTable:
    """Coefficients b[k][l] of (arcsin(y)/(pi/2))^k for 1 <= k <= max_k.

    coeffs has shape (max_k, max_degree+1); row k-1 holds power k.
    All entries are nonnegative and each row sums to at most 1.
    """

    max_k: int
    max_degree: int
    coeffs: np.ndarray

    def row(self, k: int) -> np.ndarray:
        return self.coeffs[k - 1]


def build_arcsin_power_table(max_k: int, max_degree: int) -> ArcsinPowerTable:
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    base = arcsin_series_coeffs(max_degree)
    rows = [base]
    for _ in range(2, max_k + 1):
        rows.append(power_convolve(rows[-1], base))
    return ArcsinPowerTable(max_k=max_k, max_degree=max_degree, coeffs=np.array(rows))


def taylor_order_vn(lambda_floor: float, eps: float) -> int:
    """Smallest K with (1-floor)^(K+1) / (floor*(K+1)) <= eps/4."""
    _check_unit_interval("lambda_floor", lambda_floor)
    _check_unit_interval("eps", eps)
    k = 1
    while (1 - lambda_floor) ** (k + 1) / (lambda_floor * (k + 1)) > eps / 4:
        k += 1
    return k


def taylor_order_renyi(alpha: float, lambda_floor: float, xi: float) -> int:
    """Smallest K with (1-floor)^(K+1)/floor <= xi/4, raised for alpha > 2.

    Above alpha = 2 the order is also kept at or above
    ceil(e^(2/(alpha-1)) * alpha^2), past which every generalized binomial
    coefficient with exponent alpha-1 has magnitude at most 1.
    """
    _check_alpha(alpha)
    _check_unit_interval("lambda_floor", lambda_floor)
    _check_unit_interval("xi", xi)
    k = 1
    while (1 - lambda_floor) ** (k + 1) / lambda_floor > xi / 4:
        k += 1
    if alpha > 2:
        k = max(k, math.ceil(math.exp(2 / (alpha - 1)) * alpha**2))
    return k


def fourier_cutoffs(weight_sum: float, budget: float, lambda_floor: float):
    """Cosine-series degree and per-degree window half-widths.

    weight_sum is sum_k 1/k for the von Neumann target and
    sum_k |binom(alpha-1, k)| for the Renyi target. Returns
    (degree, halfwidths) with halfwidths[l] clamped to floor(l/2) so the
    window never exceeds the full row 0..l.
    """
    _check_unit_interval("lambda_floor", lambda_floor)
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    log_arg = 4.0 * weight_sum / budget
    if log_arg <= 1.0:
        return 0, [0]
    log_term = math.log(log_arg)
    degree = int(math.floor(log_term / lambda_floor**2))
    halfwidths = [min(math.ceil(math.sqrt(log_term * l / 2.0)), l // 2) for l in range(degree + 1)]
    return degree, halfwidths


def generalized_binomial(beta: float, k: int) -> float:
    """binom(beta, k) = prod_{j=1..k} (beta - j + 1)/j, with binom(beta, 0) = 1."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    out = 1.0
    for j in range(1, k + 1):
        out *= (beta - j + 1) / j
    return out


@dataclass(frozen=True)
class BinomialBoundReport:
    """Computable bounds on |binom(beta, k)| used by tests and reports.

    per_k[k-1] bounds |binom(beta,k)|; entries are exact magnitudes where
    the analytic bound does not apply (beta > 1, k < beta+1). tail_bound
    holds for every k >= tail_from. partial_sum_bound dominates
    sum_{k<=max_k} |binom(beta,k)|.
    """

    beta: float
    max_k: int
    per_k: np.ndarray
    tail_bound: float
    tail_from: int
    partial_sum_bound: float


def _bound_small_beta(beta: float, k: int) -> float:
    # beta in (0,1], k >= 2
    return (1 + (beta * math.log((k + 1) / k**2) + beta - 1) / k) ** k


def _bound_large_beta(beta: float, k: int) -> float:
    # beta > 1, k >= beta + 1
    return (1 + (beta * math.log((beta + 1) ** 2 / k) + 2) / k) ** k


def binomial_bounds(beta: float, max_k: int) -> BinomialBoundReport:
    if beta <= -1 or beta == 0:
        raise BetaOutOfRange(f"beta must be in (-1,0) or (0,inf), got {beta}")
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    ks = np.arange(1, max_k + 1)
    if beta < 0:
        per_k = np.full(max_k, abs(beta))
        tail_bound, tail_from = abs(beta), 1
        partial = abs(beta) * max_k
    elif beta <= 1:
        per_k = np.array([beta if k == 1 else _bound_small_beta(beta, k) for k in ks])
        tail_bound, tail_from = 1.0 / math.e, 4
        partial = float(max_k)
    else:
        threshold = math.ceil(math.exp(2 / beta) * (beta + 1) ** 2)
        per_k = np.array(
            [
                _bound_large_beta(beta, k) if k >= beta + 1 else abs(generalized_binomial(beta, k))
                for k in ks
            ]
        )
        tail_bound, tail_from = 1.0, threshold
        # below the threshold use the per-k bounds, above it magnitude <= 1
        head = per_k[: min(max_k, threshold)].sum()
        partial = float(head + max(0, max_k - threshold))
    return BinomialBoundReport(
        beta=beta,
        max_k=max_k,
        per_k=per_k,
        tail_bound=tail_bound,
        tail_from=tail_from,
        partial_sum_bound=partial,
    )


def power_trace_budget(alpha: float, eps: float, purity: float) -> float:
    """Accuracy budget for estimating tr(rho^alpha) given an entropy budget eps.

    Uses tr(rho^alpha) >= tr(rho^2)^(alpha-1) for alpha in (0,1) or (2,inf)
    and tr(rho^alpha) >= tr(rho^2) for alpha in (1,2], so that an estimate of
    the power trace within the returned budget keeps the entropy within eps.
    """
    _check_alpha(alpha)
    if not 0 < purity <= 1:
        raise ValueError(f"purity must be in (0,1], got {purity}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if 1 < alpha <= 2:
        return abs(1 - alpha) * purity * eps / 2
    return abs(1 - alpha) * purity ** (alpha - 1) * eps / 2


@dataclass(frozen=True)
class SeriesPlan:
    """Materialized Fourier approximation of one entropy target.

    The approximated quantity is
        constant_offset + sum_i weights[i] * tr(rho cos(rho * times[i]))
    which approaches S(rho) for the 'vn' target and tr(rho^alpha) for the
    'renyi' target. epsilon_budget is the series accuracy this plan was
    built for (the entropy budget for 'vn', the power-trace budget for
    'renyi').
    """

    target: str
    alpha: float | None
    lambda_floor: float
    epsilon_budget: float
    taylor_order: int
    degree: int
    halfwidths: tuple
    s_index: np.ndarray
    l_index: np.ndarray
    times: np.ndarray
    weights: np.ndarray
    l1_norm: float
    constant_offset: float

    @property
    def n_terms(self) -> int:
        return int(self.s_index.shape[0])

    @property
    def window_count(self) -> int:
        """sum_l (2 M_l + 1), the nominal term count used in union bounds."""
        return int(sum(2 * m + 1 for m in self.halfwidths))


def _binomial_row(l: int, s_lo: int, s_hi: int) -> np.ndarray:
    """binom(l,s)/2^l for s in [s_lo, s_hi], via log-gamma then ratio updates."""
    first = math.exp(
        math.lgamma(l + 1) - math.lgamma(s_lo + 1) - math.lgamma(l - s_lo + 1) - l * math.log(2)
    )
    out = np.empty(s_hi - s_lo + 1)
    out[0] = first
    for i, s in enumerate(range(s_lo, s_hi)):
        out[i + 1] = out[i] * (l - s) / (s + 1)
    return out


def _materialize(target, alpha, lambda_floor, budget, order, degree, halfwidths, row_weight):
    s_list, l_list, w_list = [], [], []
    for l in range(degree + 1):
        m = halfwidths[l]
        lo = max(0, l // 2 - m)
        hi = min(l, (l + 1) // 2 + m)
        probs = _binomial_row(l, lo, hi)
        s_list.append(np.arange(lo, hi + 1))
        l_list.append(np.full(hi - lo + 1, l, dtype=int))
        w_list.append(row_weight[l] * probs)
    s_idx = np.concatenate(s_list)
    l_idx = np.concatenate(l_list)
    weights = np.concatenate(w_list)
    times = (2 * s_idx - l_idx) * (np.pi / 2)
    l1 = float(np.abs(weights).sum())
    for arr in (s_idx, l_idx, times, weights):
        arr.setflags(write=False)
    return SeriesPlan(
        target=target,
        alpha=alpha,
        lambda_floor=lambda_floor,
        epsilon_budget=budget,
        taylor_order=order,
        degree=degree,
        halfwidths=tuple(halfwidths),
        s_index=s_idx,
        l_index=l_idx,
        times=times,
        weights=weights,
        l1_norm=l1,
        constant_offset=0.0 if target == TARGET_VN else 1.0,
    )


def build_plan_vn(lambda_floor: float, eps: float) -> SeriesPlan:
    """Von Neumann plan: weights (sum_k b_l^(k)/k) binom(l,s)/2^l, all >= 0."""
    order = taylor_order_vn(lambda_floor, eps)
    weight_sum = sum(1.0 / k for k in range(1, order + 1))
    degree, halfwidths = fourier_cutoffs(weight_sum, eps, lambda_floor)
    table = build_arcsin_power_table(order, degree)
    inv_k = 1.0 / np.arange(1, order + 1)
    row_weight = inv_k @ table.coeffs
    return _materialize(TARGET_VN, None, lambda_floor, eps, order, degree, halfwidths, row_weight)


def build_plan_renyi(alpha: float, lambda_floor: float, xi: float) -> SeriesPlan:
    """Renyi plan for tr(rho^alpha): signed weights, constant offset 1.

    Row weights are sum_k (-1)^k b_l^(k) binom(alpha-1, k); the window sizes
    are chosen with weight_sum = sum_k |binom(alpha-1, k)|.
    """
    _check_alpha(alpha)
    beta = alpha - 1
    order = taylor_order_renyi(alpha, lambda_floor, xi)
    binoms = np.array([generalized_binomial(beta, k) for k in range(1, order + 1)])
    weight_sum = float(np.abs(binoms).sum())
    degree, halfwidths = fourier_cutoffs(weight_sum, xi, lambda_floor)
    table = build_arcsin_power_table(order, degree)
    signs = (-1.0) ** np.arange(1, order + 1)
    row_weight = (signs * binoms) @ table.coeffs
    return _materialize(TARGET_RENYI, alpha, lambda_floor, xi, order, degree, halfwidths, row_weight)


def eval_plan_exact(plan: SeriesPlan, rho: DensityMatrix) -> float:
    """constant_offset + sum_i w_i * tr(rho cos(rho t_i)), spectrally exact.

    For the 'renyi' target this is the power-trace approximation; convert
    with log(value)/(1-alpha) to reach the entropy.
    """
    lam = spectrum(rho).eigenvalues
    term_values = np.cos(np.outer(plan.times, lam)) @ lam
    return float(plan.constant_offset + plan.weights @ term_values)


def plan_to_dict(plan: SeriesPlan) -> dict:
    """JSON-ready dict: {target, alpha?, lambda, epsilon_budget, K, L, terms, l1_norm, offset}."""
    out = {
        "target": plan.target,
        "lambda": plan.lambda_floor,
        "epsilon_budget": plan.epsilon_budget,
        "K": plan.taylor_order,
        "L": plan.degree,
        "terms": [
            {"s": int(s), "l": int(l), "t": float(t), "f": float(w)}
            for s, l, t, w in zip(plan.s_index, plan.l_index, plan.times, plan.weights)
        ],
        "l1_norm": plan.l1_norm,
        "offset": plan.constant_offset,
    }
    if plan.alpha is not None:
        out["alpha"] = plan.alpha
    return out


def plan_from_dict(payload: dict) -> SeriesPlan:
    """Rebuild a plan from its exported dict; inverse of plan_to_dict."""
    terms = payload["terms"]
    s_idx = np.array([t["s"] for t in terms], dtype=int)
    l_idx = np.array([t["l"] for t in terms], dtype=int)
    times = np.array([t["t"] for t in terms], dtype=float)
    weights = np.array([t["f"] for t in terms], dtype=float)
    degree = int(payload["L"])
    # recover the window half-widths from the realized windows
    halfwidths = []
    for l in range(degree + 1):
        mask = l_idx == l
        hi = int(s_idx[mask].max()) if mask.any() else (l + 1) // 2
        halfwidths.append(hi - (l + 1) // 2)
    for arr in (s_idx, l_idx, times, weights):
        arr.setflags(write=False)
    return SeriesPlan(
        target=payload["target"],
        alpha=payload.get("alpha"),
        lambda_floor=float(payload["lambda"]),
        epsilon_budget=float(payload["epsilon_budget"]),
        taylor_order=int(payload["K"]),
        degree=degree,
        halfwidths=tuple(halfwidths),
        s_index=s_idx,
        l_index=l_idx,
        times=times,
        weights=weights,
        l1_norm=float(payload["l1_norm"]),
        constant_offset=float(payload["offset"]),
    )


def _check_unit_interval(name: str, value: float) -> None:
    if not 0 < value < 1:
        raise ValueError(f"{name} must lie in (0,1), got {value}")


def _check_alpha(alpha: float) -> None:
    if alpha <= 0 or alpha == 1:
        raise AlphaOutOfRange(f"alpha must be in (0,1) or (1,inf), got {alpha}")
