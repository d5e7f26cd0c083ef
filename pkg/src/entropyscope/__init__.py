"""Classical toolkit for copy-based quantum entropy estimation.

Builds Fourier-series approximations of the von Neumann and Renyi
entropies, simulates the interference circuits that evaluate their terms
(down to primitive gates, with qubit reset), and runs the
importance-sampling estimators with full resource accounting.
"""

from .circuits import (
    Gate,
    GateList,
    RegisterLayout,
    ResourceTally,
    amplification_operator,
    assemble_unitary,
    controlled_amplification_gates,
    estimate_purity_swap_test,
    hadamard_test_expectation,
    lcu_module,
    sample_shots,
    swap_exp_exact,
)
from .estimator import (
    EstimateReport,
    EstimatorConfig,
    ImportanceSampler,
    estimate_renyi,
    estimate_von_neumann,
    estimate_with_plan,
    noise_sweep,
    report_to_dict,
    resource_report,
    sample_counts,
)
from .series import (
    ArcsinPowerTable,
    BinomialBoundReport,
    SeriesPlan,
    arcsin_series_coeffs,
    binomial_bounds,
    build_arcsin_power_table,
    build_plan_renyi,
    build_plan_vn,
    eval_plan_exact,
    fourier_cutoffs,
    generalized_binomial,
    plan_from_dict,
    plan_to_dict,
    power_convolve,
    power_trace_budget,
    taylor_order_renyi,
    taylor_order_vn,
)
from .states import (
    DensityMatrix,
    KrausChannel,
    Spectrum,
    Tolerances,
    amplitude_damping_channel,
    apply_channel,
    depolarizing_channel,
    load_state,
    purity_exact,
    random_state_with_floor,
    renyi_exact,
    save_state,
    spectrum,
    state_from_parts,
    trace_cos_exact,
    validate_state,
    von_neumann_exact,
)

__version__ = "0.1.0"
