"""Quantum power iteration on tensor-train function approximations.

The pipeline: discretize a black-box objective on a qubit grid, compress it
into a tensor train by cross interpolation, promote it to a diagonal
operator, embed that operator (exactly or variationally) into a step-like
circuit of unitaries with an ancilla register, and simulate repeated
post-selected applications that concentrate the state on the optimum.
"""

from .analysis import (
    NIndependenceScan,
    RankGrowthReport,
    SuccessProbabilityResult,
    TimingScan,
    cost_timing_scan,
    n_independence_scan,
    rank_growth_report,
    success_probability_integral,
    success_probability_integral_literal,
    success_probability_report,
    success_probability_sum,
)
from .benchmarks import Benchmark, get_benchmark, load_tabulated
from .cross import CrossConfig, CrossResult, evaluation_budget, maxvol, tt_cross
from .grids import (
    Grid,
    ObjectiveSpec,
    bits_to_indices,
    bits_to_points,
    flat_to_bits,
    flat_to_multi,
    index_to_point,
    lattice_function,
    make_grid,
    multi_to_flat,
    point_to_index,
    preprocess_objective,
)
from .serialize import (
    load_tt_operator,
    load_tt_vector,
    load_unitary_mpo,
    read_csv,
    save_tt_operator,
    save_tt_vector,
    save_unitary_mpo,
    write_csv,
    write_manifest,
)
from .simulate import (
    DeadBranchError,
    IterationReport,
    StateVector,
    apply_unitary_mpo,
    extract_candidate,
    postselect_ancillas,
    power_iterate,
    prepare_initial,
    sample_measurements,
)
from .ttcore import (
    TTOperator,
    TTVector,
    classical_power_iteration,
    diag_mpo_from_mps,
    mpo_apply,
    mpo_frobenius_norm,
    mpo_inner,
    random_tt,
    tt_entries,
    tt_inner,
    tt_left_canonicalize,
    tt_norm,
    tt_ones,
    tt_round,
    tt_scale,
    tt_to_dense,
)
from .unitary import (
    FitReport,
    UnitaryMPO,
    boundary_contract,
    exact_diagonal_embedding,
    frobenius_cost,
    gate_count_estimate,
    optimal_scale,
    qr_retract,
    random_unitary_mpo,
    riemannian_fit,
    unitary_completion,
)

__version__ = "0.1.0"

__all__ = [
    "Benchmark",
    "CrossConfig",
    "CrossResult",
    "DeadBranchError",
    "FitReport",
    "Grid",
    "IterationReport",
    "NIndependenceScan",
    "ObjectiveSpec",
    "RankGrowthReport",
    "StateVector",
    "SuccessProbabilityResult",
    "TTOperator",
    "TTVector",
    "TimingScan",
    "UnitaryMPO",
    "apply_unitary_mpo",
    "bits_to_indices",
    "bits_to_points",
    "boundary_contract",
    "classical_power_iteration",
    "cost_timing_scan",
    "diag_mpo_from_mps",
    "evaluation_budget",
    "exact_diagonal_embedding",
    "extract_candidate",
    "flat_to_bits",
    "flat_to_multi",
    "frobenius_cost",
    "gate_count_estimate",
    "get_benchmark",
    "index_to_point",
    "lattice_function",
    "load_tabulated",
    "load_tt_operator",
    "load_tt_vector",
    "load_unitary_mpo",
    "make_grid",
    "maxvol",
    "mpo_apply",
    "mpo_frobenius_norm",
    "mpo_inner",
    "multi_to_flat",
    "n_independence_scan",
    "optimal_scale",
    "point_to_index",
    "postselect_ancillas",
    "power_iterate",
    "prepare_initial",
    "preprocess_objective",
    "qr_retract",
    "random_tt",
    "random_unitary_mpo",
    "rank_growth_report",
    "read_csv",
    "riemannian_fit",
    "sample_measurements",
    "save_tt_operator",
    "save_tt_vector",
    "save_unitary_mpo",
    "success_probability_integral",
    "success_probability_integral_literal",
    "success_probability_report",
    "success_probability_sum",
    "tt_cross",
    "tt_entries",
    "tt_inner",
    "tt_left_canonicalize",
    "tt_norm",
    "tt_ones",
    "tt_round",
    "tt_scale",
    "tt_to_dense",
    "unitary_completion",
    "write_csv",
    "write_manifest",
]
