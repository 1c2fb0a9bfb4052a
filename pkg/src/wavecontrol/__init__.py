"""Boundary control of linear and semilinear wave equations through
Carleman-weighted variational solves and Banach fixed-point iteration."""

from .config import (
    DATA_PROFILES,
    ResolvedRun,
    RunConfig,
    evaluate_profile,
    parse_config,
    resolve_config,
)
from .control import (
    StateControlPair,
    WeightedSystem,
    assemble_system,
    carleman_ratio,
    dense_kkt_minimizer,
    estimate_report,
    extract_pair,
    make_random_dual_field,
    optimality_check,
    solve_control,
    solve_dual,
)
from .errors import WaveControlError
from .fixedpoint import (
    ClassSpec,
    IterationTrace,
    Nonlinearity,
    check_class,
    contraction_report,
    lambda_s,
    make_nonlinearity,
    run_fixed_point,
    source_bound_check,
    verify_growth,
)
from .forward import (
    ForwardProblem,
    ForwardResult,
    data_norm,
    forward_time_steps,
    solve_forward,
    verify_control,
)
from .geometry import (
    BoundaryPartition,
    CutoffProfile,
    GeometryConfig,
    WeightParams,
    default_carleman_s,
    eval_cutoffs,
    eval_weights,
    validate_geometry,
    weight_derivative_report,
)
from .grid import (
    ScalarField,
    SpaceTimeGrid,
    apply_wave_operator,
    build_grid,
    load_field,
    normal_trace,
    save_field,
)
from .norms import weighted_norm

__all__ = [
    "DATA_PROFILES", "ResolvedRun", "RunConfig", "evaluate_profile",
    "parse_config", "resolve_config",
    "StateControlPair", "WeightedSystem", "assemble_system", "carleman_ratio",
    "dense_kkt_minimizer", "estimate_report", "extract_pair",
    "make_random_dual_field", "optimality_check", "solve_control", "solve_dual",
    "WaveControlError",
    "ClassSpec", "IterationTrace", "Nonlinearity", "check_class",
    "contraction_report", "lambda_s", "make_nonlinearity", "run_fixed_point",
    "source_bound_check", "verify_growth",
    "ForwardProblem", "ForwardResult", "data_norm", "forward_time_steps",
    "solve_forward", "verify_control",
    "BoundaryPartition", "CutoffProfile", "GeometryConfig", "WeightParams",
    "default_carleman_s", "eval_cutoffs", "eval_weights", "validate_geometry",
    "weight_derivative_report",
    "ScalarField", "SpaceTimeGrid", "apply_wave_operator", "build_grid",
    "load_field", "normal_trace", "save_field",
    "weighted_norm",
]

__version__ = "0.1.0"
