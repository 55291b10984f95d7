"""Weak optimal transport on the line for finite discrete measures.

The package computes the value, optimizers, and structure of the weak
transport problem with barycentric displacement costs: closed-form value
and cut points, the six-block decomposition, shadow measures and shadow
couplings built from lifts, covariance-extremal optimizers, the
Wasserstein projection with its monotone optimal map, and an independent
simplex oracle used to cross-check every closed form.
"""

from __future__ import annotations

from .couplings import (
    Coupling,
    Flavor,
    MonotonicityKind,
    MonotonicityTag,
    Sense,
    assemble_pistar,
    barycenters,
    check_monotonicity,
    cost_integral,
    coupling_from_json_dict,
    derive_martingale_points,
    extremal_covariance,
    identity_coupling,
    make_coupling,
    martingale_coupling,
    merge_couplings,
    submartingale_coupling,
    supermartingale_coupling,
)
from .errors import (
    BadInterval,
    BadOrder,
    DimensionMismatch,
    InternalInconsistency,
    LpInfeasible,
    MarginalMismatch,
    MassMismatch,
    MassOrder,
    NegativeMass,
    NegativeRemainder,
    NotInD,
    NumericalFailure,
    OrderViolation,
    OutOfRange,
    Unbounded,
    UnboundedHull,
    ValidationError,
    WotlineError,
)
from .lp_oracle import (
    LinearProgram,
    LpSolution,
    LpStatus,
    constrained_ot_lp,
    min_target_lp,
    solve,
    verify_solution,
    wot_value_lp,
)
from .measure_core import (
    DiscreteMeasure,
    OrderRelation,
    cdf,
    check_order,
    make_measure,
    measure_from_json_dict,
    measures_close,
    quantile,
    restrict,
    subtract_measure,
    add_measures,
    moments,
    scale_measure,
    wasserstein1,
)
from .projection import (
    ConvexCost,
    CostKind,
    MonotoneMap,
    absolute_cost,
    displacement_profile,
    evaluate_cost,
    evaluate_map,
    map_from_json_dict,
    optimal_map,
    power_cost,
    project_convex_order,
    pushforward_map,
    pwl_cost,
)
from .pwl_convex import (
    PwlFunction,
    add_constant,
    call_potential,
    convex_hull,
    evaluate,
    put_potential,
    pwl_from_json_dict,
    second_derivative_measure,
    subtract,
    sup_gap,
    u_potential,
)
from .shadow import (
    Lift,
    LiftedCoupling,
    LiftKind,
    lift_from_json_dict,
    make_lift,
    min_target_check,
    region_decomposition_check,
    shadow,
    shadow_coupling,
    shadow_residual_check,
    target_stats,
)
from .tolerances import EPS, EPS_MASS, EPS_POS, TOL_GRID
from .wot_solver import (
    Decomposition,
    compute_constants,
    compute_cutpoints,
    decompose,
    decomposition_from_json_dict,
    is_pistar_member,
    pistar_violation,
    region_of,
    wot_objective,
    wot_value,
    wot_value_general,
)

__version__ = "0.1.0"

__all__ = [
    "EPS",
    "EPS_MASS",
    "EPS_POS",
    "TOL_GRID",
    "BadInterval",
    "BadOrder",
    "ConvexCost",
    "CostKind",
    "Coupling",
    "Decomposition",
    "DimensionMismatch",
    "DiscreteMeasure",
    "Flavor",
    "InternalInconsistency",
    "Lift",
    "LiftKind",
    "LiftedCoupling",
    "LinearProgram",
    "LpInfeasible",
    "LpSolution",
    "LpStatus",
    "MarginalMismatch",
    "MassMismatch",
    "MassOrder",
    "MonotoneMap",
    "MonotonicityKind",
    "MonotonicityTag",
    "NegativeMass",
    "NegativeRemainder",
    "NotInD",
    "NumericalFailure",
    "OrderRelation",
    "OrderViolation",
    "OutOfRange",
    "PwlFunction",
    "Sense",
    "Unbounded",
    "UnboundedHull",
    "ValidationError",
    "WotlineError",
    "absolute_cost",
    "add_constant",
    "add_measures",
    "assemble_pistar",
    "barycenters",
    "call_potential",
    "cdf",
    "check_monotonicity",
    "check_order",
    "compute_constants",
    "compute_cutpoints",
    "constrained_ot_lp",
    "convex_hull",
    "cost_integral",
    "coupling_from_json_dict",
    "decompose",
    "decomposition_from_json_dict",
    "derive_martingale_points",
    "displacement_profile",
    "evaluate",
    "evaluate_cost",
    "evaluate_map",
    "extremal_covariance",
    "identity_coupling",
    "is_pistar_member",
    "lift_from_json_dict",
    "make_coupling",
    "make_lift",
    "make_measure",
    "map_from_json_dict",
    "martingale_coupling",
    "measure_from_json_dict",
    "measures_close",
    "merge_couplings",
    "min_target_check",
    "min_target_lp",
    "moments",
    "optimal_map",
    "pistar_violation",
    "power_cost",
    "project_convex_order",
    "pushforward_map",
    "put_potential",
    "pwl_cost",
    "pwl_from_json_dict",
    "quantile",
    "region_decomposition_check",
    "region_of",
    "restrict",
    "scale_measure",
    "second_derivative_measure",
    "shadow",
    "shadow_coupling",
    "shadow_residual_check",
    "solve",
    "submartingale_coupling",
    "subtract",
    "subtract_measure",
    "sup_gap",
    "supermartingale_coupling",
    "target_stats",
    "u_potential",
    "verify_solution",
    "wasserstein1",
    "wot_objective",
    "wot_value",
    "wot_value_general",
    "wot_value_lp",
]
