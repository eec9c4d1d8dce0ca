"""Minimal-surface geometry in the 4-sphere on periodic parameter grids.

Pipeline: sampled immersions (catalog or manifest) -> pointwise invariants
(curvature ellipse axes, Gauss and normal curvature, Hopf coefficient) ->
isometric deformation family by moving-frame integration -> deck-group
monodromy, closing set and integral identity checks.
"""

from .grid import (
    GridError,
    GridPatch,
    LoopPath,
    MetricField,
    diff,
    hodge_star_oneform,
    integrate,
    laplace_beltrami,
    partial_derivatives,
    quadrature_weights,
    rectangle_loop,
    u_generator,
    v_generator,
)
from .surface import (
    ImmersionField,
    NormalFrameField,
    ShapeReport,
    SurfaceError,
    fd_jets,
    flip_normal_orientation,
    frame_orthonormality_residual,
    gauge_invariance_check,
    gauss_equation_residual,
    intrinsic_gauss_curvature,
    minimality_residual,
    normal_frame,
    rotate_normal_frame,
    second_fundamental_form,
    shape_report,
    tangent_frame,
    verify_jets,
)
from .catalog import (
    CatalogEntry,
    CatalogError,
    IngestReport,
    catalog_names,
    clifford_torus,
    geodesic_sphere,
    load_catalog,
    perturb_immersion,
    read_manifest,
    veronese_sphere,
    write_manifest,
)
from .adapted import (
    AdaptedFrameError,
    AdaptedFrameField,
    HopfField,
    IsothermalChart,
    SuperminimalPatch,
    SuperminimalityReport,
    ZeroOrder,
    build_adapted_frame,
    circle_mask,
    circle_threshold,
    connection_form_agreement,
    connection_forms,
    construct_isothermal,
    find_zero_candidates,
    frame_derivative_identity_residual,
    hopf_differential,
    superminimality_test,
    synthetic_adapted_frame,
    winding_number,
    zero_orders,
)
from .family import (
    ConnectionData,
    CongruenceFit,
    DeformedPatch,
    FamilyError,
    IntegrabilityBroken,
    MaurerCartanField,
    assemble_maurer_cartan,
    congruence_test,
    connection_data,
    connection_data_adapted,
    deformation_invariant_deviation,
    deformed_immersion,
    flatness_residual,
    frame_reconstruction_residual,
    integrate_frame,
)

from .monodromy import (
    MonodromyError,
    MonodromyProfile,
    dichotomy_report,
    generator_monodromy,
    scan_profile,
)
from .topology import (
    BalanceCheck,
    IntegerVerdict,
    LaplaceIdentityCheck,
    RicciCheck,
    TopologyError,
    TopologyReport,
    ZeroCount,
    balance_residuals,
    euler_numbers,
    euler_zero_balance,
    laplace_identity_residual,
    ricci_condition_residual,
    synthetic_zero_field,
    topology_report,
    zero_count_excised,
)

__all__ = [
    "GridError",
    "GridPatch",
    "LoopPath",
    "MetricField",
    "diff",
    "hodge_star_oneform",
    "integrate",
    "laplace_beltrami",
    "partial_derivatives",
    "quadrature_weights",
    "rectangle_loop",
    "u_generator",
    "v_generator",
    "ImmersionField",
    "NormalFrameField",
    "ShapeReport",
    "SurfaceError",
    "fd_jets",
    "flip_normal_orientation",
    "frame_orthonormality_residual",
    "gauge_invariance_check",
    "gauss_equation_residual",
    "intrinsic_gauss_curvature",
    "minimality_residual",
    "normal_frame",
    "rotate_normal_frame",
    "second_fundamental_form",
    "shape_report",
    "tangent_frame",
    "verify_jets",
    "CatalogEntry",
    "CatalogError",
    "IngestReport",
    "catalog_names",
    "clifford_torus",
    "geodesic_sphere",
    "load_catalog",
    "perturb_immersion",
    "read_manifest",
    "veronese_sphere",
    "write_manifest",
    "AdaptedFrameError",
    "AdaptedFrameField",
    "HopfField",
    "IsothermalChart",
    "SuperminimalPatch",
    "SuperminimalityReport",
    "ZeroOrder",
    "build_adapted_frame",
    "circle_mask",
    "circle_threshold",
    "connection_form_agreement",
    "connection_forms",
    "construct_isothermal",
    "find_zero_candidates",
    "frame_derivative_identity_residual",
    "hopf_differential",
    "superminimality_test",
    "synthetic_adapted_frame",
    "winding_number",
    "zero_orders",
    "ConnectionData",
    "CongruenceFit",
    "DeformedPatch",
    "FamilyError",
    "IntegrabilityBroken",
    "MaurerCartanField",
    "assemble_maurer_cartan",
    "congruence_test",
    "connection_data",
    "connection_data_adapted",
    "deformation_invariant_deviation",
    "deformed_immersion",
    "flatness_residual",
    "frame_reconstruction_residual",
    "integrate_frame",
    "MonodromyError",
    "MonodromyProfile",
    "dichotomy_report",
    "generator_monodromy",
    "scan_profile",
    "BalanceCheck",
    "IntegerVerdict",
    "LaplaceIdentityCheck",
    "RicciCheck",
    "TopologyError",
    "TopologyReport",
    "ZeroCount",
    "balance_residuals",
    "euler_numbers",
    "euler_zero_balance",
    "laplace_identity_residual",
    "ricci_condition_residual",
    "synthetic_zero_field",
    "topology_report",
    "zero_count_excised",
]
