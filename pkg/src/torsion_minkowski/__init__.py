"""Planar Minkowski problem for torsional rigidity.

Support-function calculus over convex polygons, a P1 solver for the
torsion boundary-value problem, boundary recovery of the torsion
measure, an inverse solver matching a prescribed balanced measure, and a
verification suite for the identities tying them together.
"""

from .boundary_measure import (
    HadamardReport,
    SurfaceMeasure,
    boundary_flux,
    facet_measure,
    hadamard_fd_check,
    mixed_torsion,
    representation_residual,
    tau_refined,
    torsion_measure,
)
from .errors import (
    EmptyInterior,
    FacetAttributionMissing,
    FluxSolveFailure,
    InvariantViolation,
    LinearSolveFailure,
    MaximumPrincipleViolation,
    MeshTooFine,
    NegativeScale,
    NoConvergence,
    ParseError,
    PointOutside,
    TorsionMinkowskiError,
    UnbalanceableMeasure,
    UnboundedBody,
)
from .mesh import TriMesh, check_mesh, mesh_to_dict, refine, triangulate
from .minkowski_solver import (
    ObjectiveEval,
    SolveOptions,
    SolveReport,
    TargetMeasure,
    UniquenessReport,
    objective,
    project_balance,
    solve_minkowski,
    uniqueness_probe,
)
from .support_geometry import (
    Polygon,
    PolygonMetrics,
    SupportSpec,
    angles_to_normals,
    build_polytope,
    hausdorff_distance,
    metrics,
    minkowski_sum,
    polygon_from_dict,
    polygon_to_dict,
    regular_polygon,
    scale,
    steiner_point,
    support_function,
    support_spec_of,
    support_values,
    translate,
    unit_vector,
)
from .torsion_fem import (
    ConcavityReport,
    SolverOptions,
    TorsionField,
    check_sqrt_concavity,
    gradient_at,
    solve_on_polygon,
    solve_torsion,
    torsional_rigidity,
)
from .verify_suite import (
    CheckReport,
    brunn_minkowski_check,
    continuity_check,
    homogeneity_check,
    is_homothetic,
    polygon_corpus,
    random_polygon,
    run_verify_corpus,
)

__all__ = [
    "CheckReport",
    "ConcavityReport",
    "EmptyInterior",
    "FacetAttributionMissing",
    "FluxSolveFailure",
    "HadamardReport",
    "InvariantViolation",
    "LinearSolveFailure",
    "MaximumPrincipleViolation",
    "MeshTooFine",
    "NegativeScale",
    "NoConvergence",
    "ObjectiveEval",
    "ParseError",
    "PointOutside",
    "Polygon",
    "PolygonMetrics",
    "SolveOptions",
    "SolveReport",
    "SolverOptions",
    "SupportSpec",
    "SurfaceMeasure",
    "TargetMeasure",
    "TorsionField",
    "TorsionMinkowskiError",
    "TriMesh",
    "UnbalanceableMeasure",
    "UnboundedBody",
    "UniquenessReport",
    "angles_to_normals",
    "boundary_flux",
    "brunn_minkowski_check",
    "build_polytope",
    "check_mesh",
    "check_sqrt_concavity",
    "continuity_check",
    "facet_measure",
    "gradient_at",
    "hadamard_fd_check",
    "hausdorff_distance",
    "homogeneity_check",
    "is_homothetic",
    "mesh_to_dict",
    "metrics",
    "minkowski_sum",
    "mixed_torsion",
    "objective",
    "polygon_corpus",
    "polygon_from_dict",
    "polygon_to_dict",
    "project_balance",
    "random_polygon",
    "refine",
    "regular_polygon",
    "representation_residual",
    "run_verify_corpus",
    "scale",
    "solve_minkowski",
    "solve_on_polygon",
    "solve_torsion",
    "steiner_point",
    "support_function",
    "support_spec_of",
    "support_values",
    "tau_refined",
    "torsion_measure",
    "torsional_rigidity",
    "translate",
    "triangulate",
    "uniqueness_probe",
    "unit_vector",
]
