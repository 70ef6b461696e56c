"""fracshape: uniform prefractal domains, boundary volumes, and Robin Helmholtz shape experiments."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .geometry import (
    DIRICHLET,
    NEUMANN,
    ROBIN,
    CigarProfile,
    GeometryError,
    PointSample,
    Polygon,
    PolygonalDomain,
    Polyline,
    char_fn_distance,
    cigar_contained,
    compacts_convergence_check,
    domain_hausdorff_distance,
    estimate_epsilon,
    estimate_epsilon_report,
    frechet_distance,
    hausdorff_distance,
    koch_prefractal,
)
from .measures import (
    BoundaryMeasure,
    ScalingReport,
    natural_prefractal_measure,
    sum_measures,
    verify_Ds,
    verify_Ld,
    verify_lower_ahlfors,
    verify_normalized,
    verify_upper_ahlfors,
    weak_convergence_gap,
)
from .admissibility import (
    AdmissibilityReport,
    ConvergenceDiagnostics,
    ShapeClassParams,
    check_jonsson_admissible,
    check_shape_admissible,
    sequence_diagnostics,
)
from .meshing import Mesh, boundary_quadrature, holdall_mesh, triangulate
from .helmholtz import (
    ComplexField,
    HelmholtzData,
    SolveReport,
    assemble,
    besov_norm,
    extension_to_holdall,
    harmonic_extension,
    normal_derivative_pairing,
    poincare_constant,
    solve_helmholtz,
    trace,
    trace_inequality_ratio,
)
from .variational import EnergyFunctional, EnergyValue, energy_J, minimize_J_with_load, mosco_experiment
from .search import BumpWallFamily, KochWallFamily, evaluate_shape, minimize_shape

__version__ = "0.1.0"
