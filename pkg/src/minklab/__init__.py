"""Support-function workbench for the L_p Minkowski problem on S^2.

Convex bodies are represented by their support functions sampled on a
latitude-longitude grid.  The package solves det(u_ij + u delta_ij) = f u^(p-1),
builds Wulff shapes and Firey combinations, and checks the algebraic
identities behind the uniqueness results for p in [-1, 1).
"""

__version__ = "0.1.0"

from .sphere import ScalarField, SphereGrid, build_grid, covariant_hessian, tangential_gradient  # noqa: E402
from .curvature import CurvatureField, curvatures_from_support, verify_surface_identities  # noqa: E402
from .solver import SolverConfig, SolveResult, residual, solve  # noqa: E402

__all__ = [
    "__version__",
    "ScalarField",
    "SphereGrid",
    "build_grid",
    "covariant_hessian",
    "tangential_gradient",
    "CurvatureField",
    "curvatures_from_support",
    "verify_surface_identities",
    "SolverConfig",
    "SolveResult",
    "residual",
    "solve",
]
