"""Sign-changing (nodal) mountain-pass solutions of p-Laplacian problems with
critical growth under symmetry: constants, bubble expansions, a symmetric
P1 discretisation, a mountain-pass solver and Pohozaev diagnostics.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    DomainError,
    MountainGeometryError,
    NodalMPError,
    StructuralError,
    SupportOverlapError,
)
from .problem_model import CoefficientField, ProblemSpec, X0Data  # noqa: E402
from .mesh_domain import build_mesh, build_symmetry  # noqa: E402
from .solver import SolverControls, VariationalProblem, mountain_pass  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "MountainGeometryError",
    "NodalMPError",
    "StructuralError",
    "SupportOverlapError",
    "CoefficientField",
    "ProblemSpec",
    "X0Data",
    "build_mesh",
    "build_symmetry",
    "SolverControls",
    "VariationalProblem",
    "mountain_pass",
]
