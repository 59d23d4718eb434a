"""Energy-conserving time integration for solids with internal variables."""

from .bulk import BulkParams, BulkProblem
from .errors import (
    ConsdynError,
    DimensionMismatchError,
    InvalidArgumentError,
    NonConvergedError,
    NotPositiveDefiniteError,
    SingularElementError,
    UnknownTagError,
    ZetaSubstepFailedError,
)
from .experiments import (
    ExperimentConfig,
    refinement_study,
    run_experiment,
)
from .fem import ElasticityParams, Mesh2D, assemble_operators, build_bar_mesh
from .problem import MatrixProblem, ThreeFieldProblem
from .schemes import (
    run_trajectory,
    step_backward_euler,
    step_cn_monolithic,
    step_fractional,
)
from .state import EnergyLedger, LoadSampling, Scheme, SchemeConfig, State3F
from .surface import DelaminationProblem, FrictionProblem, SurfaceParams

__all__ = [
    "BulkParams",
    "BulkProblem",
    "ConsdynError",
    "DimensionMismatchError",
    "InvalidArgumentError",
    "NonConvergedError",
    "NotPositiveDefiniteError",
    "SingularElementError",
    "UnknownTagError",
    "ZetaSubstepFailedError",
    "ExperimentConfig",
    "refinement_study",
    "run_experiment",
    "ElasticityParams",
    "Mesh2D",
    "assemble_operators",
    "build_bar_mesh",
    "MatrixProblem",
    "ThreeFieldProblem",
    "run_trajectory",
    "step_backward_euler",
    "step_cn_monolithic",
    "step_fractional",
    "EnergyLedger",
    "LoadSampling",
    "Scheme",
    "SchemeConfig",
    "State3F",
    "DelaminationProblem",
    "FrictionProblem",
    "SurfaceParams",
]

__version__ = "0.1.0"
