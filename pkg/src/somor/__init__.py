"""somor: reduction of sparse second-order index-3 DAE systems.

Constrained mechanical models M x'' + D x' + K x + G^T z = F u, G x = 0,
y = L x are reduced to small dense second-order models by tangential
interpolation whose linear solves go through sparse augmented (saddle-point)
systems instead of the explicit null-space projector. A dense desk-scale
projection oracle and a dense balanced-truncation baseline back every step
with independently computed ground truth.
"""

__version__ = "0.1.0"

from .benchmarks import DsmsParams, TcomParams, gen_dsms, gen_tcom
from .dense_bt import BalancedReduction, balanced_truncate, solve_lyapunov
from .freq_response import (
    ErrorCurves,
    FrequencyGrid,
    FrequencyResponseTable,
    error_curves,
    full_response,
    make_grid,
    reduced_response,
)
from .irka_reducer import (
    ConvergenceTrace,
    IrkaOptions,
    ShiftSet,
    check_interpolation,
    init_shifts,
    irka_reduce,
)
from .model_core import (
    FirstOrderRealization,
    ReducedSecondOrderModel,
    SecondOrderIndex3System,
    ValidationReport,
    embed_first_order,
    make_system,
    validate_system,
)
from .projection_oracle import (
    ProjectedSystem,
    Projector,
    ProjectorSplit,
    build_projector,
    project_system,
    projected_transfer,
    split_projector,
)
from .saddle_solver import SaddleOperator, assemble, solve_left, solve_many, solve_right

__all__ = [
    "__version__",
    "BalancedReduction", "ConvergenceTrace", "DsmsParams", "ErrorCurves",
    "FirstOrderRealization", "FrequencyGrid", "FrequencyResponseTable",
    "IrkaOptions", "ProjectedSystem", "Projector", "ProjectorSplit",
    "ReducedSecondOrderModel", "SaddleOperator", "SecondOrderIndex3System",
    "ShiftSet", "TcomParams", "ValidationReport",
    "assemble", "balanced_truncate", "build_projector", "check_interpolation",
    "embed_first_order", "error_curves", "full_response", "gen_dsms",
    "gen_tcom", "init_shifts", "irka_reduce", "make_grid", "make_system",
    "project_system", "projected_transfer", "reduced_response",
    "solve_left", "solve_lyapunov", "solve_many", "solve_right",
    "split_projector", "validate_system",
]
