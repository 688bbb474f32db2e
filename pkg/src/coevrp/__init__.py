"""Two-company collaborative (electric) vehicle routing with meet points."""

from .alns import AlnsConfig, solve_alns, solve_noncollab
from .charging_lp import Infeasible, solve_charging
from .evaluator import EvalReport, validate
from .exact import ExactConfig, solve_exact, solve_noncollab_exact
from .model import (
    EvMode,
    Instance,
    InstanceError,
    Solution,
    TwMode,
    VehicleRoute,
    builtin_gothenburg,
    generate_instance,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
)

__all__ = [
    "AlnsConfig",
    "EvMode",
    "EvalReport",
    "ExactConfig",
    "Infeasible",
    "Instance",
    "InstanceError",
    "Solution",
    "TwMode",
    "VehicleRoute",
    "builtin_gothenburg",
    "generate_instance",
    "load_instance",
    "load_solution",
    "save_instance",
    "save_solution",
    "solve_alns",
    "solve_charging",
    "solve_exact",
    "solve_noncollab",
    "solve_noncollab_exact",
    "validate",
]
