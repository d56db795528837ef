"""netslice: joint service-chain placement and flow routing optimization."""

from .model import (  # noqa: F401
    FractionalPlacement,
    Placement,
    ProblemInstance,
    RoutingPlan,
    ServiceRequest,
    Solution,
    SolutionStatus,
    ValidationError,
)
from .io import (  # noqa: F401
    InstanceFormatError,
    read_instance,
    read_solution,
    write_instance,
    write_solution,
)

__version__ = "0.1.0"
