from .program import (  # noqa: F401
    EQ,
    GE,
    LE,
    LinearProgram,
    LpError,
    LpResult,
    LpStatus,
    Tolerances,
    WarmStart,
)
from .backends import (  # noqa: F401
    available_backends,
    register_backend,
    reset_solve_count,
    solve_count,
    solve_lp,
)
from .kernels import USING_COMPILED  # noqa: F401
from .mps import to_mps  # noqa: F401
from .simplex import dual_objective, solve_bundled  # noqa: F401
