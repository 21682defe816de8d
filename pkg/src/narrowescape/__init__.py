"""Mean first passage times for narrow escape through thin necks.

Three independent routes to the same quantity:

* :mod:`~narrowescape.asymptotics`: closed-form expansion in the window half-widths
* :mod:`~narrowescape.robin_bie`: boundary-integral solve of the equivalent Robin problem
* :mod:`~narrowescape.montecarlo`: reflected Brownian motion in the head-plus-necks domain
"""

from .asymptotics import (
    AsymptoticSolution,
    SingularSystemError,
    TooCloseToWindowError,
    mfpt_n,
    mfpt_two,
    mfpt_two_disk_symmetric,
    solve_asymptotic,
)
from .geometry import (
    HeadDomain,
    NeckSpec,
    ProblemSpec,
    ValidationError,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    validate,
)
from .montecarlo import WalkerStats, neck_profile_check, simulate
from .neumann import NeumannKernel
from .robin_bie import IllConditionedError, RobinSolution, compare, solve_robin
from .tables import fit_series

__all__ = [
    "AsymptoticSolution",
    "SingularSystemError",
    "TooCloseToWindowError",
    "mfpt_n",
    "mfpt_two",
    "mfpt_two_disk_symmetric",
    "solve_asymptotic",
    "HeadDomain",
    "NeckSpec",
    "ProblemSpec",
    "ValidationError",
    "load_problem",
    "problem_from_dict",
    "problem_to_dict",
    "validate",
    "WalkerStats",
    "neck_profile_check",
    "simulate",
    "NeumannKernel",
    "IllConditionedError",
    "RobinSolution",
    "compare",
    "solve_robin",
    "fit_series",
]
