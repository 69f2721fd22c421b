"""Time-optimal preparation of a two-qubit singlet with bounded couplings."""

__version__ = "0.1.0"

from .dynamics import (
    ControlParams,
    build_hamiltonian,
    error,
    evolve,
    find_gap_crossing,
    gap_scan,
    initial_state,
    propagator,
    q_sector,
    singlet_state,
)
from .errors import NumericalError, ValidationError
from .optimize import (
    MinTimeResult,
    OptimizationResult,
    adjoint_gradient,
    min_time_search,
    optimize_bang_bang,
    optimize_pwc,
)
from .pontryagin import (
    SwitchingTrace,
    conjugate_matrix,
    dj_coefficient,
    singular_invariant,
    solve_switching_time,
    switching_trace,
    terminal_costate,
)
from .protocols import (
    BangBangParams,
    Protocol,
    Segment,
    bang_bang_protocol,
    linear_protocol,
    make_pwc,
    protocol_from_dict,
    protocol_to_dict,
)
from .robustness import (
    RobustnessStats,
    TimingJitter,
    analytic_mean,
    monte_carlo,
    perturbed_error,
    sweep,
)

__all__ = [
    "BangBangParams",
    "ControlParams",
    "MinTimeResult",
    "NumericalError",
    "OptimizationResult",
    "Protocol",
    "RobustnessStats",
    "Segment",
    "SwitchingTrace",
    "TimingJitter",
    "ValidationError",
    "__version__",
    "adjoint_gradient",
    "analytic_mean",
    "bang_bang_protocol",
    "build_hamiltonian",
    "conjugate_matrix",
    "dj_coefficient",
    "error",
    "evolve",
    "find_gap_crossing",
    "gap_scan",
    "initial_state",
    "linear_protocol",
    "make_pwc",
    "min_time_search",
    "monte_carlo",
    "optimize_bang_bang",
    "optimize_pwc",
    "perturbed_error",
    "propagator",
    "protocol_from_dict",
    "protocol_to_dict",
    "q_sector",
    "singlet_state",
    "singular_invariant",
    "solve_switching_time",
    "sweep",
    "switching_trace",
    "terminal_costate",
]
