"""Adaptive explicit Runge-Kutta integration with residual-based error certification."""
from .controller import ControllerConfig, ControllerState, I_CONTROLLER, PI_CONTROLLER
from .integrator import IntegrationTrace, StepRecord, default_k, final_error, gronwall_bound, solve
from .problems import Problem, make_problem
from .stability import build_jacobian, spectral_radius, stability_map
from .tableau import ButcherTableau, make_tableau

__version__ = "0.1.0"

__all__ = [
    "ButcherTableau",
    "ControllerConfig",
    "ControllerState",
    "I_CONTROLLER",
    "PI_CONTROLLER",
    "IntegrationTrace",
    "Problem",
    "StepRecord",
    "build_jacobian",
    "default_k",
    "final_error",
    "gronwall_bound",
    "make_problem",
    "make_tableau",
    "solve",
    "spectral_radius",
    "stability_map",
]
