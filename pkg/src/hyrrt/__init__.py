"""Sampling-based motion planning for hybrid dynamical systems."""

from .arcs import HybridArc, HybridTime, HybridTimeDomain, SolutionPair, are_close, concat, concat_all, truncate
from .gallery import GALLERY, make_biped, make_bouncing_ball, make_point_mass
from .library import FlowInputSignal, InputLibrary, build_flow_library, sample_flow_input, sample_jump_input
from .planner import (
    ExtendOutcome,
    PlannerConfig,
    PlanResult,
    SearchTree,
    check_solution,
    extend,
    hyrrt,
    nearest_neighbor,
    new_state,
    path_to_motion_plan,
    random_state,
    tree_init,
)
from .simulate import (
    IntegratorScheme,
    PriorityRule,
    ZeroCrossingConfig,
    continuous_simulator,
    detect_crossing,
    discrete_simulator,
    integrator_step,
)
from .system import (
    Box,
    HybridSystem,
    MotionPlanningProblem,
    StateSet,
    clearance_check,
    in_C_prime,
    in_D_prime,
    inflate,
)
from .validation import ValidationReport, check_motion_plan, validate_solution_pair

__version__ = "0.1.0"
