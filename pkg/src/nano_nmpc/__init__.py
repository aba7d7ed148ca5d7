"""Nano-quadrotor NMPC: quaternion dynamics, real-time iterations over a
condensed box QP, and a closed-loop simulation harness."""

from .errors import (
    ConfigError,
    DegenerateInputError,
    IntegrationDivergedError,
    InvalidInputError,
    SimulationError,
)
from .harness import RunSummary, SimConfig, SimLog, emit_outputs, rate_inner_loop, run_simulation
from .integrator import (
    IntegratorConfig,
    SensitivityResult,
    integrate,
    integrate_with_sensitivities,
    rk4_step,
)
from .model import (
    QuadrotorPlantModel,
    QuadrotorReducedModel,
    VehicleParams,
    allocation_matrix,
    dynamics_full,
    dynamics_reduced,
    full_state,
    hover_input,
    hover_state,
    reduce_state,
    jacobians_reduced,
    quat_conjugate,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    rotor_speeds_from_wrench,
    wrench_from_rotor_speeds,
)
from .ocp import (
    OcpSpec,
    ReferenceWindow,
    clamp_and_check_bounds,
    default_ocp_spec,
    hemisphere_align,
    stage_cost,
    terminal_cost,
)
from .qp import DenseQp, QpSolution, dump_qp, solve_box_qp
from .reference import (
    CruiseScenario,
    HelixScenario,
    HoverScenario,
    StepScenario,
    sample,
    takeoff_cruise_land,
    window,
)
from .solver import (
    RtiSolution,
    ShootingTrajectory,
    cold_start_trajectory,
    condense,
    linearize,
    rti_step,
    shift,
    solve_to_convergence,
)

__version__ = "0.1.0"
