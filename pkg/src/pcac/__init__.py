"""Predictive cost adaptive control of a quadrotor.

Subpackages by responsibility:

- ``dynamics``: nonlinear plant model and adaptive-step integrator
- ``linear_model``: hover linearization, exact ZOH discretization, and the
  sparse input-matrix parameterization
- ``rls``: recursive least squares with variable-rate forgetting
- ``qp``: dense active-set quadratic programming
- ``controller``: receding-horizon control on the identified model
- ``harness``: scenario runner, trace output, and plots
- ``oracles``: independent reference computations for verification
"""

from .controller import (
    ControllerFault,
    ControllerState,
    PcacConfig,
    StepDiagnostics,
    build_prediction,
    compute_control,
    encode_qp,
)
from .dynamics import (
    IntegrationError,
    SingularOrientationError,
    VehicleParams,
    euler_kinematics,
    euler_rate_jacobian,
    hover_input,
    integrate_step,
    rotation_matrix,
    state_derivative,
)
from .harness import (
    ConfigError,
    Event,
    Scenario,
    Trace,
    TraceRecord,
    builtin_scenario_path,
    build_pcac_config,
    command_trajectory,
    emit_outputs,
    load_scenario,
    load_trace_csv,
    reference_window,
    run_scenario,
    scenario_from_dict,
    scenario_model,
    write_trace_csv,
)
from .linear_model import (
    BD_SPARSITY,
    LinearHoverModel,
    TemplateViolationError,
    assemble_Bd,
    build_continuous,
    controllability_matrix,
    discretize,
    regressor,
    regressor_diagonal,
    true_theta,
)
from .qp import QpProblem, QpSolution, solve
from .rls import (
    CovarianceError,
    RlsState,
    VrfConfig,
    initial_state,
    performance_variable,
    rls_update,
    vrf_lambda,
)

__version__ = "0.1.0"
