"""Scenario-driven closed-loop simulation with trace and plot output.

A scenario bundles the vehicle, the identifier and controller settings,
the command trajectory, timed plant changes, and the noise/seed setup.
Running one executes the measure, identify, optimize, integrate loop at
the controller rate and returns a trace with one record per control step.

Scenario files are YAML; see ``scenarios/example1.yaml`` and
``scenarios/example2.yaml`` for the two shipped presets.
"""

import csv
import importlib.resources
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .controller import (
    ControllerFault,
    ControllerState,
    PcacConfig,
    compute_control,
)
from .dynamics import (
    IntegrationError,
    SingularOrientationError,
    VehicleParams,
    integrate_step,
)
from .linear_model import LinearHoverModel, true_theta
from .rls import CovarianceError, VrfConfig, initial_state, rls_update

__all__ = [
    "ConfigError",
    "Event",
    "Scenario",
    "TraceRecord",
    "Trace",
    "command_trajectory",
    "reference_window",
    "run_scenario",
    "build_pcac_config",
    "scenario_model",
    "write_trace_csv",
    "load_trace_csv",
    "emit_outputs",
    "load_scenario",
    "builtin_scenario_path",
    "CSV_COLUMNS",
]


class ConfigError(ValueError):
    """A scenario file or dictionary is malformed."""


@dataclass(frozen=True)
class Event:
    """Timed plant change. Only mass changes are supported: either a
    multiplicative ``scale`` on the initial mass or an absolute ``value``."""

    time: float
    param: str = "mass"
    scale: float = None
    value: float = None

    def __post_init__(self):
        if self.param != "mass":
            raise ConfigError(f"unsupported event parameter '{self.param}'")
        if (self.scale is None) == (self.value is None):
            raise ConfigError("event needs exactly one of 'scale' or 'value'")


@dataclass
class Scenario:
    """Complete description of one closed-loop run."""

    name: str
    vehicle: VehicleParams
    sample_time: float
    duration: float
    theta0: np.ndarray
    p0_scale: float
    vrf: VrfConfig
    horizon: int
    q_stage: np.ndarray
    q_terminal_scale: float
    r_control: np.ndarray
    s_slack: float
    xi_max: np.ndarray
    u_max: np.ndarray
    du_max: np.ndarray
    u_min: np.ndarray = None
    du_min: np.ndarray = None
    command: dict = field(default_factory=lambda: {"type": "periodic"})
    events: tuple = ()
    noise: np.ndarray = field(default_factory=lambda: np.zeros(12))
    seed: int = 0
    x0: np.ndarray = field(default_factory=lambda: np.zeros(12))

    def __post_init__(self):
        self.theta0 = _broadcast(self.theta0, 12, "theta0")
        self.q_stage = _broadcast(self.q_stage, 12, "q_stage")
        self.r_control = _broadcast(self.r_control, 4, "r_control")
        self.xi_max = _broadcast(self.xi_max, 3, "xi_max")
        self.u_max = _broadcast(self.u_max, 4, "u_max")
        self.du_max = _broadcast(self.du_max, 4, "du_max")
        self.u_min = -self.u_max if self.u_min is None else _broadcast(self.u_min, 4, "u_min")
        self.du_min = -self.du_max if self.du_min is None else _broadcast(self.du_min, 4, "du_min")
        self.noise = _broadcast(self.noise, 12, "noise")
        self.x0 = _broadcast(self.x0, 12, "x0")
        if not self.duration > 0:
            raise ConfigError(f"duration must be positive, got {self.duration}")
        if not self.sample_time > 0:
            raise ConfigError(f"sample_time must be positive, got {self.sample_time}")
        for ev in self.events:
            if not 0.0 <= ev.time <= self.duration:
                raise ConfigError(
                    f"event time {ev.time} outside [0, {self.duration}]"
                )

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.sample_time))


def _broadcast(value, size, name) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape == (1,):
        arr = np.full(size, arr[0])
    if arr.shape != (size,):
        raise ConfigError(f"{name} must be a scalar or length-{size} sequence")
    return arr


def load_scenario(path) -> Scenario:
    """Load a scenario from a YAML file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot load scenario {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"scenario file {path} must contain a mapping")
    return scenario_from_dict(data)


def scenario_from_dict(data: dict) -> Scenario:
    """Build a Scenario from a parsed configuration mapping."""
    try:
        vehicle = data["vehicle"]
        params = VehicleParams(
            m=float(vehicle["mass"]),
            J=vehicle["inertia"],
            g=float(vehicle.get("gravity", 9.81)),
        )
        vrf_d = data.get("vrf", {})
        vrf = VrfConfig(
            eta=float(vrf_d.get("eta", 0.0)),
            tau_n=int(vrf_d.get("tau_n", 5)),
            tau_d=int(vrf_d.get("tau_d", 25)),
            lambda_min=float(vrf_d.get("lambda_min", 0.01)),
            threshold=float(vrf_d.get("threshold", 1.4)),
        )
        pcac = data["pcac"]
        events = tuple(
            Event(
                time=float(ev["time"]),
                param=ev.get("param", "mass"),
                scale=None if "scale" not in ev else float(ev["scale"]),
                value=None if "value" not in ev else float(ev["value"]),
            )
            for ev in data.get("events", []) or ()
        )
        return Scenario(
            name=str(data.get("name", "scenario")),
            vehicle=params,
            sample_time=float(data["sample_time"]),
            duration=float(data["duration"]),
            theta0=data["theta0"],
            p0_scale=float(data.get("p0_scale", 1e6)),
            vrf=vrf,
            horizon=int(pcac["horizon"]),
            q_stage=pcac["q_stage"],
            q_terminal_scale=float(pcac.get("q_terminal_scale", 1.0)),
            r_control=pcac["r_control"],
            s_slack=float(pcac["s_slack"]),
            xi_max=pcac["xi_max"],
            u_max=pcac["u_max"],
            du_max=pcac["du_max"],
            u_min=pcac.get("u_min"),
            du_min=pcac.get("du_min"),
            command=dict(data.get("command", {"type": "periodic"})),
            events=events,
            noise=data.get("noise", 0.0),
            seed=int(data.get("seed", 0)),
            x0=data.get("x0", 0.0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid scenario configuration: {exc!r}") from exc


def builtin_scenario_path(name: str):
    """Filesystem path of a packaged scenario preset ('example1', 'example2')."""
    resource = importlib.resources.files("pcac") / "scenarios" / f"{name}.yaml"
    if not resource.is_file():
        raise ConfigError(f"no builtin scenario named '{name}'")
    return resource


def command_trajectory(t: float, command: dict = None) -> np.ndarray:
    """Full state command r(t).

    ``periodic``: position [cos(2t)-1, sin(2t), sin(t)] with the matching
    velocity rows; angles and rates are commanded to zero. ``hover``: all
    zeros. ``setpoint``: constant position with zero velocity.
    """
    kind = (command or {"type": "periodic"}).get("type", "periodic")
    r = np.zeros(12)
    if kind == "periodic":
        r[0] = np.cos(2.0 * t) - 1.0
        r[1] = np.sin(2.0 * t)
        r[2] = np.sin(t)
        r[6] = -2.0 * np.sin(2.0 * t)
        r[7] = 2.0 * np.cos(2.0 * t)
        r[8] = np.cos(t)
    elif kind == "hover":
        pass
    elif kind == "setpoint":
        r[0:3] = np.asarray(command.get("position", [0.0, 0.0, 0.0]), dtype=float)
    else:
        raise ConfigError(f"unknown command type '{kind}'")
    return r


def reference_window(command: dict, t: float, Ts: float, horizon: int) -> np.ndarray:
    """Command samples at t + Ts, ..., t + horizon*Ts, shape (horizon, 12)."""
    return np.array(
        [command_trajectory(t + (i + 1) * Ts, command) for i in range(horizon)]
    )


def build_pcac_config(scenario: Scenario, model: LinearHoverModel) -> PcacConfig:
    """Controller configuration for a scenario.

    The angle constraints are encoded as 6 rows (two-sided bounds on the
    three Euler angles) sharing 3 slack variables, one per angle.
    """
    Q = np.diag(scenario.q_stage)
    C = np.zeros((6, 12))
    C[0:3, 3:6] = np.eye(3)
    C[3:6, 3:6] = -np.eye(3)
    d = np.concatenate([-scenario.xi_max, -scenario.xi_max])
    return PcacConfig(
        horizon=scenario.horizon,
        Ad=model.Ad,
        Q=Q,
        Q_terminal=scenario.q_terminal_scale * Q,
        R=np.diag(scenario.r_control),
        S=scenario.s_slack * np.eye(3),
        C=C,
        d=d,
        slack_map=np.array([0, 1, 2, 0, 1, 2]),
        u_min=scenario.u_min,
        u_max=scenario.u_max,
        du_min=scenario.du_min,
        du_max=scenario.du_max,
        mg_comp=scenario.vehicle.m * scenario.vehicle.g,
    )


def scenario_model(scenario: Scenario) -> LinearHoverModel:
    """Discretized hover model for the scenario's initial vehicle."""
    return LinearHoverModel.from_params(scenario.vehicle, scenario.sample_time)


@dataclass(frozen=True)
class TraceRecord:
    """One control step: plant state, measurement, input, and diagnostics."""

    t: float
    state: np.ndarray
    measured: np.ndarray
    applied: np.ndarray
    theta: np.ndarray
    lam: float
    slack_max: float
    qp_iterations: int
    qp_kkt: float
    tracking_error: np.ndarray


@dataclass
class Trace:
    """Recorded run. ``fault`` is None for a clean run, else a description
    of why the loop aborted (the records up to the fault are kept)."""

    records: list
    fault: str = None

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.records])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def states(self) -> np.ndarray:
        return self.column("state")

    @property
    def inputs(self) -> np.ndarray:
        return self.column("applied")

    @property
    def thetas(self) -> np.ndarray:
        return self.column("theta")

    @property
    def lams(self) -> np.ndarray:
        return self.column("lam")

    @property
    def tracking_errors(self) -> np.ndarray:
        return self.column("tracking_error")


def _mass_at(scenario: Scenario, t: float) -> float:
    # Post-event value applies to the interval starting at t iff the event
    # time is <= t (boundary-exact, with a tiny slop for float sample times).
    m = scenario.vehicle.m
    for ev in scenario.events:
        if ev.time <= t + 1e-9:
            m = ev.scale * scenario.vehicle.m if ev.scale is not None else ev.value
    return m


def run_scenario(scenario: Scenario) -> Trace:
    """Execute the closed loop and return the trace.

    Loop per step: apply any due plant events (the gravity feedforward
    follows the current plant mass), measure, update the identifier, solve
    the receding-horizon problem for the next interval's control, record,
    then integrate the plant over one sample period with the held input.

    Faults (attitude singularity, integration failure, covariance loss, QP
    iteration cap, non-finite state) abort the loop; the partial trace is
    returned with the fault description attached.
    """
    model = scenario_model(scenario)
    config = build_pcac_config(scenario, model)
    rls_state = initial_state(scenario.theta0, scenario.p0_scale)
    ctrl = ControllerState()
    x = scenario.x0.copy()
    rng = np.random.default_rng(scenario.seed)
    noise_on = bool(np.any(scenario.noise > 0))
    Ts = scenario.sample_time

    records = []
    y_prev = None
    u_prev = None
    params = scenario.vehicle

    try:
        for k in range(scenario.n_steps):
            t = k * Ts
            mass = _mass_at(scenario, t)
            if mass != params.m:
                params = replace(params, m=mass)
                config = replace(config, mg_comp=mass * params.g)
            y = x + rng.standard_normal(12) * scenario.noise if noise_on else x.copy()
            if k >= 1:
                rls_state = rls_update(
                    rls_state, y, y_prev, u_prev, model.Ad, scenario.vrf
                )
            refs = reference_window(scenario.command, t, Ts, scenario.horizon)
            u_dev = ctrl.u
            applied = u_dev + config.gravity_offset
            _, ctrl, diag = compute_control(y, refs, rls_state, ctrl, config)
            r_now = command_trajectory(t, scenario.command)
            records.append(
                TraceRecord(
                    t=t,
                    state=x.copy(),
                    measured=y,
                    applied=applied,
                    theta=rls_state.theta.copy(),
                    lam=rls_state.lam,
                    slack_max=diag.slack_max,
                    qp_iterations=diag.qp_iterations,
                    qp_kkt=diag.qp_kkt,
                    tracking_error=x[0:3] - r_now[0:3],
                )
            )
            x = integrate_step(x, applied, params, Ts)
            if not np.all(np.isfinite(x)):
                raise IntegrationError(f"non-finite state after step {k}")
            y_prev = y
            u_prev = u_dev
    except (SingularOrientationError, IntegrationError, CovarianceError,
            ControllerFault) as exc:
        return Trace(records=records, fault=f"{type(exc).__name__}: {exc}")

    return Trace(records=records)


# ---------------------------------------------------------------------------
# Trace serialization and plots

CSV_COLUMNS = (
    ["t", "p1", "p2", "p3", "psi", "phi", "theta",
     "v1", "v2", "v3", "w1", "w2", "w3"]
    + [f"y{i}" for i in range(1, 13)]
    + ["f", "tau1", "tau2", "tau3"]
    + [f"th{i}" for i in range(1, 13)]
    + ["lambda", "slack_max", "qp_iters", "qp_kkt"]
    + ["e1", "e2", "e3"]
)


def _record_row(rec: TraceRecord):
    values = (
        [rec.t]
        + list(rec.state)
        + list(rec.measured)
        + list(rec.applied)
        + list(rec.theta)
        + [rec.lam, rec.slack_max, float(rec.qp_iterations), rec.qp_kkt]
        + list(rec.tracking_error)
    )
    return [format(v, ".17g") for v in values]


def write_trace_csv(trace: Trace, path) -> None:
    """Write the trace with a header row and 17-significant-digit floats."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in trace.records:
                writer.writerow(_record_row(rec))
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def load_trace_csv(path):
    """Read a trace CSV back as (column names, float array of shape (N, 48))."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from exc
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    return header, data


def emit_outputs(trace: Trace, out_dir, scenario: Scenario, plots: bool = True):
    """Write {name}.csv and, unless disabled, the standard plot panels.

    Returns the list of written file paths. An empty trace produces a
    header-only CSV and no plots.
    """
    import pathlib

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = out / f"{scenario.name}.csv"
    write_trace_csv(trace, csv_path)
    written.append(csv_path)
    if plots and len(trace):
        written.extend(_write_plots(trace, out, scenario))
    return written


def _write_plots(trace: Trace, out, scenario: Scenario):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    name = scenario.name
    t = trace.t
    states = trace.states
    inputs = trace.inputs
    thetas = trace.thetas
    model = scenario_model(scenario)
    theta_star = true_theta(model.Bd)
    r = np.array([command_trajectory(ti, scenario.command) for ti in t])
    written = []

    def save(fig, suffix):
        path = out / f"{name}_{suffix}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    for i, ax in enumerate(axes):
        ax.plot(t, states[:, i], label=f"p{i + 1}")
        ax.plot(t, r[:, i], "k--", lw=1, label="command")
        ax.set_ylabel(f"p{i + 1} [m]")
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("t [s]")
    fig.suptitle(f"{name}: position vs command")
    save(fig, "position")

    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    labels = ["psi", "phi", "theta"]
    for i, ax in enumerate(axes):
        ax.plot(t, states[:, 3 + i])
        ax.axhline(scenario.xi_max[i], color="r", ls=":", lw=1)
        ax.axhline(-scenario.xi_max[i], color="r", ls=":", lw=1)
        ax.set_ylabel(f"{labels[i]} [rad]")
    axes[-1].set_xlabel("t [s]")
    fig.suptitle(f"{name}: Euler angles with bounds")
    save(fig, "angles")

    fig, axes = plt.subplots(4, 3, figsize=(10, 8), sharex=True)
    for i in range(12):
        ax = axes[i // 3][i % 3]
        ax.plot(t, thetas[:, i])
        ax.axhline(theta_star[i], color="k", ls="--", lw=1)
        ax.set_title(f"th{i + 1}", fontsize=8)
    fig.suptitle(f"{name}: identified parameters (dashed: true values)")
    save(fig, "theta")

    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(t, trace.lams)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("forgetting factor")
    ax.set_ylim(0, 1.05)
    fig.suptitle(f"{name}: forgetting factor")
    save(fig, "lambda")

    fig, axes = plt.subplots(4, 1, figsize=(8, 8), sharex=True)
    ff = scenario.vehicle.m * scenario.vehicle.g
    offsets = [ff, 0.0, 0.0, 0.0]
    labels = ["f [N]", "tau1 [N m]", "tau2 [N m]", "tau3 [N m]"]
    for i, ax in enumerate(axes):
        ax.plot(t, inputs[:, i])
        ax.axhline(scenario.u_max[i] + offsets[i], color="r", ls=":", lw=1)
        ax.axhline(scenario.u_min[i] + offsets[i], color="r", ls=":", lw=1)
        ax.set_ylabel(labels[i])
    axes[-1].set_xlabel("t [s]")
    fig.suptitle(f"{name}: applied inputs with bounds")
    save(fig, "inputs")
    return written
