"""Receding-horizon controller built on the online-identified model.

Each step the controller reassembles the discrete input matrix from the
current parameter estimate, stacks the horizon prediction, and encodes a
dense QP over the future control sequence plus per-stage slack variables
that soften the state constraints. The optimized control is a deviation
from hover; a gravity feedforward is added before application so the
linear model stays valid around the hover operating point.

Timing convention: the control applied over the upcoming sample interval
was optimized during the previous one, so the prediction is seeded with
the one-step-ahead output under the currently applied control.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import qp
from .linear_model import assemble_Bd
from .rls import RlsState

__all__ = [
    "ControllerFault",
    "PcacConfig",
    "ControllerState",
    "StepDiagnostics",
    "build_prediction",
    "encode_qp",
    "compute_control",
    "prediction_basis",
]

_NU = 4
_NY = 12


class ControllerFault(RuntimeError):
    """The control optimization failed (iteration cap or solver fault)."""


def prediction_basis(Ad, horizon: int) -> np.ndarray:
    """Stacked powers [I; Ad; ...; Ad^(horizon-1)], shape (12*horizon, 12).

    Depends only on the fixed dynamics matrix, so it is computed once per
    configuration rather than per control step.
    """
    Ad = np.asarray(Ad, dtype=float)
    blocks = [np.eye(_NY)]
    for _ in range(horizon - 1):
        blocks.append(Ad @ blocks[-1])
    return np.vstack(blocks)


@dataclass
class PcacConfig:
    """Weights, constraints, bounds, fixed dynamics, and feedforward.

    ``C``, ``d`` and ``slack_map`` define the softened state constraints:
    row j requires C[j] @ y + d[j] <= eps[slack_map[j]], so several rows may
    share one slack variable (used for two-sided angle bounds).
    """

    horizon: int
    Ad: np.ndarray
    Q: np.ndarray
    Q_terminal: np.ndarray
    R: np.ndarray
    S: np.ndarray
    C: np.ndarray
    d: np.ndarray
    slack_map: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    du_min: np.ndarray
    du_max: np.ndarray
    mg_comp: float

    # Derived static matrices, built once in __post_init__.
    gamma: np.ndarray = field(init=False, repr=False)
    Qbar: np.ndarray = field(init=False, repr=False)
    Sbar: np.ndarray = field(init=False, repr=False)
    Cbar: np.ndarray = field(init=False, repr=False)
    dbar: np.ndarray = field(init=False, repr=False)
    Mbar: np.ndarray = field(init=False, repr=False)
    Dmat: np.ndarray = field(init=False, repr=False)
    DtRD: np.ndarray = field(init=False, repr=False)
    DtRE: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ell = int(self.horizon)
        if ell < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        self.horizon = ell
        for name in ("Ad", "Q", "Q_terminal", "R", "S", "C", "d",
                     "u_min", "u_max", "du_min", "du_max"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.slack_map = np.asarray(self.slack_map, dtype=int)
        n_c = self.S.shape[0]
        n_r = self.C.shape[0]
        if self.C.shape != (n_r, _NY) or self.d.shape != (n_r,):
            raise ValueError("constraint data C, d have inconsistent shapes")
        if self.slack_map.shape != (n_r,) or (
            n_r > 0 and (self.slack_map.min() < 0 or self.slack_map.max() >= n_c)
        ):
            raise ValueError("slack_map must map each constraint row to a slack index")
        for name in ("Q", "Q_terminal"):
            if np.linalg.eigvalsh(getattr(self, name)).min() <= 0:
                raise ValueError(f"{name} must be positive definite")
        for name in ("R", "S"):
            if np.linalg.eigvalsh(getattr(self, name)).min() < -1e-12:
                raise ValueError(f"{name} must be positive semidefinite")
        if np.any(self.u_min > self.u_max) or np.any(self.du_min > self.du_max):
            raise ValueError("bounds must satisfy min <= max elementwise")

        self.gamma = prediction_basis(self.Ad, ell)
        self.Qbar = scipy.linalg.block_diag(
            *([self.Q] * (ell - 1) + [self.Q_terminal])
        )
        self.Sbar = scipy.linalg.block_diag(*([self.S] * ell)) if n_c else np.zeros((0, 0))
        self.Cbar = scipy.linalg.block_diag(*([self.C] * ell)) if n_r else np.zeros((0, _NY * ell))
        self.dbar = np.tile(self.d, ell)
        M = np.zeros((n_r, n_c))
        M[np.arange(n_r), self.slack_map] = 1.0
        self.Mbar = scipy.linalg.block_diag(*([M] * ell)) if n_r else np.zeros((0, n_c * ell))

        # Difference operator: (Dmat @ U)_i = u_i - u_{i-1}, with u_0 taken
        # from the separate anchor term E @ u_applied.
        nU = _NU * ell
        self.Dmat = np.eye(nU)
        for i in range(1, ell):
            self.Dmat[_NU * i:_NU * (i + 1), _NU * (i - 1):_NU * i] = -np.eye(_NU)
        Rbar = scipy.linalg.block_diag(*([self.R] * ell))
        E = np.zeros((nU, _NU))
        E[:_NU, :] = np.eye(_NU)
        self.DtRD = self.Dmat.T @ Rbar @ self.Dmat
        self.DtRE = self.Dmat.T @ Rbar @ E

    @property
    def n_slack(self) -> int:
        return self.S.shape[0]

    @property
    def n_rows(self) -> int:
        return self.C.shape[0]

    @property
    def gravity_offset(self) -> np.ndarray:
        return np.array([self.mg_comp, 0.0, 0.0, 0.0])


@dataclass
class ControllerState:
    """Applied deviation control and the previous horizon solution."""

    u: np.ndarray = field(default_factory=lambda: np.zeros(_NU))
    warm_U: np.ndarray = None


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step solver health published into the simulation trace."""

    qp_iterations: int
    qp_kkt: float
    slack_max: float
    objective: float


def build_prediction(Ad, Bd_hat, y, u, horizon: int, gamma=None):
    """Horizon prediction (gamma, T, y1) with Y = gamma @ y1 + T @ U.

    ``y1`` is the one-step-ahead output under the currently applied control
    ``u``; ``T`` is strictly lower block triangular (the first block row is
    zero) with blocks Ad^(i-1) @ Bd_hat below the diagonal. Pass a cached
    ``gamma`` to skip rebuilding the stacked powers.
    """
    Ad = np.asarray(Ad, dtype=float)
    Bd_hat = np.asarray(Bd_hat, dtype=float)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if gamma is None:
        gamma = prediction_basis(Ad, horizon)
    y1 = Ad @ np.asarray(y, dtype=float) + Bd_hat @ np.asarray(u, dtype=float)

    T = np.zeros((_NY * horizon, _NU * horizon))
    if horizon > 1:
        blocks = [Bd_hat]
        for _ in range(horizon - 2):
            blocks.append(Ad @ blocks[-1])
        for i in range(1, horizon):
            for j in range(i):
                T[_NY * i:_NY * (i + 1), _NU * j:_NU * (j + 1)] = blocks[i - j - 1]
    return gamma, T, y1


def encode_qp(prediction, r_traj, config: PcacConfig, u_applied) -> qp.QpProblem:
    """Encode the receding-horizon problem as a dense QP.

    Decision vector w = [u_1, ..., u_ell, eps_1, ..., eps_ell]. The output
    stack is eliminated through the affine prediction, leaving box bounds
    on the controls, rate bounds chained from the applied control, softened
    state constraints, and nonnegativity of the slacks.
    """
    gamma, T, y1 = prediction
    ell = config.horizon
    n_c = config.n_slack
    n_r = config.n_rows
    nU = _NU * ell
    nE = n_c * ell
    u_applied = np.asarray(u_applied, dtype=float)

    r = np.asarray(r_traj, dtype=float).reshape(ell, _NY).ravel()
    free = gamma @ y1
    ebar = free - r

    QT = config.Qbar @ T
    Huu = 2.0 * (T.T @ QT + config.DtRD)
    H = np.zeros((nU + nE, nU + nE))
    H[:nU, :nU] = 0.5 * (Huu + Huu.T)
    if nE:
        H[nU:, nU:] = 2.0 * config.Sbar
    c = np.zeros(nU + nE)
    c[:nU] = 2.0 * (QT.T @ ebar - config.DtRE @ u_applied)

    m_rows = 4 * nU + (n_r + n_c) * ell
    G = np.zeros((m_rows, nU + nE))
    h = np.zeros(m_rows)
    eyeU = np.eye(nU)
    row = 0
    G[row:row + nU, :nU] = eyeU
    h[row:row + nU] = np.tile(config.u_max, ell)
    row += nU
    G[row:row + nU, :nU] = -eyeU
    h[row:row + nU] = -np.tile(config.u_min, ell)
    row += nU
    anchor = np.zeros(nU)
    anchor[:_NU] = u_applied
    G[row:row + nU, :nU] = config.Dmat
    h[row:row + nU] = np.tile(config.du_max, ell) + anchor
    row += nU
    G[row:row + nU, :nU] = -config.Dmat
    h[row:row + nU] = -np.tile(config.du_min, ell) - anchor
    row += nU
    if n_r:
        G[row:row + n_r * ell, :nU] = config.Cbar @ T
        G[row:row + n_r * ell, nU:] = -config.Mbar
        h[row:row + n_r * ell] = -config.dbar - config.Cbar @ free
        row += n_r * ell
    if nE:
        G[row:row + nE, nU:] = -np.eye(nE)
        h[row:row + nE] = 0.0

    return qp.QpProblem(H=H, c=c, G=G, h=h)


def feasible_start(U_guess, u_applied, free, T, config: PcacConfig) -> np.ndarray:
    """Project a control-sequence guess onto the constraint set.

    Clips each stage into the intersection of the box and rate bounds
    (walking the chain from the applied control), then lifts the slacks to
    the resulting constraint excess. The result is always feasible.
    """
    ell = config.horizon
    U = np.asarray(U_guess, dtype=float).reshape(ell, _NU).copy()
    prev = np.asarray(u_applied, dtype=float)
    for i in range(ell):
        lo = np.maximum(config.u_min, prev + config.du_min)
        hi = np.minimum(config.u_max, prev + config.du_max)
        U[i] = np.clip(U[i], lo, hi)
        prev = U[i]
    eps = np.zeros((ell, config.n_slack))
    if config.n_rows:
        Y = (free + T @ U.ravel()).reshape(ell, _NY)
        excess = Y @ config.C.T + config.d
        for j, s in enumerate(config.slack_map):
            eps[:, s] = np.maximum(eps[:, s], excess[:, j])
        eps = np.maximum(eps, 0.0)
    return np.concatenate([U.ravel(), eps.ravel()])


def compute_control(y, r_traj, rls_state: RlsState, state: ControllerState,
                    config: PcacConfig, max_iter: int = 500):
    """One control computation: returns (applied input, new state, diagnostics).

    The returned input is the first optimized control plus the gravity
    feedforward; it is meant to be applied over the *next* sample interval.
    The warm start shifts the previous horizon solution by one stage,
    repeats the last block, and re-projects it onto the feasible set.

    Raises:
        ControllerFault: the QP hit its iteration cap or failed.
    """
    Bd_hat = assemble_Bd(rls_state.theta)
    gamma, T, y1 = build_prediction(
        config.Ad, Bd_hat, y, state.u, config.horizon, gamma=config.gamma
    )
    problem = encode_qp((gamma, T, y1), r_traj, config, state.u)

    nU = _NU * config.horizon
    if state.warm_U is None:
        guess = np.tile(state.u, config.horizon)
    else:
        guess = np.concatenate([state.warm_U[_NU:], state.warm_U[-_NU:]])
    problem.w0 = feasible_start(guess, state.u, gamma @ y1, T, config)

    solution = qp.solve(problem, max_iter=max_iter)
    if solution.status != qp.SOLVED:
        raise ControllerFault(
            f"QP returned status '{solution.status}' after "
            f"{solution.iterations} iterations (kkt={solution.kkt_residual:.3e})"
        )

    u1 = solution.w[:_NU].copy()
    eps = solution.w[nU:]
    new_state = ControllerState(u=u1, warm_U=solution.w[:nU].copy())
    diagnostics = StepDiagnostics(
        qp_iterations=solution.iterations,
        qp_kkt=solution.kkt_residual,
        slack_max=float(eps.max()) if eps.size else 0.0,
        objective=solution.objective,
    )
    return u1 + config.gravity_offset, new_state, diagnostics
