"""Recursive least squares over the 12 sparse input-matrix parameters.

The identifier fits theta in the one-step model

    y_k = Ad y_{k-1} + Phi(u_{k-1}) theta

by recursively minimizing an exponentially weighted quadratic cost with a
variable forgetting factor. The forgetting factor drops below one only when
the recent residuals grow relative to their longer-run history, which is
what lets the estimator re-converge quickly after an abrupt plant change
without drifting on stationary data.
"""

from dataclasses import dataclass

import numpy as np

from .linear_model import regressor_diagonal

__all__ = [
    "CovarianceError",
    "VrfConfig",
    "RlsState",
    "initial_state",
    "performance_variable",
    "vrf_lambda",
    "rls_update",
]


class CovarianceError(RuntimeError):
    """The covariance recursion lost positive definiteness."""


@dataclass(frozen=True)
class VrfConfig:
    """Variable-rate forgetting: gain, window lengths, dead zone, floor.

    ``eta`` scales how hard a short/long window residual mismatch pushes
    the forgetting factor below one. With ``eta = 0`` forgetting is off.
    ``threshold`` is the dead zone on the RMS-ratio statistic: ratios below
    it are treated as stationary, so the ordinary modulation of the
    residuals along a trajectory does not trigger forgetting, while an
    abrupt plant change (whose ratio saturates near sqrt(tau_d/tau_n))
    still does.
    """

    eta: float
    tau_n: int = 5
    tau_d: int = 25
    lambda_min: float = 0.01
    threshold: float = 1.4

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if not 0 < self.tau_n < self.tau_d:
            raise ValueError(
                f"window lengths must satisfy 0 < tau_n < tau_d, "
                f"got tau_n={self.tau_n}, tau_d={self.tau_d}"
            )
        if not 0 < self.lambda_min < 1:
            raise ValueError(f"lambda_min must be in (0, 1), got {self.lambda_min}")
        if not self.threshold >= 1.0:
            raise ValueError(f"threshold must be >= 1, got {self.threshold}")


@dataclass(frozen=True)
class RlsState:
    """Estimate, covariance, current forgetting factor, and residual buffer.

    ``residual_history`` keeps the Euclidean norms of the most recent
    residuals (at most ``tau_d`` of them), which is all the forgetting
    statistic consumes.
    """

    theta: np.ndarray
    P: np.ndarray
    lam: float = 1.0
    residual_history: tuple = ()


def initial_state(theta0, p0_scale: float = 1e6) -> RlsState:
    """Fresh identifier state with P = p0_scale * I."""
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (12,):
        raise ValueError(f"theta0 must have 12 entries, got shape {theta0.shape}")
    if not p0_scale > 0:
        raise ValueError(f"p0_scale must be positive, got {p0_scale}")
    return RlsState(theta=theta0.copy(), P=p0_scale * np.eye(12))


def performance_variable(y, y_prev, u_prev, Ad, theta) -> np.ndarray:
    """One-step prediction residual z = y - Ad y_prev - Phi(u_prev) theta."""
    y = np.asarray(y, dtype=float)
    y_prev = np.asarray(y_prev, dtype=float)
    Ad = np.asarray(Ad, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return y - Ad @ y_prev - regressor_diagonal(u_prev) * theta


def vrf_lambda(residual_history, config: VrfConfig) -> float:
    """Forgetting factor from the short/long residual window comparison.

    Compares the RMS residual norm over the last ``tau_n`` steps against the
    RMS over the last ``tau_d`` steps (the long window contains the short
    one). The statistic is a ratio, so scaling the whole history leaves it
    unchanged; only a *relative* increase of recent residuals beyond the
    configured dead zone triggers forgetting. Returns 1 until the buffer
    holds ``tau_d`` entries.
    """
    hist = np.asarray(residual_history, dtype=float)
    if config.eta == 0.0 or hist.size < config.tau_d:
        return 1.0
    sq = hist**2
    short = sq[-config.tau_n:].mean()
    long = sq[-config.tau_d:].mean()
    if long <= 0.0:
        return 1.0
    f = max(0.0, np.sqrt(short / long) - config.threshold)
    lam = 1.0 / (1.0 + config.eta * f)
    return float(min(1.0, max(config.lambda_min, lam)))


def rls_update(state: RlsState, y, y_prev, u_prev, Ad,
               config: VrfConfig) -> RlsState:
    """One identifier step; returns the new state.

    Implements the recursive minimizer of the forgetting-weighted quadratic
    cost with the 12x12 diagonal regressor Phi = Phi(u_prev):

        L     = P Phi^T (lam I + Phi P Phi^T)^-1
        theta <- theta + L z(theta)
        P     <- (P - L Phi P) / lam, then symmetrized

    where lam is the forgetting factor evaluated on the residual history
    including the current residual.

    Raises:
        CovarianceError: the updated covariance is no longer positive
            definite (unreachable under normal operation).
    """
    phi = regressor_diagonal(u_prev)
    z = performance_variable(y, y_prev, u_prev, Ad, state.theta)

    history = state.residual_history + (float(np.linalg.norm(z)),)
    if len(history) > config.tau_d:
        history = history[-config.tau_d:]
    lam = vrf_lambda(history, config)

    P = state.P
    # Phi is diagonal: P Phi^T scales columns, Phi P scales rows.
    PPhiT = P * phi[np.newaxis, :]
    M = lam * np.eye(12) + phi[:, np.newaxis] * PPhiT
    L = np.linalg.solve(M.T, PPhiT.T).T
    theta_new = state.theta + L @ z
    P_new = (P - L @ (phi[:, np.newaxis] * P)) / lam
    P_new = 0.5 * (P_new + P_new.T)

    try:
        np.linalg.cholesky(P_new)
    except np.linalg.LinAlgError:
        eigs = np.linalg.eigvalsh(P_new)
        raise CovarianceError(
            f"covariance lost positive definiteness: min eigenvalue "
            f"{eigs.min():.3e}, lambda={lam:.4f}"
        ) from None

    return RlsState(theta=theta_new, P=P_new, lam=lam, residual_history=history)
