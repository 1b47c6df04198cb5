"""Continuous-time quadrotor rigid-body model and the simulation integrator.

State vector layout (12 entries):

    x[0:3]   p      position in the inertial frame [m]
    x[3:6]   xi     Euler angles [psi, phi, theta] [rad], Z-X-Y sequence
    x[6:9]   v      inertial velocity [m/s]
    x[9:12]  omega  angular velocity in the body frame [rad/s]

Input vector layout (4 entries): [f, tau1, tau2, tau3], total thrust [N]
and body torques [N m].

All functions are pure; nothing here keeps state between calls.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "POS",
    "ANG",
    "VEL",
    "RATE",
    "EULER_SINGULARITY_TOL",
    "SingularOrientationError",
    "IntegrationError",
    "VehicleParams",
    "rotation_matrix",
    "euler_rate_jacobian",
    "euler_kinematics",
    "state_derivative",
    "integrate_step",
    "hover_input",
]

POS = slice(0, 3)
ANG = slice(3, 6)
VEL = slice(6, 9)
RATE = slice(9, 12)

# Guard on |cos(psi)^2 cos(phi) + sin(psi)^2|, the determinant of the
# Euler-rate map. Below this the attitude parameterization has degenerated
# and the simulation must abort rather than invert a near-singular map.
EULER_SINGULARITY_TOL = 1e-6

_E3 = np.array([0.0, 0.0, 1.0])


class SingularOrientationError(RuntimeError):
    """The Euler-rate map is numerically singular at this attitude."""


class IntegrationError(RuntimeError):
    """Adaptive-step integration failed (step-size underflow or similar)."""


@dataclass(frozen=True)
class VehicleParams:
    """Rigid-body constants: mass, principal inertia moments, gravity.

    The body frame is assumed aligned with the principal axes, so the
    inertia is represented by its three diagonal entries.
    """

    m: float
    J: np.ndarray
    g: float = 9.81

    def __post_init__(self):
        J = np.atleast_1d(np.asarray(self.J, dtype=float))
        object.__setattr__(self, "J", J)
        if not self.m > 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if J.shape != (3,) or not np.all(J > 0):
            raise ValueError("J must be 3 positive principal moments")
        if not self.g > 0:
            raise ValueError(f"gravity must be positive, got {self.g}")

    @property
    def inertia_matrix(self) -> np.ndarray:
        return np.diag(self.J)


def rotation_matrix(xi) -> np.ndarray:
    """Body-to-inertial rotation matrix for Euler angles [psi, phi, theta].

    Rotation sequence: yaw psi about z, then roll phi about x, then pitch
    theta about y, composed as Ry @ Rx @ Rz.
    """
    psi, phi, theta = np.asarray(xi, dtype=float)
    cps, sps = np.cos(psi), np.sin(psi)
    cph, sph = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    return np.array(
        [
            [cps * cth + sph * sps * sth, cps * sph * sth - cth * sps, cph * sth],
            [cph * sps, cph * cps, -sph],
            [cth * sph * sps - cps * sth, sps * sth + cps * cth * sph, cph * cth],
        ]
    )


def euler_rate_jacobian(xi) -> np.ndarray:
    """Matrix Jw(xi) mapping Euler-angle rates to body rates, omega = Jw @ xi_dot."""
    psi, phi, _ = np.asarray(xi, dtype=float)
    cps, sps = np.cos(psi), np.sin(psi)
    cph, sph = np.cos(phi), np.sin(phi)
    return np.array(
        [
            [0.0, cps, -sps],
            [0.0, sps, cph * cps],
            [1.0, 0.0, sph * cps],
        ]
    )


def euler_kinematics(xi, omega) -> np.ndarray:
    """Euler-angle rates xi_dot for a given body angular velocity.

    Uses the closed-form inverse of the Euler-rate map; its determinant is
    cos(psi)^2 cos(phi) + sin(psi)^2, and the call fails once that drops to
    the singularity guard.

    Raises:
        SingularOrientationError: attitude too close to the parameterization
            singularity for a trustworthy inverse.
    """
    psi, phi, _ = np.asarray(xi, dtype=float)
    cps, sps = np.cos(psi), np.sin(psi)
    cph, sph = np.cos(phi), np.sin(phi)
    den = cps * cps * cph + sps * sps
    if abs(den) <= EULER_SINGULARITY_TOL:
        raise SingularOrientationError(
            f"Euler-rate map determinant {den:.3e} within guard "
            f"{EULER_SINGULARITY_TOL:.0e} at xi={np.asarray(xi)}"
        )
    inv = (
        np.array(
            [
                [sph * cps * sps, -sph * cps * cps, den],
                [cph * cps, sps, 0.0],
                [-sps, cps, 0.0],
            ]
        )
        / den
    )
    return inv @ np.asarray(omega, dtype=float)


def state_derivative(x, u, params: VehicleParams) -> np.ndarray:
    """Right-hand side of the quadrotor equations of motion.

    Translational dynamics: m * a = -m g e3 + f R^T e3.
    Rotational dynamics: J * omega_dot = -omega x (J omega) + tau.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    xi = x[ANG]
    omega = x[RATE]
    f, tau = u[0], u[1:4]

    xd = np.empty(12)
    xd[POS] = x[VEL]
    xd[ANG] = euler_kinematics(xi, omega)
    xd[VEL] = -params.g * _E3 + (f / params.m) * (rotation_matrix(xi).T @ _E3)
    xd[RATE] = (-np.cross(omega, params.J * omega) + tau) / params.J
    return xd


def integrate_step(x, u, params: VehicleParams, dt: float,
                   rtol: float = 1e-8, atol: float = 1e-10) -> np.ndarray:
    """Propagate the state over one period with the input held constant.

    Adaptive Dormand-Prince 4(5) pair with the given tolerances. Failures
    of the step controller raise IntegrationError instead of being clamped.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u = np.asarray(u, dtype=float)
    sol = solve_ivp(
        lambda _t, s: state_derivative(s, u, params),
        (0.0, float(dt)),
        np.asarray(x, dtype=float),
        method="RK45",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise IntegrationError(f"integration failed over dt={dt}: {sol.message}")
    return sol.y[:, -1]


def hover_input(params: VehicleParams) -> np.ndarray:
    """Equilibrium input [m g, 0, 0, 0] holding the vehicle at any position."""
    return np.array([params.m * params.g, 0.0, 0.0, 0.0])
