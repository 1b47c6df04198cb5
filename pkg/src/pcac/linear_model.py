"""Hover-point linear model and its exact zero-order-hold discretization.

The continuous A matrix for the hover linearization is nilpotent (A^4 = 0),
so both e^{A Ts} and the input-matrix integral have exact terminating
polynomial forms. Using those polynomials rather than a generic matrix
exponential keeps the structural zeros of the discrete input matrix exactly
zero, which is what the 12-parameter sparse representation below relies on.

The discrete input matrix Bd has exactly 12 structurally nonzero entries.
Reading them row by row gives the parameter vector theta; the column index
of each entry tells which input component multiplies it, which is what the
diagonal regressor encodes.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import VehicleParams

__all__ = [
    "BD_SPARSITY",
    "REGRESSOR_INPUT_INDEX",
    "TemplateViolationError",
    "LinearHoverModel",
    "build_continuous",
    "discretize",
    "true_theta",
    "assemble_Bd",
    "regressor",
    "regressor_diagonal",
    "controllability_matrix",
]

# 1-based (row, column) positions of the nonzero entries of Bd, row-major.
BD_SPARSITY = (
    (1, 3),
    (2, 2),
    (3, 1),
    (4, 4),
    (5, 2),
    (6, 3),
    (7, 3),
    (8, 2),
    (9, 1),
    (10, 2),
    (11, 3),
    (12, 4),
)

_ROWS = np.array([r - 1 for r, _ in BD_SPARSITY])
_COLS = np.array([c - 1 for _, c in BD_SPARSITY])

# Input component feeding each of the 12 parameters (0-based into u).
REGRESSOR_INPUT_INDEX = tuple(int(c) for c in _COLS)


class TemplateViolationError(ValueError):
    """A matrix does not conform to the Bd sparsity template."""


@dataclass(frozen=True)
class LinearHoverModel:
    """Continuous and discretized hover-point model with its sample time."""

    A: np.ndarray
    B: np.ndarray
    Ad: np.ndarray
    Bd: np.ndarray
    Ts: float

    @classmethod
    def from_params(cls, params: VehicleParams, Ts: float) -> "LinearHoverModel":
        A, B = build_continuous(params)
        Ad, Bd = discretize(A, B, Ts)
        return cls(A=A, B=B, Ad=Ad, Bd=Bd, Ts=float(Ts))


def build_continuous(params: VehicleParams):
    """Continuous-time (A, B) of the model linearized about hover.

    A couples position to velocity, Euler angles to body rates, and tilt to
    horizontal acceleration through +/- g; everything else is zero. B holds
    1/m for thrust and 1/J for the torques.
    """
    g = params.g
    A = np.zeros((12, 12))
    A[0:3, 6:9] = np.eye(3)
    # xi_dot = [omega3, omega1, omega2] at zero attitude
    A[3, 11] = 1.0
    A[4, 9] = 1.0
    A[5, 10] = 1.0
    # horizontal acceleration from tilt: vx_dot = -g*theta, vy_dot = +g*phi
    A[6, 5] = -g
    A[7, 4] = g
    B = np.zeros((12, 4))
    B[8, 0] = 1.0 / params.m
    B[9, 1] = 1.0 / params.J[0]
    B[10, 2] = 1.0 / params.J[1]
    B[11, 3] = 1.0 / params.J[2]
    return A, B


def discretize(A, B, Ts: float):
    """Exact zero-order-hold discretization via the terminating series.

    Requires A nilpotent with A^4 = 0 (true for every hover linearization),
    so that

        Ad = I + A Ts + A^2 Ts^2/2 + A^3 Ts^3/6
        Bd = (I Ts + A Ts^2/2 + A^2 Ts^3/6 + A^3 Ts^4/24) B

    are exact, with structural zeros that are true zeros.
    """
    if not Ts > 0:
        raise ValueError(f"Ts must be positive, got {Ts}")
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    A2 = A @ A
    A3 = A2 @ A
    if np.any(A3 @ A != 0.0):
        raise ValueError("discretize requires a nilpotent A with A^4 = 0")
    eye = np.eye(n)
    Ad = eye + Ts * A + (Ts**2 / 2.0) * A2 + (Ts**3 / 6.0) * A3
    F = Ts * eye + (Ts**2 / 2.0) * A + (Ts**3 / 6.0) * A2 + (Ts**4 / 24.0) * A3
    return Ad, F @ B


def true_theta(Bd, tol: float = 1e-14) -> np.ndarray:
    """Extract the 12 template entries of Bd in row-major order.

    Raises:
        TemplateViolationError: any off-template entry exceeds ``tol``.
    """
    Bd = np.asarray(Bd, dtype=float)
    if Bd.shape != (12, 4):
        raise ValueError(f"Bd must be 12x4, got {Bd.shape}")
    mask = np.zeros((12, 4), dtype=bool)
    mask[_ROWS, _COLS] = True
    off = np.abs(Bd[~mask])
    if off.size and off.max() > tol:
        idx = np.argwhere(~mask)[np.argmax(off)]
        raise TemplateViolationError(
            f"off-template entry at (row {idx[0] + 1}, col {idx[1] + 1}) "
            f"has magnitude {off.max():.3e} > {tol:.0e}"
        )
    return Bd[_ROWS, _COLS].copy()


def assemble_Bd(theta) -> np.ndarray:
    """Place the 12 parameters at the template positions of a 12x4 matrix."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (12,):
        raise ValueError(f"theta must have 12 entries, got shape {theta.shape}")
    Bd = np.zeros((12, 4))
    Bd[_ROWS, _COLS] = theta
    return Bd


def regressor_diagonal(u) -> np.ndarray:
    """Diagonal of the regressor matrix: input components in template order."""
    u = np.asarray(u, dtype=float)
    return u[list(REGRESSOR_INPUT_INDEX)]


def regressor(u) -> np.ndarray:
    """12x12 diagonal regressor Phi(u) satisfying Phi(u) @ theta = Bd(theta) @ u."""
    return np.diag(regressor_diagonal(u))


def controllability_matrix(A, B) -> np.ndarray:
    """Horizontal stack [B, AB, ..., A^(n-1) B]."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)
