"""Hover linearization, exact discretization, and the sparse parameterization.

The hover-point A matrix is nilpotent (A^4 = 0), so the zero-order-hold
discretization is a short polynomial rather than a generic matrix
exponential. That keeps the structural zeros of Bd exact, which is what
lets the identifier work with just 12 parameters.

Run from the repository root:  python3 demos/02_discretization_sparsity.py
"""

import numpy as np

from pcac import (
    BD_SPARSITY,
    LinearHoverModel,
    VehicleParams,
    assemble_Bd,
    build_continuous,
    controllability_matrix,
    regressor,
    true_theta,
)
from pcac.oracles import zoh_quadrature

params = VehicleParams(m=4.34, J=np.array([0.082, 0.0845, 0.1377]))
A, B = build_continuous(params)
print(f"A: {np.count_nonzero(A)}/{A.size} nonzeros "
      f"({100 * (1 - np.count_nonzero(A) / A.size):.1f}% sparse)")
print(f"B: {np.count_nonzero(B)}/{B.size} nonzeros "
      f"({100 * (1 - np.count_nonzero(B) / B.size):.1f}% sparse)")
A2 = A @ A
print("nilpotency: ||A^3|| != 0:", np.abs(A2 @ A).max() != 0,
      " A^4 == 0:", np.all(A2 @ A2 == 0.0))
print("controllability rank:",
      np.linalg.matrix_rank(controllability_matrix(A, B)))

model = LinearHoverModel.from_params(params, Ts=0.1)
print("\ndiscrete input matrix template (1-based row, col):")
print(" ", BD_SPARSITY)
theta = true_theta(model.Bd)
print("true parameter vector:")
print(" ", theta.round(6))
print("round trip exact:", np.array_equal(assemble_Bd(theta), model.Bd))

# Independent cross-check: Simpson quadrature of the ZOH integral.
Ad_q, Bd_q = zoh_quadrature(A, B, 0.1, panels=5000)
print("\nquadrature cross-check: max |Ad - Ad_q| =",
      np.abs(model.Ad - Ad_q).max(),
      " max |Bd - Bd_q| =", np.abs(model.Bd - Bd_q).max())

# The diagonal regressor reproduces Bd @ u exactly for any u and theta.
rng = np.random.default_rng(0)
u = rng.standard_normal(4)
print("\nregressor diagonal for u =", u.round(3), ":")
print(" ", np.diag(regressor(u)).round(3))
print("identity max error:",
      np.abs(assemble_Bd(theta) @ u - regressor(u) @ theta).max())
