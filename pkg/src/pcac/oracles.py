"""Independent reference computations for cross-checking the fast paths.

Each function here deliberately takes a different computational route than
the implementation it validates: quadrature instead of the terminating
series for the discretization, one-shot normal equations instead of the
recursive estimator, and exhaustive active-set enumeration instead of the
iterative QP method. They back both the test suite and the ``verify``
command.
"""

from itertools import combinations

import numpy as np
from scipy.linalg import expm

__all__ = [
    "zoh_quadrature",
    "rls_batch_estimates",
    "qp_enumeration",
]


def zoh_quadrature(A, B, Ts: float, panels: int = 10000):
    """Zero-order-hold (Ad, Bd) via matrix exponential and Simpson quadrature.

    Ad is evaluated directly as expm(A Ts). The input-matrix integral
    int_0^Ts expm(A tau) dtau B is integrated with composite Simpson over
    ``panels`` panels, stepping the integrand between nodes with a single
    precomputed one-node propagator. No structural knowledge of A is used.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    nodes = 2 * panels
    step = Ts / nodes
    E = expm(A * step)
    acc = np.zeros((n, n))
    cur = np.eye(n)
    for k in range(nodes + 1):
        if k == 0 or k == nodes:
            weight = 1.0
        elif k % 2 == 1:
            weight = 4.0
        else:
            weight = 2.0
        acc += weight * cur
        if k < nodes:
            cur = cur @ E
    F = (step / 3.0) * acc
    return expm(A * Ts), F @ B


def rls_batch_estimates(phis, targets, theta0, P0, lams) -> np.ndarray:
    """Normal-equation minimizers of the cumulative identification cost.

    ``phis[k]`` is the diagonal of the regressor at step k, ``targets[k]``
    the corresponding data vector (measurement minus the known-dynamics
    part), and ``lams[k]`` the forgetting factor applied at step k. Row k
    of the result is the exact minimizer after processing steps 0..k: the
    residual at step i is weighted by prod(lams[i+1..k]) and the prior term
    by prod(lams[0..k]).
    """
    phis = np.asarray(phis, dtype=float)
    targets = np.asarray(targets, dtype=float)
    lams = np.asarray(lams, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    P0 = np.asarray(P0, dtype=float)
    n_steps, n_par = phis.shape
    P0_inv = np.linalg.inv(P0)

    out = np.empty((n_steps, n_par))
    for k in range(n_steps):
        # weight on step i: prod of lams over (i, k]
        w = np.ones(k + 1)
        for i in range(k - 1, -1, -1):
            w[i] = w[i + 1] * lams[i + 1]
        reg = w[0] * lams[0]
        M = reg * P0_inv + np.diag((w[:, None] * phis[: k + 1] ** 2).sum(axis=0))
        rhs = reg * (P0_inv @ theta0) + (w[:, None] * phis[: k + 1] * targets[: k + 1]).sum(axis=0)
        out[k] = np.linalg.solve(M, rhs)
    return out


def qp_enumeration(H, c, G, h, feas_tol: float = 1e-9):
    """Global QP minimum by brute force over candidate active sets.

    For every subset of constraint rows up to size n, solves the equality-
    constrained problem and keeps the best feasible solution whose
    multipliers are nonnegative. Exponential in the number of constraints;
    intended only for small verification instances.

    Returns (w, objective) or (None, inf) when no candidate verifies.
    """
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    n = c.shape[0]
    m = h.shape[0]

    best_w = None
    best_obj = np.inf
    for size in range(min(n, m) + 1):
        for subset in combinations(range(m), size):
            idx = list(subset)
            A = G[idx]
            K = np.zeros((n + size, n + size))
            K[:n, :n] = H
            K[:n, n:] = A.T
            K[n:, :n] = A
            rhs = np.concatenate([-c, h[idx]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.abs(K @ sol - rhs).max() > 1e-8 * (1.0 + np.abs(rhs).max()):
                continue
            w = sol[:n]
            mu = sol[n:]
            if mu.size and mu.min() < -1e-8:
                continue
            if m and (G @ w - h).max() > feas_tol * (1.0 + np.abs(h).max()):
                continue
            obj = float(0.5 * w @ H @ w + c @ w)
            if obj < best_obj - 1e-12:
                best_obj = obj
                best_w = w
    return best_w, best_obj
