"""Dense convex quadratic programming with a primal active-set method.

Solves

    min_w  0.5 w^T H w + c^T w    subject to    G w <= h

for symmetric positive-(semi)definite H. The method iterates on a working
set of constraints treated as equalities, taking full steps to the working
subspace minimizer and clipping at the nearest blocking constraint. It
terminates in finitely many steps on nondegenerate problems, produces exact
active sets, and warm starts naturally from a feasible point, which is why
it is preferred here over interior-point alternatives for the small dense
problems produced by the receding-horizon controller.

The problem is equilibrated internally (variables scaled by sqrt(diag H),
constraint rows normalized) so that widely spread weights, such as a 1e6
slack penalty next to a 0.1 control penalty, do not destroy the working-set
linear algebra. Results are reported in the original units.

Pivoting is deterministic: ties in the blocking-constraint ratio test and
in the multiplier test are broken by lowest constraint index.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "SOLVED",
    "MAX_ITERATIONS",
    "INFEASIBLE",
    "QpProblem",
    "QpSolution",
    "solve",
]

SOLVED = "solved"
MAX_ITERATIONS = "max-iterations"
INFEASIBLE = "infeasible-detected"

_SYM_TOL = 1e-10


@dataclass
class QpProblem:
    """Dense QP data. ``w0`` is an optional (feasible) warm-start point."""

    H: np.ndarray
    c: np.ndarray
    G: np.ndarray = None
    h: np.ndarray = None
    w0: np.ndarray = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        if self.H.shape != (n, n):
            raise ValueError(f"H must be {n}x{n}, got {self.H.shape}")
        if np.abs(self.H - self.H.T).max() > _SYM_TOL * max(1.0, np.abs(self.H).max()):
            raise ValueError("H must be symmetric within 1e-10")
        if self.G is None:
            self.G = np.zeros((0, n))
            self.h = np.zeros(0)
        else:
            self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
            self.h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if self.G.shape != (self.h.shape[0], n):
            raise ValueError(
                f"constraint shapes inconsistent: G {self.G.shape}, h {self.h.shape}"
            )
        if self.w0 is not None:
            self.w0 = np.asarray(self.w0, dtype=float)
            if self.w0.shape != (n,):
                raise ValueError(f"w0 must have {n} entries")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.h.shape[0]

    def objective(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(0.5 * w @ self.H @ w + self.c @ w)


@dataclass
class QpSolution:
    """Primal point, multipliers, status, and KKT diagnostics."""

    w: np.ndarray
    duals: np.ndarray
    status: str
    kkt_residual: float
    iterations: int
    objective: float
    objective_history: list = field(default_factory=list, repr=False)


def _kkt_residual(problem: QpProblem, w, duals) -> float:
    stat = np.abs(problem.H @ w + problem.c + problem.G.T @ duals).max()
    if problem.m == 0:
        return float(stat)
    slack = problem.G @ w - problem.h
    viol = max(0.0, slack.max())
    comp = np.abs(duals * slack).max()
    neg = max(0.0, -duals.min()) if duals.size else 0.0
    return float(max(stat, viol, comp, neg))


def _solve_or_lstsq(K, rhs):
    try:
        sol = np.linalg.solve(K, rhs)
        if np.abs(K @ sol - rhs).max() <= 1e-7 * (1.0 + np.abs(rhs).max()):
            return sol
    except np.linalg.LinAlgError:
        pass
    return np.linalg.lstsq(K, rhs, rcond=None)[0]


def _eqp_step(H, G, working, grad):
    """Step to the minimizer on {p : G[working] p = 0} and its multipliers.

    Null-space method: a complete QR of A^T provides an orthonormal basis Z
    of the step subspace, and the reduced system Z^T H Z is far better
    conditioned than the saddle-point KKT block, which matters when the
    working set is large.
    """
    n = H.shape[0]
    k = len(working)
    if k == 0:
        return _solve_or_lstsq(H, -grad), np.zeros(0)
    A = G[working]
    Q, R = np.linalg.qr(A.T, mode="complete")
    Z = Q[:, k:]
    if Z.shape[1]:
        Hz = Z.T @ H @ Z
        pz = _solve_or_lstsq(Hz, -(Z.T @ grad))
        p = Z @ pz
    else:
        p = np.zeros(n)
    # Multipliers from A^T mu = -(grad + H p) using the same factorization.
    mu = _solve_or_lstsq(R[:k, :], Q[:, :k].T @ (-(grad + H @ p)))
    return p, mu


def _independent_active_rows(G, w, h, n, act_tol=1e-9):
    """Indices of constraints active at w, filtered to independent rows.

    Greedy modified Gram-Schmidt in ascending index order keeps the working
    set deterministic and its rows linearly independent.
    """
    active = np.flatnonzero(np.abs(G @ w - h) <= act_tol * (1.0 + np.abs(h)))
    working = []
    basis = np.zeros((0, n))
    for i in active:
        if len(working) == n:
            break
        r = G[i].astype(float)
        scale = np.linalg.norm(r)
        if scale == 0.0:
            continue
        r = r - basis.T @ (basis @ r)
        r = r - basis.T @ (basis @ r)
        if np.linalg.norm(r) > 1e-8 * scale:
            basis = np.vstack([basis, r / np.linalg.norm(r)])
            working.append(int(i))
    return working


def _phase_one(G, h, n, feas_tol):
    """LP phase: minimize the worst violation; None if infeasible."""
    m = h.shape[0]
    c_lp = np.zeros(n + 1)
    c_lp[-1] = 1.0
    A_ub = np.hstack([G, -np.ones((m, 1))])
    bounds = [(None, None)] * n + [(0.0, None)]
    res = linprog(c_lp, A_ub=A_ub, b_ub=h, bounds=bounds, method="highs")
    if not res.success or res.x[-1] > 1e2 * feas_tol:
        return None
    return res.x[:n]


def _equilibrate(problem: QpProblem):
    """Column scaling from diag(H) and unit-norm constraint rows.

    Returns (H', c', G', h', d, r) such that w = w'/d and duals = r * mu'
    recover the original-problem quantities.
    """
    diag = np.diag(problem.H).copy()
    floor = 1e-12 * max(1.0, diag.max() if diag.size else 1.0)
    d = np.sqrt(np.maximum(diag, floor))
    d[diag <= 0.0] = 1.0
    H = problem.H / d[:, None] / d[None, :]
    c = problem.c / d
    if problem.m:
        G = problem.G / d[None, :]
        norms = np.abs(G).max(axis=1)
        r = 1.0 / np.maximum(norms, 1e-12)
        G = G * r[:, None]
        h = problem.h * r
    else:
        G = problem.G
        h = problem.h
        r = np.zeros(0)
    return H, c, G, h, d, r


def solve(problem: QpProblem, max_iter: int = 500, feas_tol: float = 1e-9,
          dual_tol: float = 1e-9, track_objective: bool = False) -> QpSolution:
    """Solve the QP. Deterministic: identical inputs give identical outputs.

    Returns status ``solved`` with a KKT-satisfying primal/dual point,
    ``max-iterations`` with the best iterate found, or
    ``infeasible-detected`` when no feasible point exists (never the case
    for the controller's slack-relaxed problems).
    """
    n, m = problem.n, problem.m
    H, c, G, h, d, r = _equilibrate(problem)

    def finish(w_s, duals_s, status, iterations, history):
        w = w_s / d
        duals = duals_s * r if m else np.zeros(0)
        if status == SOLVED and duals.size:
            # Multipliers are nonnegative up to solver noise at this point;
            # clipping perturbs stationarity by at most that noise.
            duals = np.maximum(duals, 0.0)
        return QpSolution(
            w=w, duals=duals, status=status,
            kkt_residual=_kkt_residual(problem, w, duals),
            iterations=iterations, objective=problem.objective(w),
            objective_history=history,
        )

    if m == 0:
        w_s = _solve_or_lstsq(H, -c)
        history = [problem.objective(w_s / d)] if track_objective else []
        return finish(w_s, np.zeros(0), SOLVED, 0, history)

    w = None
    if problem.w0 is not None:
        w0_s = problem.w0 * d
        if np.all(G @ w0_s - h <= feas_tol * (1.0 + np.abs(h))):
            w = w0_s
    if w is None:
        zero = np.zeros(n)
        if np.all(-h <= feas_tol * (1.0 + np.abs(h))):
            w = zero
        else:
            w = _phase_one(G, h, n, feas_tol)
            if w is None:
                nan = np.full(n, np.nan)
                return QpSolution(
                    w=nan, duals=np.zeros(m), status=INFEASIBLE,
                    kkt_residual=np.inf, iterations=0, objective=np.nan,
                )

    working = _independent_active_rows(G, w, h, n)
    in_working = np.zeros(m, dtype=bool)
    in_working[working] = True

    def objective_s(w_s):
        return float(0.5 * w_s @ H @ w_s + c @ w_s)

    history = [problem.objective(w / d)] if track_objective else []
    iterations = 0

    for iterations in range(1, max_iter + 1):
        grad = H @ w + c
        p, mu = _eqp_step(H, G, working, grad)
        # Predicted decrease of the exact quadratic along the full step;
        # nonpositive (up to roundoff) means w already minimizes on the
        # working subspace and only multiplier sign information is left.
        pred_dec = -(grad @ p + 0.5 * p @ (H @ p))

        if pred_dec <= 1e-13 * (1.0 + abs(objective_s(w))):
            if mu.size == 0 or mu.min() >= -dual_tol:
                duals_s = np.zeros(m)
                if working:
                    duals_s[working] = mu
                if track_objective:
                    history.append(problem.objective(w / d))
                return finish(w, duals_s, SOLVED, iterations, history)
            # Release the constraint with the most negative multiplier
            # (argmin keeps the lowest index on ties).
            drop = int(np.argmin(mu))
            in_working[working[drop]] = False
            working.pop(drop)
            continue

        # Ratio test toward the subspace minimizer at w + p.
        Gp = G @ p
        slack = h - G @ w
        candidates = ~in_working & (Gp > 1e-12)
        alpha = 1.0
        blocker = -1
        if candidates.any():
            ratios = np.full(m, np.inf)
            ratios[candidates] = np.maximum(slack[candidates], 0.0) / Gp[candidates]
            i_best = int(np.argmin(ratios))
            if ratios[i_best] < 1.0:
                alpha = ratios[i_best]
                blocker = i_best
        w = w + alpha * p
        if blocker >= 0:
            working.append(blocker)
            working.sort()
            in_working[blocker] = True
        if track_objective:
            history.append(problem.objective(w / d))

    duals_s = np.zeros(m)
    return finish(w, duals_s, MAX_ITERATIONS, max_iter, history)
