"""Equality-constrained l1 minimization (basis pursuit).

Problem: minimize ``||v||_1`` subject to ``W v = -w``.

``solve_bp`` runs a Mehrotra predictor-corrector primal-dual interior point
method on the split LP ``min 1'(u + z)  s.t.  W (u - z) = -w,  u, z >= 0``
(the same formulation as l1-magic's ``l1eq``). ``lp_oracle`` solves the same
LP with a dense two-phase tableau simplex under Bland's rule and exists to
cross-check the interior point on small problems. ``solve_bp_penalized``
handles the lasso form ``||W v + w||^2 + lam ||v||_1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

FEAS_TOL = 1e-8
OPT_TOL = 1e-8
MAX_ITER = 200


class Status(enum.Enum):
    OPTIMAL = "optimal"
    ITERATION_CAP = "iteration_cap"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class BasisPursuitProblem:
    """Constraint ``W v = -w`` with ``W`` of shape (m, d)."""

    W: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        w = np.asarray(self.w, dtype=float).ravel()
        if W.shape[0] < 1 or W.shape[1] < 1:
            raise ValueError(f"W must have m >= 1 rows and d >= 1 columns, got {W.shape}")
        if w.shape[0] != W.shape[0]:
            raise ValueError(f"w has length {w.shape[0]}, expected {W.shape[0]}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(w))):
            raise ValueError("problem data must be finite")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def residual(self, v) -> float:
        return float(np.linalg.norm(self.W @ v + self.w))


@dataclass(frozen=True)
class SolverReport:
    solution: np.ndarray
    objective: float
    constraint_residual: float
    iterations: int
    status: Status
    gap: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


class SolverError(RuntimeError):
    """Raised by callers that need an optimal report; carries the report."""

    def __init__(self, message: str, report: SolverReport | None = None):
        super().__init__(message)
        self.report = report


def _as_problem(problem, w=None) -> BasisPursuitProblem:
    if isinstance(problem, BasisPursuitProblem):
        return problem
    return BasisPursuitProblem(problem, w)


def _report(prob, v, iterations, status, gap=float("nan")) -> SolverReport:
    v = np.asarray(v, dtype=float)
    return SolverReport(v, float(np.abs(v).sum()), prob.residual(v), iterations, status, gap)


def _row_space(W, b):
    """Orthonormal equivalent of ``W v = b``: returns (Q, beta, v_ln).

    ``Q`` has orthonormal rows spanning W's row space, ``Q v = beta`` has the
    same solution set as the original system when it is consistent, and
    ``v_ln`` is the least-norm least-squares solution.
    """
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    cutoff = max(W.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.sum(s > cutoff))
    Q = Vt[:r]
    beta = (U[:, :r].T @ b) / s[:r]
    return Q, beta, Q.T @ beta


def solve_bp(problem, w=None, feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL,
             max_iter: int = MAX_ITER) -> SolverReport:
    """Minimize ``||v||_1`` subject to ``W v = -w`` by a primal-dual interior point.

    Accepts a :class:`BasisPursuitProblem` or the pair ``(W, w)``. The report
    is ``OPTIMAL`` once the relative gap to a certified dual lower bound is
    within ``opt_tol`` and ``||W v + w|| <= feas_tol * (1 + ||w||)``.
    """
    if feas_tol <= 0 or opt_tol <= 0:
        raise ValueError("tolerances must be positive")
    prob = _as_problem(problem, w)
    b = -prob.w
    feas_bound = feas_tol * (1.0 + np.linalg.norm(prob.w))
    Q, beta, v_ln = _row_space(prob.W, b)
    if prob.residual(v_ln) > feas_bound:
        return _report(prob, v_ln, 0, Status.INFEASIBLE)
    r, d = Q.shape
    if r == 0:
        return _report(prob, np.zeros(d), 0, Status.OPTIMAL, 0.0)

    # standard form over x = [u; z]; A = [Q, -Q]
    def A_mul(x):
        return Q @ (x[:d] - x[d:])

    def At_mul(y):
        g = Q.T @ y
        return np.concatenate([g, -g])

    c = np.ones(2 * d)
    x = np.concatenate([np.maximum(v_ln, 0.0), np.maximum(-v_ln, 0.0)])
    y = np.zeros(r)
    s = c - At_mul(y)
    # Mehrotra-style shift into the interior
    x += max(-1.5 * x.min(), 0.0)
    s += max(-1.5 * s.min(), 0.0)
    if x @ s <= 0.0:
        x += 1.0
    shift = 0.5 * (x @ s)
    x += shift / s.sum()
    s += shift / x.sum()

    def newton(dx_rhs, rp, rd):
        # solve A dx = rp, A' dy + ds = rd, S dx + X ds = dx_rhs
        dmat = x / s
        du, dz = dmat[:d], dmat[d:]
        M = (Q * (du + dz)) @ Q.T
        t = (dx_rhs - x * rd) / s
        rhs = rp - A_mul(t)
        try:
            dy = sla.cho_solve(sla.cho_factor(M, check_finite=False), rhs, check_finite=False)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            dy = np.linalg.lstsq(M, rhs, rcond=None)[0]
        ds = rd - At_mul(dy)
        dx = t + dmat * At_mul(dy)
        return dx, dy, ds

    def max_step(v, dv):
        neg = dv < 0
        if not neg.any():
            return 1.0
        return min(1.0, float(np.min(-v[neg] / dv[neg])))

    n_var = 2 * d
    status = Status.ITERATION_CAP
    it = 0
    for it in range(1, max_iter + 1):
        rp = beta - A_mul(x)
        rd = c - At_mul(y) - s
        mu = (x @ s) / n_var
        primal = c @ x
        if (np.linalg.norm(rp) <= 0.1 * feas_bound
                and np.linalg.norm(rd) <= opt_tol * np.sqrt(n_var)
                and (x @ s) <= 0.1 * opt_tol * (1.0 + abs(primal))):
            status = Status.OPTIMAL
            break
        dx_a, dy_a, ds_a = newton(-x * s, rp, rd)
        ap = max_step(x, dx_a)
        ad = max_step(s, ds_a)
        mu_aff = ((x + ap * dx_a) @ (s + ad * ds_a)) / n_var
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        dx, dy, ds = newton(-x * s - dx_a * ds_a + sigma * mu, rp, rd)
        # step fraction stays below 1 so iterates remain strictly interior
        eta = min(max(0.9, 1.0 - mu), 0.99995)
        ap = eta * max_step(x, dx)
        ad = eta * max_step(s, ds)
        x_new, y_new, s_new = x + ap * dx, y + ad * dy, s + ad * ds
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(y_new))
                and np.all(x_new > 0) and np.all(s_new > 0)):
            break
        x, y, s = x_new, y_new, s_new

    v = x[:d] - x[d:]
    # project onto the affine constraint set; Q has orthonormal rows
    v = v - Q.T @ (Q @ v - beta)
    objective = float(np.abs(v).sum())
    # any y with ||Q'y||_inf <= 1 certifies the lower bound beta'y
    y_feas = y / max(1.0, float(np.abs(Q.T @ y).max()))
    bound = float(beta @ y_feas)
    gap = max(0.0, objective - bound) / (1.0 + objective)
    report = _report(prob, v, it, status, gap)
    if status is Status.OPTIMAL and (gap > opt_tol or report.constraint_residual > feas_bound):
        status = Status.ITERATION_CAP
        report = _report(prob, v, it, status, gap)
    return report


# --- penalized form ----------------------------------------------------------

def penalized_optimality(W, w, lam, v) -> float:
    """Largest violation of the subgradient optimality conditions."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    w = np.asarray(w, dtype=float).ravel()
    grad = 2.0 * W.T @ (W @ v + w)
    nz = v != 0
    viol = np.where(nz, np.abs(grad + lam * np.sign(v)), np.maximum(np.abs(grad) - lam, 0.0))
    return float(viol.max(initial=0.0))


def _lasso_homotopy(W, w, lam, max_steps):
    """Follow the piecewise-linear solution path from lam_max down to ``lam``.

    Along the path the correlations ``c = -2 W'(W v + w)`` satisfy
    ``c_j = lam * sign(v_j)`` on the active set and ``|c_j| <= lam`` elsewhere.
    Returns ``(v, steps)`` or ``None`` when the active Gram block is singular.
    """
    d = W.shape[1]
    G = W.T @ W
    v = np.zeros(d)
    c = -2.0 * W.T @ w
    level = float(np.abs(c).max(initial=0.0))
    if level <= lam:
        return v, 0
    active = [int(np.argmax(np.abs(c)))]
    signs = {active[0]: float(np.sign(c[active[0]]))}
    for step in range(1, max_steps + 1):
        idx = np.array(active)
        s_a = np.array([signs[j] for j in active])
        G_aa = G[np.ix_(idx, idx)]
        if np.linalg.matrix_rank(G_aa) < idx.size:
            return None
        u = np.zeros(d)
        u[idx] = np.linalg.solve(2.0 * G_aa, s_a)
        a = 2.0 * G @ u
        # candidate decrements of lam at which the active set changes
        delta, event = level - lam, None
        inactive = np.setdiff1d(np.arange(d), idx)
        for j in inactive:
            for num, den in ((level - c[j], 1.0 - a[j]), (level + c[j], 1.0 + a[j])):
                if den > 1e-12:
                    t = num / den
                    if 1e-14 < t < delta:
                        delta, event = t, ("add", int(j))
        for j in active:
            if u[j] != 0.0:
                t = -v[j] / u[j]
                if 1e-14 < t < delta:
                    delta, event = t, ("drop", int(j))
        v = v + delta * u
        level -= delta
        c = -2.0 * W.T @ (W @ v + w)
        if event is None:
            return v, step
        kind, j = event
        if kind == "add":
            active.append(j)
            signs[j] = float(np.sign(c[j]))
        else:
            v[j] = 0.0
            active.remove(j)
            del signs[j]
            if not active:
                return None
    return None


def _soft(x, t):
    return np.sign(x) * max(abs(x) - t, 0.0)


def _coordinate_descent(W, w, lam, v, opt_tol, max_sweeps):
    G = W.T @ W
    g = W.T @ w
    diag = np.diag(G).copy()
    Gv = G @ v
    for sweep in range(1, max_sweeps + 1):
        for j in range(v.size):
            if diag[j] == 0.0:
                continue
            old = v[j]
            new = _soft(-(g[j] + Gv[j] - diag[j] * old), lam / 2.0) / diag[j]
            if new != old:
                Gv += G[:, j] * (new - old)
                v[j] = new
        if penalized_optimality(W, w, lam, v) <= opt_tol:
            return v, sweep, True
    return v, max_sweeps, False


def solve_bp_penalized(W, w, lam: float, opt_tol: float = OPT_TOL,
                       max_sweeps: int = 20_000) -> SolverReport:
    """Minimize ``||W v + w||_2^2 + lam ||v||_1``.

    The exact homotopy path is tried first; if it hits a degenerate active
    set the result is finished by cyclic coordinate descent. ``objective``
    in the report is ``||v||_1``, matching :func:`solve_bp`.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    prob = BasisPursuitProblem(W, w)
    W, w = prob.W, prob.w
    path = _lasso_homotopy(W, w, lam, max_steps=20 * prob.d + 20)
    steps = 0
    v = np.zeros(prob.d)
    if path is not None:
        v, steps = path
        if penalized_optimality(W, w, lam, v) <= opt_tol:
            return _report(prob, v, steps, Status.OPTIMAL)
    v, sweeps, converged = _coordinate_descent(W, w, lam, v.copy(), opt_tol, max_sweeps)
    status = Status.OPTIMAL if converged else Status.ITERATION_CAP
    return _report(prob, v, steps + sweeps, status)


# --- simplex oracle -----------------------------------------------------------

_PIVOT_TOL = 1e-9


class _Unbounded(Exception):
    pass


def _pivot(T, row, col):
    T[row] /= T[row, col]
    others = np.arange(T.shape[0]) != row
    T[others] -= np.outer(T[others, col], T[row])


def _bland(T, basis, allowed, max_pivots):
    """Run Bland-rule simplex on tableau ``T`` whose last row is the cost row."""
    for pivots in range(max_pivots):
        cost = T[-1, :-1]
        entering = next((j for j in allowed if cost[j] < -_PIVOT_TOL), None)
        if entering is None:
            return pivots
        column = T[:-1, entering]
        candidates = np.flatnonzero(column > _PIVOT_TOL)
        if candidates.size == 0:
            raise _Unbounded
        ratios = T[candidates, -1] / column[candidates]
        best = ratios.min()
        ties = candidates[ratios <= best + _PIVOT_TOL * max(1.0, abs(best))]
        leaving = min(ties, key=lambda i: basis[i])
        _pivot(T, leaving, entering)
        basis[leaving] = entering
    raise RuntimeError("simplex pivot cap reached")


def lp_oracle(problem, w=None, max_pivots: int = 50_000) -> SolverReport:
    """Exact LP solution of the split formulation via two-phase simplex (Bland's rule).

    Intended for small problems (d <= 30).
    """
    prob = _as_problem(problem, w)
    W, b = prob.W, -prob.w
    m, d = W.shape
    A = np.hstack([W, -W])
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    n_var = 2 * d

    # phase I tableau: [A | I | b], cost row minimizes the artificial sum
    T = np.zeros((m + 1, n_var + m + 1))
    T[:m, :n_var] = A
    T[:m, n_var:n_var + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :] = -T[:m, :].sum(axis=0)
    T[-1, n_var:n_var + m] = 0.0
    basis = list(range(n_var, n_var + m))
    pivots = _bland(T, basis, range(n_var + m), max_pivots)
    if -T[-1, -1] > 1e-9 * (1.0 + np.abs(b).sum()):
        v_ln = np.linalg.lstsq(prob.W, -prob.w, rcond=None)[0]
        return _report(prob, v_ln, pivots, Status.INFEASIBLE)

    # drive artificials out of the basis; rows that cannot pivot are redundant
    keep_rows = []
    for i in range(m):
        if basis[i] >= n_var:
            nz = np.flatnonzero(np.abs(T[i, :n_var]) > _PIVOT_TOL)
            if nz.size == 0:
                continue
            _pivot(T, i, nz[0])
            basis[i] = nz[0]
        keep_rows.append(i)
    T2 = np.zeros((len(keep_rows) + 1, n_var + 1))
    T2[:-1, :n_var] = T[keep_rows, :n_var]
    T2[:-1, -1] = T[keep_rows, -1]
    basis = [basis[i] for i in keep_rows]
    cost = np.ones(n_var)
    T2[-1, :n_var] = cost
    for i, j in enumerate(basis):
        T2[-1] -= cost[j] * T2[i]
    pivots += _bland(T2, basis, range(n_var), max_pivots)

    x = np.zeros(n_var)
    for i, j in enumerate(basis):
        x[j] = T2[i, -1]
    return _report(prob, x[:d] - x[d:] + 0.0, pivots, Status.OPTIMAL, 0.0)
