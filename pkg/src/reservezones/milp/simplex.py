"""Bounded-variable revised primal simplex (dense, two-phase).

Every row gets a slack whose bounds encode the sense, so the working problem
is ``[A I] (x, s) = b`` with ``l <= (x, s) <= u``. Phase I adds artificials on
rows the starting slack basis cannot satisfy. Pricing is Dantzig's rule and
switches to Bland's rule after a run of degenerate pivots.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from .model import (EQ, GE, INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL, UNBOUNDED,
                    MilpModel, Solution, SolverFailure, SolverParams)

logger = logging.getLogger(__name__)

_REFACTOR_EVERY = 64
_DUAL_TOL = 1e-9
_PIVOT_TOL = 1e-9


def _equilibrate(A: np.ndarray):
    m, n = A.shape
    r = np.ones(m)
    c = np.ones(n)
    if A.size == 0:
        return r, c
    amax = np.abs(A).max(axis=1)
    r[amax > 0] = 1.0 / amax[amax > 0]
    As = A * r[:, None]
    cmax = np.abs(As).max(axis=0)
    c[cmax > 0] = 1.0 / cmax[cmax > 0]
    return r, c


class _Simplex:
    def __init__(self, A, b, cost, lb, ub, tol, degenerate_limit, max_iter):
        self.A = A
        self.b = b
        self.cost = cost
        self.lb = lb
        self.ub = ub
        self.tol = tol
        self.degenerate_limit = degenerate_limit
        self.max_iter = max_iter
        self.iterations = 0

    # basis bookkeeping ----------------------------------------------------
    def _refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure("singular basis matrix") from exc
        self.since_refactor = 0
        self._recompute_xb()

    def _recompute_xb(self):
        nb = self.nonbasic_mask
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs

    def run(self, c: np.ndarray) -> str:
        """Optimize ``c`` from the current basis; returns a status string."""
        m = self.A.shape[0]
        degenerate_run = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                return ITERATION_LIMIT
            y = c[self.basis] @ self.Binv
            d = c - y @ self.A
            d[self.basis] = 0.0
            x = self.x
            can_up = (x < self.ub - self.tol) & ~self.is_basic
            can_dn = (x > self.lb + self.tol) & ~self.is_basic
            score = np.where(can_up & (d < -_DUAL_TOL), -d, 0.0)
            score = np.maximum(score, np.where(can_dn & (d > _DUAL_TOL), d, 0.0))
            cand = np.flatnonzero(score > 0)
            if cand.size == 0:
                return OPTIMAL
            j = int(cand[0]) if bland else int(cand[np.argmax(score[cand])])
            direction = 1.0 if (d[j] < 0 and can_up[j]) else -1.0

            alpha = self.Binv @ self.A[:, j] * direction
            xb = x[self.basis]
            lb_b = self.lb[self.basis]
            ub_b = self.ub[self.basis]
            ratios = np.full(m, math.inf)
            pos = alpha > _PIVOT_TOL
            neg = alpha < -_PIVOT_TOL
            ratios[pos] = (xb[pos] - lb_b[pos]) / alpha[pos]
            ratios[neg] = (ub_b[neg] - xb[neg]) / (-alpha[neg])
            ratios = np.maximum(ratios, 0.0)
            flip = self.ub[j] - self.lb[j]
            t_row = ratios.min() if m else math.inf
            if not math.isfinite(t_row) and not math.isfinite(flip):
                return UNBOUNDED
            self.iterations += 1
            if flip <= t_row:
                x[j] += direction * flip
                x[self.basis] = xb - alpha * flip
                degenerate_run = 0
                continue
            t = t_row
            ties = np.flatnonzero(ratios <= t + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = self.basis[r]
            x[j] += direction * t
            x[self.basis] = xb - alpha * t
            x[leaving] = self.lb[leaving] if alpha[r] > 0 else self.ub[leaving]
            # eta update of the basis inverse
            piv = alpha[r] * direction
            col = self.Binv @ self.A[:, j]
            pivot_row = self.Binv[r] / col[r]
            self.Binv -= np.outer(col, pivot_row)
            self.Binv[r] = pivot_row
            self.basis[r] = j
            self.is_basic[j] = True
            self.is_basic[leaving] = False
            self.nonbasic_mask[j] = False
            self.nonbasic_mask[leaving] = True
            self.since_refactor += 1
            if self.since_refactor >= _REFACTOR_EVERY or abs(piv) < 1e-7:
                self._refactor()
            if t <= self.tol:
                degenerate_run += 1
                if degenerate_run >= self.degenerate_limit and not bland:
                    logger.debug("switching to Bland's rule after %d degenerate pivots", degenerate_run)
                    bland = True
            else:
                degenerate_run = 0


def solve_dense(c, A, senses, b, lb, ub, params: SolverParams | None = None) -> Solution:
    """Solve ``min c x`` subject to rows ``A x <sense> b`` and ``lb <= x <= ub``."""
    params = params or SolverParams()
    A = np.asarray(A, dtype=float).reshape(len(b), len(c))
    m, n = A.shape
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub + params.tol_feas):
        return Solution(INFEASIBLE, backend="native", senses=np.asarray(senses, dtype=object))

    rs, cs = _equilibrate(A)
    As = A * rs[:, None] * cs[None, :]
    bs = b * rs
    cost_s = c * cs
    lbs = np.where(np.isfinite(lb), lb / cs, lb)
    ubs = np.where(np.isfinite(ub), ub / cs, ub)

    s_lb = np.array([0.0 if s in (LE, EQ) else -math.inf for s in senses])
    s_ub = np.array([0.0 if s in (GE, EQ) else math.inf for s in senses])

    # nonbasic structural start: a finite bound nearest zero, else 0 (free)
    x0 = np.where(np.isfinite(lbs), lbs, np.where(np.isfinite(ubs), ubs, 0.0))
    x0 = np.where(np.isfinite(lbs) & np.isfinite(ubs) & (np.abs(ubs) < np.abs(lbs)), ubs, x0)
    resid = bs - As @ x0 if m else np.zeros(0)
    slack_val = np.clip(resid, s_lb, s_ub)
    need_art = np.abs(resid - slack_val) > params.tol_feas
    art_rows = np.flatnonzero(need_art)
    k = art_rows.size

    W = np.zeros((m, n + m + k))
    W[:, :n] = As
    W[:, n:n + m] = np.eye(m)
    for t, i in enumerate(art_rows):
        W[i, n + m + t] = 1.0 if resid[i] - slack_val[i] > 0 else -1.0
    big_lb = np.concatenate([lbs, s_lb, np.zeros(k)])
    big_ub = np.concatenate([ubs, s_ub, np.full(k, math.inf)])
    x = np.concatenate([x0, slack_val, np.abs(resid[art_rows] - slack_val[art_rows])])

    basis = np.empty(m, dtype=int)
    for i in range(m):
        basis[i] = n + i
    for t, i in enumerate(art_rows):
        basis[i] = n + m + t

    N = n + m + k
    sx = _Simplex(W, bs, None, big_lb, big_ub, params.tol_feas,
                  params.degenerate_pivot_limit, params.iteration_limit)
    sx.x = x
    sx.basis = basis
    sx.is_basic = np.zeros(N, dtype=bool)
    sx.is_basic[basis] = True
    sx.nonbasic_mask = ~sx.is_basic
    sx._refactor()

    if k:
        phase1 = np.zeros(N)
        phase1[n + m:] = 1.0
        status = sx.run(phase1)
        if status == ITERATION_LIMIT:
            return Solution(ITERATION_LIMIT, backend="native", iterations=sx.iterations,
                            senses=np.asarray(senses, dtype=object))
        infeas = float(sx.x[n + m:].sum())
        if infeas > params.tol_feas * max(1.0, np.abs(bs).max(initial=0.0)):
            return Solution(INFEASIBLE, backend="native", iterations=sx.iterations,
                            senses=np.asarray(senses, dtype=object))
        sx.ub[n + m:] = 0.0
        sx.x[n + m:] = 0.0
        sx._recompute_xb()

    phase2 = np.concatenate([cost_s, np.zeros(m + k)])
    status = sx.run(phase2)
    sx._refactor()
    if status != OPTIMAL:
        return Solution(status, backend="native", iterations=sx.iterations,
                        senses=np.asarray(senses, dtype=object))

    xs = sx.x[:n] * cs
    y = (phase2[sx.basis] @ sx.Binv) * rs  # d(obj)/d(b) in original units
    duals = np.array([y[i] if senses[i] == GE else -y[i] for i in range(m)])
    obj = float(c @ xs)
    viol = _row_violation(A, senses, b, xs)
    if viol > 1e3 * params.tol_feas * max(1.0, np.abs(b).max(initial=0.0)):
        raise SolverFailure(f"primal residual {viol:.3g} after refactorization")
    return Solution(OPTIMAL, x=xs, objective=obj, duals=duals,
                    senses=np.asarray(senses, dtype=object), backend="native",
                    iterations=sx.iterations, best_bound=obj)


def _row_violation(A, senses, b, x) -> float:
    if A.shape[0] == 0:
        return 0.0
    r = A @ x - b
    worst = 0.0
    for i, s in enumerate(senses):
        if s == LE:
            worst = max(worst, r[i])
        elif s == GE:
            worst = max(worst, -r[i])
        else:
            worst = max(worst, abs(r[i]))
    return worst


def solve_lp_native(model: MilpModel, params: SolverParams | None = None,
                    lb: np.ndarray | None = None, ub: np.ndarray | None = None) -> Solution:
    c, c0, A, senses, b, vlb, vub, _ = model.arrays()
    sol = solve_dense(c, A.toarray(), senses, b,
                      vlb if lb is None else lb, vub if ub is None else ub, params)
    if sol.ok:
        sol.objective += c0
        sol.best_bound = sol.objective
    return sol
