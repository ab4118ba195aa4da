"""HiGHS backend through scipy.optimize, behind the same Solution contract."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .model import (EQ, GE, INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL, UNBOUNDED,
                    MilpModel, Solution, SolverFailure, SolverParams)

_LP_STATUS = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}


def solve_lp_highs(model: MilpModel, params: SolverParams | None = None) -> Solution:
    params = params or SolverParams()
    c, c0, A, senses, b, lb, ub, _ = model.arrays()
    le = np.flatnonzero(senses == LE)
    ge = np.flatnonzero(senses == GE)
    eq = np.flatnonzero(senses == EQ)
    ub_rows = np.concatenate([le, ge])
    sign = np.concatenate([np.ones(le.size), -np.ones(ge.size)])
    A_ub = sp.diags(sign) @ A[ub_rows] if ub_rows.size else None
    b_ub = sign * b[ub_rows] if ub_rows.size else None
    A_eq = A[eq] if eq.size else None
    b_eq = b[eq] if eq.size else None
    bounds = np.column_stack([lb, ub])
    bounds = [(None if not math.isfinite(lo) else lo, None if not math.isfinite(hi) else hi)
              for lo, hi in bounds]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds or None,
                  method="highs-ds",
                  options={"primal_feasibility_tolerance": min(params.tol_feas, 1e-7),
                           "dual_feasibility_tolerance": min(params.tol_feas, 1e-7),
                           "maxiter": params.iteration_limit})
    status = _LP_STATUS.get(res.status)
    if status is None:
        raise SolverFailure(f"HiGHS LP failure: {res.message}")
    if status != OPTIMAL:
        return Solution(status, backend="highs", senses=senses)
    # marginals are d(obj)/d(rhs) of the rows as passed to linprog
    sens = np.zeros(model.n_constrs)
    if ub_rows.size:
        sens[ub_rows] = sign * res.ineqlin.marginals
    if eq.size:
        sens[eq] = res.eqlin.marginals
    duals = np.where(senses == GE, sens, -sens)
    obj = float(res.fun) + c0
    return Solution(OPTIMAL, x=np.asarray(res.x), objective=obj, duals=duals, senses=senses,
                    best_bound=obj, iterations=int(res.nit), backend="highs")


def solve_milp_highs(model: MilpModel, params: SolverParams | None = None) -> Solution:
    params = params or SolverParams()
    c, c0, A, senses, b, lb, ub, integ = model.arrays()
    lo = np.where(senses == LE, -np.inf, b)
    hi = np.where(senses == GE, np.inf, b)
    options = {"mip_rel_gap": params.gap}
    if params.time_limit is not None:
        options["time_limit"] = params.time_limit
    if params.node_limit is not None:
        options["node_limit"] = params.node_limit
    cons = [LinearConstraint(A, lo, hi)] if model.n_constrs else []
    res = milp(c, integrality=integ.astype(int), bounds=Bounds(lb, ub), constraints=cons,
               options=options)
    has_x = res.x is not None
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
    bound = getattr(res, "mip_dual_bound", None)
    if res.status == 0:
        status = OPTIMAL
    elif res.status == 1:
        status = ITERATION_LIMIT
    elif res.status == 2:
        status = INFEASIBLE
    elif res.status == 3:
        status = UNBOUNDED
    else:
        if not has_x:
            raise SolverFailure(f"HiGHS MILP failure: {res.message}")
        status = ITERATION_LIMIT
    if not has_x:
        return Solution(status, backend="highs", senses=senses, nodes=nodes,
                        info={"no_incumbent": status == ITERATION_LIMIT})
    x = np.asarray(res.x, dtype=float)
    x[integ] = np.round(x[integ])
    obj = float(res.fun) + c0
    return Solution(status, x=x, objective=obj, senses=senses, gap=gap,
                    best_bound=(float(bound) + c0) if bound is not None else obj,
                    nodes=nodes, backend="highs")
