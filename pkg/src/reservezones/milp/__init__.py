"""Algebraic LP/MILP modelling, solver backends and exact linearizations."""
from __future__ import annotations

from .diagnose import InfeasibleError, SolverLimitError, elastic_rows
from .linearize import (AuditReport, ComplementarityHandle, ProductHandle, audit_bigm,
                        linearize_bin_int_product, linearize_complementarity)
from .model import (BINARY, CONTINUOUS, EQ, GAP_LIMIT, GE, INF, INFEASIBLE, INTEGER,
                    ITERATION_LIMIT, LE, OPTIMAL, UNBOUNDED, LinExpr, MilpModel, ModelError,
                    Solution, SolverFailure, SolverParams, Var, quicksum)
from .mps import export_mps, parse_mps

BACKENDS = ("highs", "native")


def _params(params: SolverParams | None, **overrides) -> SolverParams:
    params = params or SolverParams()
    if params.backend not in BACKENDS:
        raise ValueError(f"unknown solver backend {params.backend!r}; choose from {BACKENDS}")
    changes = {k: v for k, v in overrides.items() if v is not None}
    if changes:
        from dataclasses import replace
        params = replace(params, **changes)
    return params


def solve_lp(model: MilpModel, params: SolverParams | None = None) -> Solution:
    """Solve the continuous relaxation of ``model``.

    Duals follow the convention documented on :class:`Solution`.
    """
    params = _params(params)
    if model.is_mip:
        model = model.relaxed()
    if params.backend == "native":
        from .simplex import solve_lp_native
        return solve_lp_native(model, params)
    from .highs import solve_lp_highs
    return solve_lp_highs(model, params)


def solve_milp(model: MilpModel, params: SolverParams | None = None, gap: float | None = None,
               node_limit: int | None = None, time_limit: float | None = None) -> Solution:
    """Solve ``model`` to relative ``gap``; pure LPs go straight to :func:`solve_lp`."""
    params = _params(params, gap=gap, node_limit=node_limit, time_limit=time_limit)
    if not model.is_mip:
        return solve_lp(model, params)
    if params.backend == "native":
        from .bnb import solve_milp_native
        return solve_milp_native(model, params)
    from .highs import solve_milp_highs
    return solve_milp_highs(model, params)


__all__ = [
    "AuditReport", "BACKENDS", "BINARY", "CONTINUOUS", "ComplementarityHandle", "EQ", "InfeasibleError",
    "GAP_LIMIT", "GE", "INF", "INFEASIBLE", "INTEGER", "ITERATION_LIMIT", "LE", "LinExpr",
    "MilpModel", "ModelError", "OPTIMAL", "ProductHandle", "Solution", "SolverFailure",
    "SolverLimitError", "SolverParams", "UNBOUNDED", "Var", "audit_bigm", "elastic_rows", "export_mps", "linearize_bin_int_product",
    "linearize_complementarity", "parse_mps", "quicksum", "solve_lp", "solve_milp",
]
