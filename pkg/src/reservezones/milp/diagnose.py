"""Infeasibility reporting through an elastic (phase-one style) relaxation."""
from __future__ import annotations

from .model import EQ, GE, LE, LinExpr, MilpModel, SolverParams


class InfeasibleError(RuntimeError):
    """A model has no feasible point; ``rows`` names a violated constraint set."""

    def __init__(self, message: str, rows=()):
        self.rows = list(rows)
        if self.rows:
            shown = ", ".join(self.rows[:12]) + (" ..." if len(self.rows) > 12 else "")
            message = f"{message} (unsatisfiable rows: {shown})"
        super().__init__(message)


def elastic_rows(model: MilpModel, params: SolverParams | None = None, tol: float = 1e-7) -> list[str]:
    """Names of the rows an L1-minimal relaxation has to violate.

    Integrality is dropped, so for MILPs this only explains LP-relaxation
    infeasibility; an empty list means the relaxation is feasible.
    """
    from . import solve_lp

    m = model.relaxed()
    m.minimize(LinExpr())
    penalty = LinExpr()
    elastic = []
    for i, con in enumerate(list(m.constraints)):
        if con.sense in (LE, EQ):
            e = m.add_var(f"__el_dn_{i}")
            con.coeffs[e.index] = -1.0
            penalty.add(e)
            elastic.append((i, e))
        if con.sense in (GE, EQ):
            e = m.add_var(f"__el_up_{i}")
            con.coeffs[e.index] = 1.0
            penalty.add(e)
            elastic.append((i, e))
    m.minimize(penalty)
    sol = solve_lp(m, params)
    if not sol.ok:
        return []
    bad = sorted({i for i, e in elastic if sol.value(e) > tol})
    return [model.constraints[i].name for i in bad]


class SolverLimitError(RuntimeError):
    """A solve stopped on a node, time or iteration limit before proving optimality."""
