"""Exact big-M linearizations and the post-solve big-M audit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import BINARY, LinExpr, MilpModel, Solution, Var


@dataclass
class ProductHandle:
    """``aux == binary * integer`` for an integer operand in ``[m, M]``."""

    aux: Var
    binary: Var
    integer: Var
    m: float
    M: float


@dataclass
class ComplementarityHandle:
    """``g <= 0``, ``mu >= 0``, ``g * mu == 0`` through ``indicator``.

    ``indicator == 1`` pins ``g`` to zero; ``indicator == 0`` pins ``mu`` to zero.
    """

    indicator: Var
    g: LinExpr
    mu: Var
    g_max: float
    u_max: float
    name: str = ""


@dataclass
class AuditReport:
    checked: int = 0
    flagged: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.flagged


def linearize_bin_int_product(model: MilpModel, b: Var, y: Var, m: float, M: float,
                              name: str | None = None) -> ProductHandle:
    """Add ``u = b * y`` with ``y`` known to lie in ``[m, M]``."""
    if not (math.isfinite(m) and math.isfinite(M)):
        raise ValueError("bin x int product needs finite bounds on the integer operand")
    if m > M:
        raise ValueError(f"invalid operand bounds m={m} > M={M}")
    name = name or f"u_{b.name}_{y.name}"
    u = model.add_var(name, lb=min(0.0, m), ub=max(0.0, M))
    model.add_ge(u - y + M * (1 - LinExpr.of(b)), 0.0, f"{name}_lo1")
    model.add_le(u - y + m * (1 - LinExpr.of(b)), 0.0, f"{name}_up1")
    model.add_ge(u - m * b, 0.0, f"{name}_lo2")
    model.add_le(u - M * b, 0.0, f"{name}_up2")
    return ProductHandle(u, b, y, m, M)


def linearize_complementarity(model: MilpModel, g, mu: Var, g_max: float, u_max: float,
                              name: str | None = None,
                              add_primal: bool = True) -> ComplementarityHandle:
    """Add ``0 >= g  _|_  mu >= 0`` with ``-g <= g_max`` and ``mu <= u_max``.

    Pass ``add_primal=False`` when ``g <= 0`` is already a row (or a variable
    bound) of ``model``.
    """
    if g_max < 0 or u_max < 0:
        raise ValueError("complementarity bounds must be nonnegative")
    name = name or f"cc_{mu.name}"
    g = LinExpr.of(g)
    ind = model.add_var(f"{name}_b", kind=BINARY)
    if add_primal:
        model.add_le(g, 0.0, f"{name}_g")
    model.add_ge(g + g_max * (1 - LinExpr.of(ind)), 0.0, f"{name}_gm")
    model.add_le(mu - u_max * ind, 0.0, f"{name}_um")
    model.set_bounds(mu, lb=max(0.0, model.variables[mu.index].lb))
    return ComplementarityHandle(ind, g, mu, float(g_max), float(u_max), name)


def audit_bigm(model: MilpModel, solution: Solution, handles, tol: float = 1e-6) -> AuditReport:
    """Flag complementarity handles whose big-M bound is active at ``solution``.

    An active bound means the reformulation may have cut off the true
    lower-level optimum, so the solve cannot be trusted.
    """
    rep = AuditReport()
    for h in handles:
        if not isinstance(h, ComplementarityHandle):
            continue
        rep.checked += 1
        slack = -h.g.value(solution.x)
        mu = solution.value(h.mu)
        if slack >= h.g_max - tol * max(1.0, h.g_max):
            rep.flagged.append(f"{h.name}: primal slack {slack:.6g} at bound {h.g_max:.6g}")
        if mu >= h.u_max - tol * max(1.0, h.u_max):
            rep.flagged.append(f"{h.name}: dual {mu:.6g} at bound {h.u_max:.6g}")
    return rep
