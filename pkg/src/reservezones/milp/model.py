"""Solver-neutral LP/MILP container.

Models are built from :class:`Var` handles combined into :class:`LinExpr`
objects; constraints are stored as sparse rows ``sum(a_j x_j) <sense> rhs``.
The objective is always minimized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np
import scipy.sparse as sp

CONTINUOUS, BINARY, INTEGER = "continuous", "binary", "integer"
LE, GE, EQ = "<=", ">=", "="
INF = math.inf

Number = Union[int, float]


class ModelError(ValueError):
    """Malformed model (unknown variable, duplicate name, bad bounds)."""


class LinExpr:
    """Affine expression ``sum(coef * var) + const`` over one model's variables."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Mapping[int, float] | None = None, const: float = 0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def of(value: "LinExpr | Var | Number") -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Var):
            return LinExpr({value.index: 1.0})
        return LinExpr(const=float(value))

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def add(self, other, scale: float = 1.0) -> "LinExpr":
        """In-place ``self += scale * other``; returns self."""
        if isinstance(other, Var):
            self.terms[other.index] = self.terms.get(other.index, 0.0) + scale
        elif isinstance(other, LinExpr):
            for k, v in other.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + scale * v
            self.const += scale * other.const
        else:
            self.const += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy().add(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().add(other, -1.0)

    def __rsub__(self, other):
        return LinExpr.of(other).copy().add(self, -1.0)

    def __mul__(self, k: Number):
        if isinstance(k, (LinExpr, Var)):
            raise TypeError("product of two expressions is not linear")
        return LinExpr({i: v * k for i, v in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __truediv__(self, k: Number):
        return self * (1.0 / k)

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(v * x[i] for i, v in self.terms.items())

    def __repr__(self):
        parts = [f"{v:+g}*x{i}" for i, v in sorted(self.terms.items())]
        return f"LinExpr({' '.join(parts)} {self.const:+g})"


def quicksum(items: Iterable) -> LinExpr:
    out = LinExpr()
    for it in items:
        out.add(it)
    return out


@dataclass(frozen=True)
class Var:
    index: int
    name: str

    def _e(self) -> LinExpr:
        return LinExpr({self.index: 1.0})

    def __add__(self, other):
        return self._e().add(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self._e().add(other, -1.0)

    def __rsub__(self, other):
        return LinExpr.of(other).copy().add(self, -1.0)

    def __mul__(self, k: Number):
        return self._e() * k

    __rmul__ = __mul__

    def __neg__(self):
        return self._e() * -1.0


@dataclass
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass
class Constraint:
    name: str
    coeffs: dict[int, float]
    sense: str
    rhs: float


class MilpModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective = LinExpr()
        self._var_names: dict[str, int] = {}
        self._con_names: dict[str, int] = {}

    # -- building ---------------------------------------------------------
    def add_var(self, name: str | None = None, lb: float = 0.0, ub: float = INF,
                kind: str = CONTINUOUS) -> Var:
        if kind not in (CONTINUOUS, BINARY, INTEGER):
            raise ModelError(f"unknown variable kind {kind!r}")
        idx = len(self.variables)
        name = name or f"x{idx}"
        if name in self._var_names:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ModelError(f"variable {name}: lb {lb} > ub {ub}")
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self._var_names[name] = idx
        return Var(idx, name)

    def add_constr(self, expr, sense: str, rhs=0.0, name: str | None = None) -> int:
        """Add ``expr <sense> rhs``; constants on either side are folded into the rhs."""
        if sense not in (LE, GE, EQ):
            raise ModelError(f"unknown sense {sense!r}")
        lhs = LinExpr.of(expr) - LinExpr.of(rhs)
        coeffs = {k: v for k, v in lhs.terms.items() if v != 0.0}
        n = len(self.variables)
        for k in coeffs:
            if not 0 <= k < n:
                raise ModelError(f"coefficient references undeclared variable {k}")
        idx = len(self.constraints)
        name = name or f"c{idx}"
        if name in self._con_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        self.constraints.append(Constraint(name, coeffs, sense, -lhs.const))
        self._con_names[name] = idx
        return idx

    def add_le(self, lhs, rhs=0.0, name=None) -> int:
        return self.add_constr(lhs, LE, rhs, name)

    def add_ge(self, lhs, rhs=0.0, name=None) -> int:
        return self.add_constr(lhs, GE, rhs, name)

    def add_eq(self, lhs, rhs=0.0, name=None) -> int:
        return self.add_constr(lhs, EQ, rhs, name)

    def minimize(self, expr) -> None:
        self.objective = LinExpr.of(expr).copy()

    def set_bounds(self, var: Var | int, lb: float | None = None, ub: float | None = None) -> None:
        v = self.variables[var.index if isinstance(var, Var) else var]
        if lb is not None:
            v.lb = float(lb)
        if ub is not None:
            v.ub = float(ub)

    # -- queries ----------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constrs(self) -> int:
        return len(self.constraints)

    def var(self, name: str) -> Var:
        return Var(self._var_names[name], name)

    def constr_index(self, name: str) -> int:
        return self._con_names[name]

    @property
    def is_mip(self) -> bool:
        return any(v.kind != CONTINUOUS for v in self.variables)

    def statistics(self) -> dict[str, int]:
        kinds = [v.kind for v in self.variables]
        return {
            "variables": len(kinds),
            "binaries": kinds.count(BINARY),
            "integers": kinds.count(INTEGER),
            "constraints": len(self.constraints),
            "nonzeros": sum(len(c.coeffs) for c in self.constraints),
        }

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        m.variables = [Variable(v.name, v.kind, v.lb, v.ub) for v in self.variables]
        m.constraints = [Constraint(c.name, dict(c.coeffs), c.sense, c.rhs) for c in self.constraints]
        m.objective = self.objective.copy()
        m._var_names = dict(self._var_names)
        m._con_names = dict(self._con_names)
        return m

    def relaxed(self) -> "MilpModel":
        m = self.copy()
        for v in m.variables:
            v.kind = CONTINUOUS
        return m

    def arrays(self):
        """Dense-free export: (c, c0, A csr, senses, rhs, lb, ub, integrality)."""
        n = self.n_vars
        c = np.zeros(n)
        for k, v in self.objective.terms.items():
            c[k] += v
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            for k, v in con.coeffs.items():
                rows.append(i)
                cols.append(k)
                vals.append(v)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(self.n_constrs, n))
        senses = np.array([con.sense for con in self.constraints], dtype=object)
        rhs = np.array([con.rhs for con in self.constraints], dtype=float)
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        integ = np.array([v.kind != CONTINUOUS for v in self.variables], dtype=bool)
        return c, self.objective.const, A, senses, rhs, lb, ub, integ

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute violation of bounds, rows and integrality at ``x``."""
        worst = 0.0
        for k, v in enumerate(self.variables):
            worst = max(worst, v.lb - x[k], x[k] - v.ub)
            if v.kind != CONTINUOUS:
                worst = max(worst, abs(x[k] - round(x[k])))
        for con in self.constraints:
            lhs = sum(a * x[k] for k, a in con.coeffs.items())
            if con.sense == LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense == GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return max(worst, 0.0)


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
GAP_LIMIT = "gap_limit"
ITERATION_LIMIT = "iteration_limit"


class SolverFailure(RuntimeError):
    """Numerical breakdown the solver could not recover from."""


@dataclass
class Solution:
    """Solver result.

    ``duals`` follow the Lagrangian ``L = c x + sum_i dual_i * g_i(x)`` with
    ``g_i = a_i x - b_i`` for ``<=`` and ``=`` rows and ``g_i = b_i - a_i x`` for
    ``>=`` rows, so inequality duals are nonnegative at an optimum.
    """

    status: str
    x: np.ndarray | None = None
    objective: float = math.nan
    duals: np.ndarray | None = None
    senses: np.ndarray | None = None
    gap: float = 0.0
    best_bound: float = math.nan
    nodes: int = 0
    iterations: int = 0
    backend: str = ""
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None

    def value(self, item) -> float:
        if isinstance(item, Var):
            return float(self.x[item.index])
        if isinstance(item, LinExpr):
            return item.value(self.x)
        return float(item)

    def __getitem__(self, item) -> float:
        return self.value(item)

    def values(self, items) -> np.ndarray:
        return np.array([self.value(v) for v in items])

    def sensitivity(self, row: int) -> float:
        """d(objective)/d(rhs of ``row``)."""
        d = float(self.duals[row])
        return d if self.senses[row] == GE else -d


@dataclass
class SolverParams:
    """Flat solver configuration shared by every solve entry point."""

    backend: str = "highs"
    gap: float = 1e-6
    tol_feas: float = 1e-6
    tol_obj: float = 1e-7
    node_limit: int | None = None
    time_limit: float | None = None
    iteration_limit: int = 100_000
    big_m_dual: float | None = None
    degenerate_pivot_limit: int = 500

    @classmethod
    def from_mapping(cls, data: Mapping | None) -> "SolverParams":
        data = dict(data or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown solver parameter(s): {', '.join(sorted(unknown))}")
        return cls(**data)
