"""Benchmark market models: sequential reserve, day-ahead and balancing
clearing, and the two-stage stochastic co-optimization.

The ``add_*_block`` builders are shared with the zonal and decomposition
models. Upstream quantities (reserves, schedules, margins) may be passed as
numbers, in which case they become constants, or as model variables, in which
case they couple the block to an enclosing problem.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from numbers import Number

import numpy as np

from .milp import (InfeasibleError, LinExpr, MilpModel, SolverLimitError,
                   SolverParams, elastic_rows, solve_lp)
from .netcore import GridMatrices, PowerNetwork
from .scengen import ScenarioSet, deterministic_requirements

logger = logging.getLogger(__name__)

LEX_EPS = 1e-9  # tie-breaking perturbation per unit of generator id
_COEF_TOL = 1e-12


# ---------------------------------------------------------------------------
# result types

@dataclass(frozen=True)
class ReserveSchedule:
    """Procured up/down reserve per generator (MW) and its cost ($).

    ``zone_of_gen`` is set for zonal procurement; ``price_up``/``price_dn``
    hold the requirement-row duals, one per zone (a single entry otherwise).
    """

    r_up: np.ndarray
    r_dn: np.ndarray
    cost: float
    price_up: np.ndarray | None = None
    price_dn: np.ndarray | None = None
    zone_of_gen: np.ndarray | None = None

    def by_zone(self, n_zones: int) -> tuple[np.ndarray, np.ndarray]:
        """Split into ``(G, Z)`` arrays ``r[g, z]``."""
        up = np.zeros((self.r_up.size, n_zones))
        dn = np.zeros_like(up)
        zones = self.zone_of_gen if self.zone_of_gen is not None else np.zeros(self.r_up.size, int)
        up[np.arange(up.shape[0]), zones] = self.r_up
        dn[np.arange(dn.shape[0]), zones] = self.r_dn
        return up, dn


@dataclass(frozen=True)
class DayAheadSchedule:
    p: np.ndarray
    w: np.ndarray
    flows: np.ndarray
    cost: float
    price: float = float("nan")
    margins: np.ndarray | None = None


@dataclass(frozen=True)
class BalancingOutcome:
    """Recourse actions per scenario; arrays are indexed ``[s, element]``."""

    p_up: np.ndarray
    p_dn: np.ndarray
    curtail: np.ndarray
    shed: np.ndarray
    flows: np.ndarray
    cost: np.ndarray
    prob: np.ndarray

    @property
    def expected_cost(self) -> float:
        return float(self.prob @ self.cost)

    @property
    def n_scen(self) -> int:
        return self.cost.size


@dataclass(frozen=True)
class CostBreakdown:
    reserve: float
    day_ahead: float
    expected_balancing: float
    total: float = float("nan")

    def __post_init__(self):
        parts = self.reserve + self.day_ahead + self.expected_balancing
        if np.isnan(self.total):
            object.__setattr__(self, "total", parts)
        elif abs(self.total - parts) > 1e-6 * max(1.0, abs(parts)):
            raise ValueError(f"cost breakdown does not add up: {self.total} != {parts}")

    def as_dict(self) -> dict[str, float]:
        return {"reserve": self.reserve, "day_ahead": self.day_ahead,
                "expected_balancing": self.expected_balancing, "total": self.total}


@dataclass
class MarketResult:
    """Schedules and costs of one benchmark model run."""

    model: str
    costs: CostBreakdown
    reserves: ReserveSchedule
    day_ahead: DayAheadSchedule
    balancing: BalancingOutcome
    requirements: tuple[float, float] | None = None
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# shared block builders

def _is_const(v) -> bool:
    return isinstance(v, Number)


def _gen_buses(net: PowerNetwork) -> np.ndarray:
    return np.array([g.bus - 1 for g in net.generators], dtype=int)


def _wind_buses(net: PowerNetwork) -> np.ndarray:
    return np.array([w.bus - 1 for w in net.wind_farms], dtype=int)


@dataclass
class ReserveBlock:
    r_up: list
    r_dn: list
    cost: LinExpr
    req_rows: list[int] = field(default_factory=list)


def add_reserve_vars(model: MilpModel, net: PowerNetwork, prefix: str = "r") -> ReserveBlock:
    """Reserve variables within the offer caps, with the procurement cost."""
    r_up, r_dn = [], []
    cost = LinExpr()
    for g in net.generators:
        u = model.add_var(f"{prefix}up_{g.id}", ub=g.res_up_cap)
        d = model.add_var(f"{prefix}dn_{g.id}", ub=g.res_dn_cap)
        r_up.append(u)
        r_dn.append(d)
        cost.add(u, g.res_up_cost).add(d, g.res_dn_cost)
    return ReserveBlock(r_up, r_dn, cost)


@dataclass
class DayAheadBlock:
    p: list
    w: list
    cost: LinExpr
    balance: int
    pmin: list[int]
    pmax: list[int]
    flow_up: list[int] = field(default_factory=list)
    flow_dn: list[int] = field(default_factory=list)


def _line_flow_exprs(mats: GridMatrices, items) -> list[LinExpr]:
    """``M @ injection`` per line; ``items`` yields ``(bus index, term, scale)``."""
    ptdf = mats.ptdf
    out = []
    for row in ptdf:
        e = LinExpr()
        for bus, term, scale in items:
            k = row[bus] * scale
            if abs(k) > _COEF_TOL:
                e.add(term, k)
        out.append(e)
    return out


def add_day_ahead_block(model: MilpModel, net: PowerNetwork, mats: GridMatrices, r_up, r_dn,
                        margins=None, flow_limits: bool = True, wind_forecast=None,
                        prefix: str = "da") -> DayAheadBlock:
    """Day-ahead dispatch rows: balance, reserve-adjusted output limits, flows.

    With ``flow_limits`` the expected flows are held within ``F - margins``.
    """
    G, J = net.n_gen, net.n_wind
    what = net.wind_forecast if wind_forecast is None else np.asarray(wind_forecast, float)
    margins = np.zeros(net.n_line) if margins is None else margins
    p = [model.add_var(f"{prefix}_p_{g.id}", lb=g.p_min, ub=g.p_max) for g in net.generators]
    w = [model.add_var(f"{prefix}_w_{wf.id}", ub=what[j]) for j, wf in enumerate(net.wind_farms)]
    cost = LinExpr()
    for g, v in zip(net.generators, p):
        cost.add(v, g.energy_cost)
    bal = LinExpr()
    for v in p + w:
        bal.add(v)
    balance = model.add_eq(bal, float(net.loads.sum()), f"{prefix}_bal")
    pmin, pmax = [], []
    for k, g in enumerate(net.generators):
        pmin.append(model.add_ge(p[k] - r_dn[k], g.p_min, f"{prefix}_pmin_{g.id}"))
        pmax.append(model.add_le(p[k] + r_up[k], g.p_max, f"{prefix}_pmax_{g.id}"))
    blk = DayAheadBlock(p, w, cost, balance, pmin, pmax)
    if flow_limits:
        gb, wb = _gen_buses(net), _wind_buses(net)
        items = [(gb[k], p[k], 1.0) for k in range(G)] + [(wb[j], w[j], 1.0) for j in range(J)]
        loads = net.loads
        flows = _line_flow_exprs(mats, items)
        base = mats.ptdf @ loads
        for ln, f in zip(net.lines, flows):
            i = ln.id - 1
            f.const -= base[i]
            blk.flow_up.append(model.add_le(f + margins[i], ln.rating, f"{prefix}_fup_{ln.id}"))
            blk.flow_dn.append(model.add_ge(f - margins[i], -ln.rating, f"{prefix}_fdn_{ln.id}"))
    return blk


@dataclass
class BalancingBlock:
    p_up: list
    p_dn: list
    wct: list
    shed: dict
    cost: LinExpr
    balance: int
    flow_up: list[int] = field(default_factory=list)
    flow_dn: list[int] = field(default_factory=list)
    flows: list = field(default_factory=list)


def add_balancing_block(model: MilpModel, net: PowerNetwork, mats: GridMatrices, wind,
                        p, w, r_up, r_dn, prefix: str = "b") -> BalancingBlock:
    """Real-time recourse for one wind realization ``wind`` (MW per farm).

    ``p``, ``w``, ``r_up`` and ``r_dn`` are day-ahead quantities; numeric
    reserves become variable bounds, symbolic ones become rows.
    """
    wind = np.asarray(wind, dtype=float)
    loads = net.loads
    p_up, p_dn, wct = [], [], []
    cost = LinExpr()
    for k, g in enumerate(net.generators):
        ub_u = min(g.res_up_cap, r_up[k]) if _is_const(r_up[k]) else g.res_up_cap
        ub_d = min(g.res_dn_cap, r_dn[k]) if _is_const(r_dn[k]) else g.res_dn_cap
        u = model.add_var(f"{prefix}_pu_{g.id}", ub=max(ub_u, 0.0))
        d = model.add_var(f"{prefix}_pd_{g.id}", ub=max(ub_d, 0.0))
        if not _is_const(r_up[k]):
            model.add_le(u - r_up[k], 0.0, f"{prefix}_ru_{g.id}")
        if not _is_const(r_dn[k]):
            model.add_le(d - r_dn[k], 0.0, f"{prefix}_rd_{g.id}")
        p_up.append(u)
        p_dn.append(d)
        cost.add(u, g.energy_cost).add(d, -g.energy_cost)
    for j, wf in enumerate(net.wind_farms):
        c = model.add_var(f"{prefix}_ct_{wf.id}", ub=wind[j])
        wct.append(c)
        cost.add(c, net.curtail_cost)
    shed = {}
    for n, b in enumerate(net.buses):
        if b.load > 0:
            shed[n] = model.add_var(f"{prefix}_sh_{b.id}", ub=b.load)
            cost.add(shed[n], net.shed_cost)
    bal = LinExpr(const=float(wind.sum()))
    for k in range(net.n_gen):
        bal.add(p_up[k]).add(p_dn[k], -1.0)
    for j in range(net.n_wind):
        bal.add(w[j], -1.0).add(wct[j], -1.0)
    for v in shed.values():
        bal.add(v)
    balance = model.add_eq(bal, 0.0, f"{prefix}_bal")
    blk = BalancingBlock(p_up, p_dn, wct, shed, cost, balance)

    gb, wb = _gen_buses(net), _wind_buses(net)
    items = []
    for k in range(net.n_gen):
        items += [(gb[k], p[k], 1.0), (gb[k], p_up[k], 1.0), (gb[k], p_dn[k], -1.0)]
    for j in range(net.n_wind):
        items.append((wb[j], wct[j], -1.0))
    for n, v in shed.items():
        items.append((n, v, 1.0))
    flows = _line_flow_exprs(mats, items)
    inj0 = -loads.copy()
    np.add.at(inj0, wb, wind)
    base = mats.ptdf @ inj0
    for ln, f in zip(net.lines, flows):
        f.const += base[ln.id - 1]
        blk.flow_up.append(model.add_le(f, ln.rating, f"{prefix}_fup_{ln.id}"))
        blk.flow_dn.append(model.add_ge(f, -ln.rating, f"{prefix}_fdn_{ln.id}"))
    blk.flows = flows
    return blk


# ---------------------------------------------------------------------------
# helpers

def _require(model: MilpModel, sol, params, what: str):
    if sol.ok:
        return
    if sol.status == "infeasible":
        raise InfeasibleError(f"{what} is infeasible", elastic_rows(model, params))
    raise SolverLimitError(f"{what} ended with status {sol.status}")


def _lex(net: PowerNetwork, attr="generators") -> np.ndarray:
    return LEX_EPS * np.array([e.id for e in getattr(net, attr)], dtype=float)


def expected_flows(net: PowerNetwork, mats: GridMatrices, p, w) -> np.ndarray:
    inj = mats.gen_map.T @ np.asarray(p, float) + mats.wind_map.T @ np.asarray(w, float) - net.loads
    return mats.ptdf @ inj


def reserve_cost(net: PowerNetwork, r_up, r_dn) -> float:
    cu = np.array([g.res_up_cost for g in net.generators])
    cd = np.array([g.res_dn_cost for g in net.generators])
    return float(cu @ np.asarray(r_up) + cd @ np.asarray(r_dn))


def energy_cost(net: PowerNetwork, p) -> float:
    return float(np.array([g.energy_cost for g in net.generators]) @ np.asarray(p))


def _as_scenarios(scenarios) -> ScenarioSet:
    if isinstance(scenarios, ScenarioSet):
        return scenarios
    W = np.asarray(scenarios, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    return ScenarioSet.equiprobable(W)


# ---------------------------------------------------------------------------
# sequential stages

def solve_reserve_market(net: PowerNetwork, lam_up, lam_dn, zone_of=None,
                         params: SolverParams | None = None) -> ReserveSchedule:
    """Merit-order reserve procurement against fixed requirements.

    Without ``zone_of`` the requirements are system-wide scalars. With a
    ``zone_of`` vector (zone index per bus, 0-based) ``lam_up``/``lam_dn`` are
    per-zone and each generator may only serve the zone of its bus.
    """
    if zone_of is None:
        zone_of = np.zeros(net.n_bus, dtype=int)
        lam_up, lam_dn = np.atleast_1d(float(lam_up)), np.atleast_1d(float(lam_dn))
    zone_of = np.asarray(zone_of, dtype=int)
    lam_up = np.asarray(lam_up, dtype=float)
    lam_dn = np.asarray(lam_dn, dtype=float)
    Z = lam_up.size
    gz = zone_of[_gen_buses(net)]
    m = MilpModel("reserve_market")
    blk = add_reserve_vars(m, net)
    lex = _lex(net)
    obj = blk.cost.copy()
    for k in range(net.n_gen):
        obj.add(blk.r_up[k], lex[k]).add(blk.r_dn[k], lex[k])
    m.minimize(obj)
    rows_up, rows_dn = [], []
    for z in range(Z):
        members = [k for k in range(net.n_gen) if gz[k] == z]
        up = LinExpr()
        dn = LinExpr()
        for k in members:
            up.add(blk.r_up[k])
            dn.add(blk.r_dn[k])
        rows_up.append(m.add_ge(up, lam_up[z], f"req_up_{z + 1}"))
        rows_dn.append(m.add_ge(dn, lam_dn[z], f"req_dn_{z + 1}"))
    sol = solve_lp(m, params)
    _require(m, sol, params, "reserve market")
    r_up = np.clip(sol.values(blk.r_up), 0.0, None)
    r_dn = np.clip(sol.values(blk.r_dn), 0.0, None)
    return ReserveSchedule(r_up, r_dn, reserve_cost(net, r_up, r_dn),
                           price_up=sol.duals[rows_up].copy(), price_dn=sol.duals[rows_dn].copy(),
                           zone_of_gen=gz if Z > 1 else None)


def solve_day_ahead(net: PowerNetwork, mats: GridMatrices, reserves: ReserveSchedule,
                    margins=None, wind_forecast=None, flow_limits: bool = True,
                    params: SolverParams | None = None) -> DayAheadSchedule:
    """Least-cost dispatch with flows limited to ``F - margins``."""
    margins = np.zeros(net.n_line) if margins is None else np.asarray(margins, dtype=float)
    rating = np.array([ln.rating for ln in net.lines])
    if np.any(margins < -1e-9) or np.any(margins > rating + 1e-9):
        raise ValueError("capacity margins must satisfy 0 <= margin <= rating")
    m = MilpModel("day_ahead")
    blk = add_day_ahead_block(m, net, mats, list(reserves.r_up), list(reserves.r_dn),
                              margins=margins, flow_limits=flow_limits, wind_forecast=wind_forecast)
    obj = blk.cost.copy()
    lex = _lex(net)
    for k, v in enumerate(blk.p):
        obj.add(v, lex[k])
    m.minimize(obj)
    sol = solve_lp(m, params)
    _require(m, sol, params, "day-ahead market")
    p = sol.values(blk.p)
    w = sol.values(blk.w)
    return DayAheadSchedule(p, w, expected_flows(net, mats, p, w), energy_cost(net, p),
                            price=float(sol.duals[blk.balance]), margins=margins.copy())


def _balance_one(net, mats, da, reserves, wind, params):
    m = MilpModel("balancing")
    blk = add_balancing_block(m, net, mats, wind, list(da.p), list(da.w),
                              list(reserves.r_up), list(reserves.r_dn))
    obj = blk.cost.copy()
    lex = _lex(net)
    for k in range(net.n_gen):
        obj.add(blk.p_up[k], lex[k]).add(blk.p_dn[k], lex[k])
    m.minimize(obj)
    sol = solve_lp(m, params)
    _require(m, sol, params, "balancing market")
    return _extract_balancing(net, sol, blk)


def _extract_balancing(net, sol, blk: BalancingBlock):
    shed = np.zeros(net.n_bus)
    for n, v in blk.shed.items():
        shed[n] = sol.value(v)
    pu, pd, ct = sol.values(blk.p_up), sol.values(blk.p_dn), sol.values(blk.wct)
    cost = (np.array([g.energy_cost for g in net.generators]) @ (pu - pd)
            + net.curtail_cost * ct.sum() + net.shed_cost * shed.sum())
    flows = np.array([f.value(sol.x) for f in blk.flows])
    return pu, pd, ct, shed, flows, float(cost)


def _stack(net, parts, prob) -> BalancingOutcome:
    pu, pd, ct, sh, fl, cost = zip(*parts)
    return BalancingOutcome(np.array(pu), np.array(pd), np.array(ct), np.array(sh), np.array(fl),
                            np.array(cost), np.asarray(prob, dtype=float))


def solve_balancing(net: PowerNetwork, mats: GridMatrices, da: DayAheadSchedule,
                    reserves: ReserveSchedule, scenarios, params: SolverParams | None = None,
                    jobs: int = 1) -> BalancingOutcome:
    """Clear the balancing market for each wind realization.

    ``scenarios`` is a :class:`ScenarioSet` or a wind vector (one scenario
    with probability one). Scenario LPs are independent and run on ``jobs``
    threads.
    """
    scen = _as_scenarios(scenarios)

    def one(s):
        return _balance_one(net, mats, da, reserves, scen.W[:, s], params)

    if jobs > 1 and scen.n_scen > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(one, range(scen.n_scen)))
    else:
        parts = [one(s) for s in range(scen.n_scen)]
    return _stack(net, parts, scen.prob)


def run_sequential(net: PowerNetwork, mats: GridMatrices, scenarios: ScenarioSet, q: float,
                   params: SolverParams | None = None, jobs: int = 1) -> MarketResult:
    """Reserve market with quantile requirements, then day-ahead, then balancing."""
    lam_up, lam_dn = deterministic_requirements(scenarios, q)
    res = solve_reserve_market(net, lam_up, lam_dn, params=params)
    da = solve_day_ahead(net, mats, res, params=params)
    bal = solve_balancing(net, mats, da, res, scenarios, params=params, jobs=jobs)
    costs = CostBreakdown(res.cost, da.cost, bal.expected_cost)
    return MarketResult("sequential", costs, res, da, bal, requirements=(lam_up, lam_dn),
                        info={"q": q})


def evaluate_fixed_reserves(net: PowerNetwork, mats: GridMatrices, reserves: ReserveSchedule,
                            scenarios: ScenarioSet, margins=None, params: SolverParams | None = None,
                            jobs: int = 1, label: str = "fixed") -> MarketResult:
    """Day-ahead and balancing for given reserves (and capacity margins)."""
    da = solve_day_ahead(net, mats, reserves, margins=margins, params=params)
    bal = solve_balancing(net, mats, da, reserves, scenarios, params=params, jobs=jobs)
    return MarketResult(label, CostBreakdown(reserves.cost, da.cost, bal.expected_cost),
                        reserves, da, bal)


# ---------------------------------------------------------------------------
# stochastic co-optimization

def build_stochastic(net: PowerNetwork, mats: GridMatrices, scenarios: ScenarioSet):
    """Extensive-form LP: reserves, day-ahead (no flow limits), all scenarios."""
    m = MilpModel("stochastic")
    res = add_reserve_vars(m, net)
    da = add_day_ahead_block(m, net, mats, res.r_up, res.r_dn, flow_limits=False)
    obj = res.cost.copy().add(da.cost)
    blocks = []
    for s in range(scenarios.n_scen):
        b = add_balancing_block(m, net, mats, scenarios.W[:, s], da.p, da.w, res.r_up, res.r_dn,
                                prefix=f"b{s + 1}")
        obj.add(b.cost, float(scenarios.prob[s]))
        blocks.append(b)
    m.minimize(obj)
    return m, res, da, blocks


def solve_stochastic(net: PowerNetwork, mats: GridMatrices, scenarios: ScenarioSet,
                     params: SolverParams | None = None) -> MarketResult:
    m, res, da, blocks = build_stochastic(net, mats, scenarios)
    sol = solve_lp(m, params)
    _require(m, sol, params, "stochastic model")
    r_up = np.clip(sol.values(res.r_up), 0.0, None)
    r_dn = np.clip(sol.values(res.r_dn), 0.0, None)
    reserves = ReserveSchedule(r_up, r_dn, reserve_cost(net, r_up, r_dn))
    p, w = sol.values(da.p), sol.values(da.w)
    sched = DayAheadSchedule(p, w, expected_flows(net, mats, p, w), energy_cost(net, p),
                             price=float(sol.duals[da.balance]))
    bal = _stack(net, [_extract_balancing(net, sol, b) for b in blocks], scenarios.prob)
    costs = CostBreakdown(reserves.cost, sched.cost, bal.expected_cost)
    if abs(costs.total - sol.objective) > 1e-6 * max(1.0, abs(sol.objective)):
        logger.warning("stochastic objective %.9g differs from recomputed cost %.9g",
                       sol.objective, costs.total)
    return MarketResult("stochastic", costs, reserves, sched, bal, info={"objective": sol.objective})


__all__ = [
    "BalancingBlock", "BalancingOutcome", "CostBreakdown", "DayAheadBlock", "DayAheadSchedule",
    "MarketResult", "ReserveBlock", "ReserveSchedule", "add_balancing_block",
    "add_day_ahead_block", "add_reserve_vars", "build_stochastic", "evaluate_fixed_reserves",
    "expected_flows", "run_sequential", "solve_balancing", "solve_day_ahead",
    "solve_reserve_market", "solve_stochastic",
]
