"""Zonal preemptive model: capacity allocation, lower-level KKT blocks and the
single-level MILP, plus certification and out-of-sample evaluation.

The upper level picks a partition, zonal requirements ``lambda`` and line
capacity set-asides ``Gamma``. Two lower levels are replaced by their KKT
conditions: the zonal reserve market (merit order inside each zone) and the
day-ahead market with flow limits ``F - Gamma``. Balancing is evaluated per
scenario as in the stochastic model.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .markets import (BalancingBlock, CostBreakdown, DayAheadBlock, DayAheadSchedule,
                      MarketResult, ReserveSchedule, _extract_balancing, _stack,
                      add_balancing_block, add_day_ahead_block, energy_cost, expected_flows,
                      reserve_cost, solve_balancing, solve_day_ahead, solve_reserve_market,
                      solve_stochastic)
from .milp import (CONTINUOUS, EQ, GE, INFEASIBLE, INTEGER, AuditReport,
                   ComplementarityHandle, InfeasibleError, LinExpr, MilpModel, Solution,
                   SolverLimitError, SolverParams, Var, audit_bigm, linearize_complementarity,
                   quicksum, solve_lp, solve_milp)
from .netcore import GridMatrices, PowerNetwork
from .partition import (Partition, PartitionVars, emit_partition_block, extract_partition,
                        verify_partition)
from .scengen import ScenarioSet

logger = logging.getLogger(__name__)

CERT_TOL = 1e-5
SLACK_MARGIN = 1e-3  # relative head-room on data-derived primal slack bounds


class CertificationError(RuntimeError):
    """The MILP point fails an independent optimality or structure check."""


# ---------------------------------------------------------------------------
# capacity allocation

@dataclass
class CapacityVars:
    h: list  # h[l][z], integer 0..2
    gamma_lz: list
    gamma: list
    chi: float


def emit_capacity_block(model: MilpModel, pv: PartitionVars, net: PowerNetwork,
                        chi: float, prefix: str = "") -> CapacityVars:
    """Capacity that may be withheld from the day-ahead market on cross-zonal lines."""
    if not 0.0 <= chi <= 1.0:
        raise ValueError(f"chi must lie in [0, 1], got {chi}")
    Z = pv.n_zones
    h, glz, gam = [], [], []
    for k, ln in enumerate(net.lines):
        f, t = pv.line_ends[k]
        cap = chi * ln.rating
        g = model.add_var(f"{prefix}gamma_{ln.id}", ub=cap)
        row_h, row_g = [], []
        total = LinExpr()
        for z in range(Z):
            hv = model.add_var(f"{prefix}h_{ln.id}_{z + 1}", ub=2, kind=INTEGER)
            model.add_eq(hv - pv.x[f][z] - pv.x[t][z], 0.0, f"{prefix}h_def_{ln.id}_{z + 1}")
            gz = model.add_var(f"{prefix}gamma_{ln.id}_{z + 1}", ub=cap)
            model.add_le(gz - cap * LinExpr.of(hv), 0.0, f"{prefix}gam_h_{ln.id}_{z + 1}")
            model.add_le(gz + cap * LinExpr.of(hv), 2 * cap, f"{prefix}gam_2h_{ln.id}_{z + 1}")
            model.add_le(gz - g, 0.0, f"{prefix}gam_le_{ln.id}_{z + 1}")
            total.add(gz, 0.5)
            row_h.append(hv)
            row_g.append(gz)
        model.add_eq(g - total, 0.0, f"{prefix}gam_def_{ln.id}")
        h.append(row_h)
        glz.append(row_g)
        gam.append(g)
    return CapacityVars(h, glz, gam, float(chi))


# ---------------------------------------------------------------------------
# generic KKT emission

@dataclass
class KktBlock:
    name: str
    lower_vars: list
    objective: LinExpr
    stationarity: list[int] = field(default_factory=list)
    handles: list[ComplementarityHandle] = field(default_factory=list)
    row_duals: dict[int, Var] = field(default_factory=dict)
    eq_duals: list[Var] = field(default_factory=list)
    u_max: float = math.inf


def _activity_range(model: MilpModel, coeffs: dict[int, float]) -> tuple[float, float]:
    lo = hi = 0.0
    for k, a in coeffs.items():
        v = model.variables[k]
        lo += min(a * v.lb, a * v.ub)
        hi += max(a * v.lb, a * v.ub)
    return lo, hi


def _slack_bound(max_slack: float, name: str) -> float:
    if not math.isfinite(max_slack):
        raise ValueError(f"cannot bound the primal slack of {name}: unbounded variables")
    return max(0.0, max_slack) * (1.0 + SLACK_MARGIN) + 1.0


def emit_kkt(model: MilpModel, name: str, lower_vars, cost: dict[int, float], rows: list[int],
             simple_bounds: dict[int, tuple[float | None, float | None]], u_max: float) -> KktBlock:
    """Stationarity, dual feasibility and linearized complementarity of a lower-level LP.

    The lower level minimizes ``cost`` over ``lower_vars`` subject to the model
    rows ``rows`` (already present, possibly involving upper-level variables)
    and the simple bounds in ``simple_bounds``. Other bounds declared on the
    lower-level variables are treated as implied and get no multiplier.
    """
    lower = {v.index for v in lower_vars}
    blk = KktBlock(name, list(lower_vars), LinExpr({k: c for k, c in cost.items()}), u_max=u_max)
    grad: dict[int, LinExpr] = {k: LinExpr(const=cost.get(k, 0.0)) for k in lower}
    for i in rows:
        con = model.constraints[i]
        sign = -1.0 if con.sense == GE else 1.0
        g = LinExpr({k: sign * a for k, a in con.coeffs.items()}, -sign * con.rhs)
        if con.sense == EQ:
            mu = model.add_var(f"{name}_dual_{con.name}", lb=-u_max, ub=u_max)
            blk.eq_duals.append(mu)
        else:
            mu = model.add_var(f"{name}_dual_{con.name}", ub=u_max)
            lo, _ = _activity_range(model, g.terms)
            g_max = _slack_bound(-(lo + g.const), con.name)
            blk.handles.append(linearize_complementarity(model, g, mu, g_max, u_max,
                                                         f"{name}_cc_{con.name}", add_primal=False))
        blk.row_duals[i] = mu
        for k, a in con.coeffs.items():
            if k in lower:
                grad[k].add(mu, sign * a)
    for v in lower_vars:
        lb, ub = simple_bounds.get(v.index, (None, None))
        if lb is not None and ub is not None and lb == ub:
            mu = model.add_var(f"{name}_dual_fix_{v.name}", lb=-u_max, ub=u_max)
            blk.eq_duals.append(mu)
            grad[v.index].add(mu)
            continue
        if lb is not None:
            mu = model.add_var(f"{name}_dual_lb_{v.name}", ub=u_max)
            g = LinExpr({v.index: -1.0}, lb)
            g_max = _slack_bound(model.variables[v.index].ub - lb, f"lb of {v.name}")
            blk.handles.append(linearize_complementarity(model, g, mu, g_max, u_max,
                                                         f"{name}_cc_lb_{v.name}", add_primal=False))
            grad[v.index].add(mu, -1.0)
        if ub is not None:
            mu = model.add_var(f"{name}_dual_ub_{v.name}", ub=u_max)
            g = LinExpr({v.index: 1.0}, -ub)
            g_max = _slack_bound(ub - model.variables[v.index].lb, f"ub of {v.name}")
            blk.handles.append(linearize_complementarity(model, g, mu, g_max, u_max,
                                                         f"{name}_cc_ub_{v.name}", add_primal=False))
            grad[v.index].add(mu, 1.0)
    for v in lower_vars:
        blk.stationarity.append(model.add_eq(grad[v.index], 0.0, f"{name}_stat_{v.name}"))
    return blk


# ---------------------------------------------------------------------------
# lower levels

@dataclass
class ZonalReserveVars:
    r_gz_up: list  # [g][z]
    r_gz_dn: list
    r_up: list
    r_dn: list
    lam_up: list
    lam_dn: list
    cost: LinExpr
    req_up: list[int] = field(default_factory=list)
    req_dn: list[int] = field(default_factory=list)


def add_requirement_vars(model: MilpModel, net: PowerNetwork, n_zones: int, prefix: str = ""):
    """Zonal requirements, bounded above by the total offered reserve."""
    tot_up = sum(g.res_up_cap for g in net.generators)
    tot_dn = sum(g.res_dn_cap for g in net.generators)
    lam_up = [model.add_var(f"{prefix}lam_up_{z + 1}", ub=tot_up) for z in range(n_zones)]
    lam_dn = [model.add_var(f"{prefix}lam_dn_{z + 1}", ub=tot_dn) for z in range(n_zones)]
    return lam_up, lam_dn


def emit_zonal_reserve_kkt(model: MilpModel, pv: PartitionVars, lam_up, lam_dn,
                           net: PowerNetwork, u_max: float, prefix: str = "rm"):
    """Primal rows and KKT conditions of the zonal reserve market."""
    if lam_up is None or lam_dn is None:
        raise ValueError("zonal reserve KKT needs the requirement variables")
    Z = pv.n_zones
    gbus = [g.bus - 1 for g in net.generators]
    rgu, rgd, ru, rd = [], [], [], []
    cost = LinExpr()
    rows = []
    bounds = {}
    for k, g in enumerate(net.generators):
        up_z, dn_z = [], []
        for z in range(Z):
            a = model.add_var(f"{prefix}_rup_{g.id}_{z + 1}", ub=g.res_up_cap)
            b = model.add_var(f"{prefix}_rdn_{g.id}_{z + 1}", ub=g.res_dn_cap)
            bounds[a.index] = (0.0, None)
            bounds[b.index] = (0.0, None)
            rows.append(model.add_le(a - g.res_up_cap * LinExpr.of(pv.x[gbus[k]][z]), 0.0,
                                     f"{prefix}_capup_{g.id}_{z + 1}"))
            rows.append(model.add_le(b - g.res_dn_cap * LinExpr.of(pv.x[gbus[k]][z]), 0.0,
                                     f"{prefix}_capdn_{g.id}_{z + 1}"))
            up_z.append(a)
            dn_z.append(b)
        r1 = model.add_var(f"{prefix}_rup_{g.id}", ub=g.res_up_cap)
        r2 = model.add_var(f"{prefix}_rdn_{g.id}", ub=g.res_dn_cap)
        rows.append(model.add_eq(r1 - quicksum(up_z), 0.0, f"{prefix}_defup_{g.id}"))
        rows.append(model.add_eq(r2 - quicksum(dn_z), 0.0, f"{prefix}_defdn_{g.id}"))
        cost.add(r1, g.res_up_cost).add(r2, g.res_dn_cost)
        rgu.append(up_z)
        rgd.append(dn_z)
        ru.append(r1)
        rd.append(r2)
    req_up, req_dn = [], []
    for z in range(Z):
        req_up.append(model.add_ge(quicksum(rgu[k][z] for k in range(net.n_gen)) - lam_up[z], 0.0,
                                   f"{prefix}_requp_{z + 1}"))
        req_dn.append(model.add_ge(quicksum(rgd[k][z] for k in range(net.n_gen)) - lam_dn[z], 0.0,
                                   f"{prefix}_reqdn_{z + 1}"))
    rows += req_up + req_dn
    lower = [v for row in rgu for v in row] + [v for row in rgd for v in row] + ru + rd
    kkt = emit_kkt(model, prefix, lower, dict(cost.terms), rows, bounds, u_max)
    zr = ZonalReserveVars(rgu, rgd, ru, rd, list(lam_up), list(lam_dn), cost, req_up, req_dn)
    return kkt, zr


def emit_day_ahead_kkt(model: MilpModel, net: PowerNetwork, mats: GridMatrices, r_up, r_dn,
                       gamma, u_max: float, prefix: str = "da"):
    """Day-ahead primal rows with ``F - Gamma`` limits and their KKT conditions."""
    if r_up is None or r_dn is None or gamma is None:
        raise ValueError("day-ahead KKT needs reserve and capacity variables")
    blk = add_day_ahead_block(model, net, mats, r_up, r_dn, margins=gamma, prefix=prefix)
    rows = [blk.balance] + blk.pmin + blk.pmax + blk.flow_up + blk.flow_dn
    what = net.wind_forecast
    bounds = {v.index: (0.0, float(what[j])) for j, v in enumerate(blk.w)}
    kkt = emit_kkt(model, prefix, blk.p + blk.w, dict(blk.cost.terms), rows, bounds, u_max)
    return kkt, blk


# ---------------------------------------------------------------------------
# assembly

@dataclass
class ZonalModel:
    model: MilpModel
    net: PowerNetwork
    mats: GridMatrices
    scenarios: ScenarioSet
    n_zones: int
    chi: float
    y_min: int
    partition: PartitionVars
    capacity: CapacityVars
    reserve: ZonalReserveVars
    reserve_kkt: KktBlock
    day_ahead: DayAheadBlock
    day_ahead_kkt: KktBlock
    balancing: list[BalancingBlock]
    u_max: float
    first_stage_cost: LinExpr = field(default_factory=LinExpr)

    @property
    def handles(self) -> list[ComplementarityHandle]:
        return self.reserve_kkt.handles + self.day_ahead_kkt.handles

    def statistics(self) -> dict:
        st = self.model.statistics()
        st.update({"zones": self.n_zones, "chi": self.chi, "y_min": self.y_min,
                   "scenarios": self.scenarios.n_scen, "complementarities": len(self.handles)})
        return st


def default_dual_bound(net: PowerNetwork, params: SolverParams | None = None) -> float:
    if params is not None and params.big_m_dual is not None:
        return float(params.big_m_dual)
    return 10.0 * net.shed_cost


def build_first_stage(model: MilpModel, net: PowerNetwork, mats: GridMatrices, n_zones: int,
                      chi: float, y_min: int, u_max: float, symmetry_breaking: bool = True):
    """Partition, capacity, requirements and both KKT blocks (no balancing)."""
    pv = emit_partition_block(model, net, n_zones, y_min, symmetry_breaking=symmetry_breaking)
    cap = emit_capacity_block(model, pv, net, chi)
    lam_up, lam_dn = add_requirement_vars(model, net, n_zones)
    rkkt, rv = emit_zonal_reserve_kkt(model, pv, lam_up, lam_dn, net, u_max)
    dkkt, da = emit_day_ahead_kkt(model, net, mats, rv.r_up, rv.r_dn, cap.gamma, u_max)
    return pv, cap, rv, rkkt, da, dkkt


def assemble_mpec(net: PowerNetwork, mats: GridMatrices, scenarios: ScenarioSet, n_zones: int,
                  chi: float = 0.0, y_min: int = 1, params: SolverParams | None = None,
                  symmetry_breaking: bool = True) -> ZonalModel:
    """Single-level MILP of the zonal preemptive model (extensive form)."""
    u_max = default_dual_bound(net, params)
    m = MilpModel(f"zonal_Z{n_zones}")
    pv, cap, rv, rkkt, da, dkkt = build_first_stage(m, net, mats, n_zones, chi, y_min, u_max,
                                                    symmetry_breaking)
    first = rv.cost.copy().add(da.cost)
    obj = first.copy()
    blocks = []
    for s in range(scenarios.n_scen):
        b = add_balancing_block(m, net, mats, scenarios.W[:, s], da.p, da.w, rv.r_up, rv.r_dn,
                                prefix=f"b{s + 1}")
        obj.add(b.cost, float(scenarios.prob[s]))
        blocks.append(b)
    m.minimize(obj)
    zm = ZonalModel(m, net, mats, scenarios, n_zones, chi, y_min, pv, cap, rv, rkkt, da, dkkt,
                    blocks, u_max, first)
    logger.info("zonal MILP: %s", zm.statistics())
    return zm


# ---------------------------------------------------------------------------
# solving, polishing and certification

@dataclass
class ZonalOutcome:
    partition: Partition
    lam_up: np.ndarray
    lam_dn: np.ndarray
    reserves: ReserveSchedule
    day_ahead: DayAheadSchedule
    balancing: object
    gamma: np.ndarray
    costs: CostBreakdown
    objective: float
    gap: float = 0.0
    audit: AuditReport | None = None
    certification: dict = field(default_factory=dict)
    statistics: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def as_market_result(self, label: str = "zonal") -> MarketResult:
        return MarketResult(label, self.costs, self.reserves, self.day_ahead, self.balancing,
                            info={"gamma": self.gamma})


def polish(model: MilpModel, sol: Solution, params: SolverParams | None = None,
           duals=None) -> Solution:
    """Fix every integer variable at its MILP value and re-solve the LP.

    If ``duals`` is given, a second LP keeps the objective at its optimum and
    minimizes their sum, so degenerate multiplier pairs do not drift up to the
    big-M bound and the audit only sees bounds that are actually forced.
    """
    fixed = model.copy()
    for k, v in enumerate(fixed.variables):
        if v.kind != CONTINUOUS:
            v.lb = v.ub = float(round(sol.x[k]))
            v.kind = CONTINUOUS
    lp = solve_lp(fixed, params)
    if not lp.ok:
        logger.warning("polishing LP ended with status %s; keeping the MILP point", lp.status)
        return sol
    if duals:
        obj = lp.objective
        fixed.add_le(fixed.objective, obj + 1e-9 * max(1.0, abs(obj)), "__polish_obj")
        fixed.minimize(quicksum(duals))
        lp2 = solve_lp(fixed, params)
        if lp2.ok:
            lp2.objective = model.objective.value(lp2.x)
            lp = lp2
    lp.gap = sol.gap
    lp.nodes = sol.nodes
    lp.best_bound = sol.best_bound
    return lp


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def _audit_equalities(blocks, sol: Solution, rep: AuditReport, tol: float = 1e-6):
    for blk in blocks:
        for mu in blk.eq_duals:
            val = abs(sol.value(mu))
            if val >= blk.u_max - tol * max(1.0, blk.u_max):
                rep.flagged.append(f"{mu.name}: free dual {val:.6g} at bound {blk.u_max:.6g}")


def certify_lower_levels(net: PowerNetwork, mats: GridMatrices, partition: Partition,
                         lam_up, lam_dn, r_up, r_dn, p, gamma,
                         params: SolverParams | None = None) -> dict:
    """Re-solve both lower levels at the fixed upper-level point and compare costs."""
    rm = solve_reserve_market(net, lam_up, lam_dn, zone_of=partition.zone_index, params=params)
    c_r = reserve_cost(net, r_up, r_dn)
    da = solve_day_ahead(net, mats, ReserveSchedule(np.asarray(r_up), np.asarray(r_dn), c_r),
                         margins=np.clip(gamma, 0.0, None), params=params)
    c_d = energy_cost(net, p)
    out = {"reserve_lp": rm.cost, "reserve_kkt": c_r, "reserve_rel": _rel(c_r, rm.cost),
           "day_ahead_lp": da.cost, "day_ahead_kkt": c_d, "day_ahead_rel": _rel(c_d, da.cost)}
    out["ok"] = out["reserve_rel"] <= CERT_TOL and out["day_ahead_rel"] <= CERT_TOL
    return out


def _outcome_from_solution(zm: ZonalModel, sol: Solution) -> ZonalOutcome:
    net, mats = zm.net, zm.mats
    part = extract_partition(sol, zm.partition, net)
    lam_up = sol.values(zm.reserve.lam_up)
    lam_dn = sol.values(zm.reserve.lam_dn)
    r_up = np.clip(sol.values(zm.reserve.r_up), 0.0, None)
    r_dn = np.clip(sol.values(zm.reserve.r_dn), 0.0, None)
    reserves = ReserveSchedule(r_up, r_dn, reserve_cost(net, r_up, r_dn),
                               price_up=np.array([sol.value(zm.reserve_kkt.row_duals[i])
                                                  for i in zm.reserve.req_up]),
                               price_dn=np.array([sol.value(zm.reserve_kkt.row_duals[i])
                                                  for i in zm.reserve.req_dn]),
                               zone_of_gen=part.zone_index[[g.bus - 1 for g in net.generators]])
    p, w = sol.values(zm.day_ahead.p), sol.values(zm.day_ahead.w)
    gamma = np.clip(sol.values(zm.capacity.gamma), 0.0, None)
    da = DayAheadSchedule(p, w, expected_flows(net, mats, p, w), energy_cost(net, p),
                          price=float(sol.value(zm.day_ahead_kkt.row_duals[zm.day_ahead.balance])),
                          margins=gamma)
    bal = _stack(net, [_extract_balancing(net, sol, b) for b in zm.balancing], zm.scenarios.prob)
    costs = CostBreakdown(reserves.cost, da.cost, bal.expected_cost)
    return ZonalOutcome(part, lam_up, lam_dn, reserves, da, bal, gamma, costs, sol.objective,
                        gap=sol.gap, statistics=zm.statistics())


def solve_extensive(zm: ZonalModel, params: SolverParams | None = None,
                    certify: bool = True) -> ZonalOutcome:
    """Solve the single-level MILP, polish, audit and certify the result."""
    params = params or SolverParams()
    t0 = time.monotonic()
    sol = solve_milp(zm.model, params)
    if sol.status == INFEASIBLE:
        raise InfeasibleError("zonal model is infeasible")
    if not sol.ok:
        if sol.has_incumbent:
            raise SolverLimitError(f"zonal MILP stopped ({sol.status}) with gap {sol.gap:.3g}")
        raise SolverLimitError(f"zonal MILP stopped ({sol.status}) without a feasible point")
    milp_obj = sol.objective
    sol = polish(zm.model, sol, params, duals=[h.mu for h in zm.handles])
    out = _outcome_from_solution(zm, sol)
    out.info.update({"milp_objective": milp_obj, "nodes": sol.nodes,
                     "best_bound": sol.best_bound, "seconds": time.monotonic() - t0})
    out.audit = audit_bigm(zm.model, sol, zm.handles)
    _audit_equalities([zm.reserve_kkt, zm.day_ahead_kkt], sol, out.audit)
    violations = verify_partition(zm.net, out.partition, y_min=zm.y_min)
    if violations:
        raise CertificationError("partition check failed: " + "; ".join(violations))
    if certify:
        cert = certify_lower_levels(zm.net, zm.mats, out.partition, out.lam_up, out.lam_dn,
                                    out.reserves.r_up, out.reserves.r_dn, out.day_ahead.p,
                                    out.gamma, params)
        out.certification = cert
        if not cert["ok"]:
            raise CertificationError(
                "lower-level certification failed (reserve rel. diff %.3g, day-ahead rel. diff %.3g);"
                " the dual big-M is probably too small" % (cert["reserve_rel"], cert["day_ahead_rel"]))
    if not out.audit.clean:
        raise CertificationError("big-M audit flagged: " + "; ".join(out.audit.flagged[:5]))
    return out


def solve_zonal(net: PowerNetwork, mats: GridMatrices, scenarios: ScenarioSet, n_zones: int,
                chi: float = 0.0, y_min: int = 1, params: SolverParams | None = None) -> ZonalOutcome:
    """Assemble and solve the extensive form in one call."""
    zm = assemble_mpec(net, mats, scenarios, n_zones, chi, y_min, params)
    return solve_extensive(zm, params)


# ---------------------------------------------------------------------------
# reports

def zone_report(net: PowerNetwork, outcome: ZonalOutcome) -> list[dict]:
    """Per-zone procured volumes and average reserve cost."""
    rows = []
    gz = outcome.partition.zone_index[[g.bus - 1 for g in net.generators]]
    cu = np.array([g.res_up_cost for g in net.generators])
    cd = np.array([g.res_dn_cost for g in net.generators])
    r_up, r_dn = outcome.reserves.r_up, outcome.reserves.r_dn
    for z in range(outcome.partition.n_zones):
        sel = gz == z
        up, dn = float(r_up[sel].sum()), float(r_dn[sel].sum())
        cost = float(cu[sel] @ r_up[sel] + cd[sel] @ r_dn[sel])
        total = up + dn
        rows.append({"zone": z + 1, "buses": outcome.partition.members(z + 1),
                     "lambda_up": float(outcome.lam_up[z]), "lambda_dn": float(outcome.lam_dn[z]),
                     "up_mw": up, "down_mw": dn, "total_mw": total,
                     "avg_cost": cost / total if total > 0 else 0.0})
    return rows


# ---------------------------------------------------------------------------
# out-of-sample stability

@dataclass
class StabilityRow:
    model: str
    scenario_set: int
    cost: float
    stochastic_cost: float

    @property
    def ratio(self) -> float:
        return self.cost / self.stochastic_cost


STOCHASTIC = "stochastic"


def run_stability(net: PowerNetwork, mats: GridMatrices, candidates: dict,
                  scenario_sets: list[ScenarioSet], params: SolverParams | None = None,
                  jobs: int = 1) -> list[StabilityRow]:
    """Evaluate fixed first-stage decisions on further scenario sets.

    ``candidates`` maps a label to ``(ReserveSchedule, margins or None)`` or to
    the string ``"stochastic"``, which re-solves the stochastic model on each
    set. Costs are normalized by the stochastic cost of the same set.
    """
    rows: list[StabilityRow] = []
    da_cache: dict[str, DayAheadSchedule] = {}
    for i, scen in enumerate(scenario_sets, start=1):
        st = solve_stochastic(net, mats, scen, params)
        ref = st.costs.total
        for label, cand in candidates.items():
            if isinstance(cand, str):
                if cand != STOCHASTIC:
                    raise ValueError(f"unknown candidate kind {cand!r}")
                rows.append(StabilityRow(label, i, st.costs.total, ref))
                continue
            reserves, margins = cand
            if label not in da_cache:
                da_cache[label] = solve_day_ahead(net, mats, reserves, margins=margins, params=params)
            bal = solve_balancing(net, mats, da_cache[label], reserves, scen, params=params, jobs=jobs)
            total = CostBreakdown(reserves.cost, da_cache[label].cost, bal.expected_cost).total
            rows.append(StabilityRow(label, i, total, ref))
    return rows


__all__ = [
    "CERT_TOL", "CapacityVars", "CertificationError", "KktBlock", "STOCHASTIC", "StabilityRow",
    "ZonalModel", "ZonalOutcome", "ZonalReserveVars", "add_requirement_vars", "assemble_mpec",
    "build_first_stage", "certify_lower_levels", "default_dual_bound", "emit_capacity_block",
    "emit_day_ahead_kkt", "emit_kkt", "emit_zonal_reserve_kkt", "polish", "run_stability",
    "solve_extensive", "solve_zonal", "zone_report",
]
