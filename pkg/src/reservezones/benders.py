"""Multi-cut Benders decomposition of the zonal preemptive MILP.

The master keeps partitioning, capacity allocation, requirements and both
KKT blocks, with one recourse estimate ``theta_s`` per scenario. Each
scenario's balancing LP is solved with the first-stage quantities pinned by
equality rows; the sensitivities of those rows give the cut slopes.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .markets import (CostBreakdown, DayAheadSchedule, ReserveSchedule, _extract_balancing,
                      _stack, add_balancing_block, energy_cost, expected_flows, reserve_cost)
from .milp import (INF, INFEASIBLE, InfeasibleError, LinExpr, MilpModel, SolverLimitError,
                   SolverParams, Var, audit_bigm, elastic_rows, solve_lp, solve_milp)
from .netcore import GridMatrices, PowerNetwork
from .partition import extract_partition, verify_partition
from .scengen import ScenarioSet
from .zonal import (CertificationError, ZonalOutcome, _audit_equalities, build_first_stage,
                    certify_lower_levels, default_dual_bound, polish)

logger = logging.getLogger(__name__)


@dataclass
class FirstStage:
    """First-stage quantities the balancing problem depends on."""

    r_up: np.ndarray
    r_dn: np.ndarray
    p: np.ndarray
    w: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.r_up, self.r_dn, self.p, self.w])


@dataclass
class Cut:
    scenario: int
    intercept: float  # subproblem cost at the anchor
    slope: np.ndarray  # over FirstStage.flat() ordering
    anchor: np.ndarray
    iteration: int = 0

    def evaluate(self, point: np.ndarray) -> float:
        return float(self.intercept + self.slope @ (np.asarray(point) - self.anchor))


@dataclass
class SubproblemResult:
    cost: float
    slope: np.ndarray
    detail: tuple


@dataclass
class MasterState:
    model: MilpModel
    theta: list
    theta0: float
    first_vars: list  # Var list aligned with FirstStage.flat()
    prob: np.ndarray
    handles: dict
    cuts: list[Cut] = field(default_factory=list)
    iteration: int = 0

    @property
    def n_scen(self) -> int:
        return len(self.theta)


@dataclass
class BendersTrace:
    rows: list[dict] = field(default_factory=list)
    converged: bool = False

    def append(self, **row):
        self.rows.append(row)

    @property
    def lower(self) -> list[float]:
        return [r["lower"] for r in self.rows]

    @property
    def upper(self) -> list[float]:
        return [r["upper"] for r in self.rows]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["iteration", "lower", "upper", "gap", "seconds"])
        for r in self.rows:
            wr.writerow([r["iteration"], f"{r['lower']:.10g}", f"{r['upper']:.10g}",
                         f"{r['gap']:.6g}", f"{r['seconds']:.3f}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def default_theta0(net: PowerNetwork) -> float:
    """Valid lower bound on any scenario's balancing cost (down-activation credits)."""
    return -sum(g.energy_cost * g.res_dn_cap for g in net.generators)


def build_master(net: PowerNetwork, mats: GridMatrices, prob, n_zones: int, chi: float = 0.0,
                 y_min: int = 1, theta0: float | None = None,
                 params: SolverParams | None = None) -> MasterState:
    """First-stage MILP with per-scenario recourse estimates and no cuts."""
    prob = np.asarray(prob, dtype=float)
    theta0 = default_theta0(net) if theta0 is None else float(theta0)
    u_max = default_dual_bound(net, params)
    m = MilpModel(f"master_Z{n_zones}")
    pv, cap, rv, rkkt, da, dkkt = build_first_stage(m, net, mats, n_zones, chi, y_min, u_max)
    theta = [m.add_var(f"theta_{s + 1}", lb=theta0, ub=INF) for s in range(prob.size)]
    obj = rv.cost.copy().add(da.cost)
    for s, t in enumerate(theta):
        obj.add(t, float(prob[s]))
    m.minimize(obj)
    first_vars = list(rv.r_up) + list(rv.r_dn) + list(da.p) + list(da.w)
    handles = {"partition": pv, "capacity": cap, "reserve": rv, "reserve_kkt": rkkt,
               "day_ahead": da, "day_ahead_kkt": dkkt, "y_min": y_min, "chi": chi}
    return MasterState(m, theta, theta0, first_vars, prob, handles)


def solve_subproblem(net: PowerNetwork, mats: GridMatrices, wind, first: FirstStage,
                     params: SolverParams | None = None) -> SubproblemResult:
    """Balancing LP at a fixed first stage; slopes are fixing-row sensitivities."""
    m = MilpModel("subproblem")
    copies, rows = [], []
    for tag, vals in (("ru", first.r_up), ("rd", first.r_dn), ("p", first.p), ("w", first.w)):
        vs = []
        for k, val in enumerate(vals):
            v = m.add_var(f"fix_{tag}_{k + 1}", lb=-INF, ub=INF)
            rows.append(m.add_eq(v, float(val), f"fixrow_{tag}_{k + 1}"))
            vs.append(v)
        copies.append(vs)
    r_up, r_dn, p, w = copies
    blk = add_balancing_block(m, net, mats, wind, p, w, r_up, r_dn)
    m.minimize(blk.cost)
    sol = solve_lp(m, params)
    if sol.status == INFEASIBLE:
        raise InfeasibleError("balancing subproblem is infeasible at the master point",
                              elastic_rows(m, params))
    if not sol.ok:
        raise SolverLimitError(f"balancing subproblem ended with status {sol.status}")
    slope = np.array([sol.sensitivity(i) for i in rows])
    return SubproblemResult(float(sol.objective), slope, _extract_balancing(net, sol, blk))


def add_cuts(state: MasterState, results: list[SubproblemResult], anchor: np.ndarray) -> MasterState:
    """Append one optimality cut per scenario."""
    state.iteration += 1
    for s, res in enumerate(results):
        cut = Cut(s, res.cost, res.slope.copy(), np.asarray(anchor, float).copy(), state.iteration)
        e = LinExpr.of(state.theta[s]).copy()
        rhs = cut.intercept - float(cut.slope @ cut.anchor)
        for v, a in zip(state.first_vars, cut.slope):
            if a != 0.0:
                e.add(v, -a)
        state.model.add_ge(e, rhs, f"cut_{state.iteration}_{s + 1}")
        state.cuts.append(cut)
    return state


def _first_stage(state: MasterState, sol, net: PowerNetwork) -> FirstStage:
    vals = sol.values(state.first_vars)
    G, J = net.n_gen, net.n_wind
    return FirstStage(vals[:G], vals[G:2 * G], vals[2 * G:3 * G], vals[3 * G:3 * G + J])


def run_benders(net: PowerNetwork, mats: GridMatrices, scenarios: ScenarioSet, n_zones: int,
                chi: float = 0.0, y_min: int = 1, eps: float | None = None, rel_eps: float = 1e-4,
                max_iter: int = 50, params: SolverParams | None = None, jobs: int = 1,
                theta0: float | None = None, certify: bool = True):
    """Iterate master and subproblems until ``|sum pi theta - sum pi C_B| <= eps``.

    ``eps`` is absolute; when omitted the tolerance is ``rel_eps`` times the
    current upper bound. Returns ``(ZonalOutcome, BendersTrace)``; the outcome
    is the best first stage found (``info['converged']`` tells whether the
    tolerance was met).
    """
    params = params or SolverParams()
    if eps is not None and eps <= 0:
        raise ValueError("Benders tolerance must be positive")
    state = build_master(net, mats, scenarios.prob, n_zones, chi, y_min, theta0, params)
    trace = BendersTrace()
    t0 = time.monotonic()
    lower = -math.inf
    best = None  # (upper, master solution, first stage, results)
    for it in range(1, max_iter + 1):
        msol = solve_milp(state.model, params)
        if msol.status == INFEASIBLE:
            raise InfeasibleError("Benders master is infeasible")
        if not msol.ok:
            raise SolverLimitError(f"Benders master stopped with status {msol.status}")
        bound = msol.best_bound if math.isfinite(msol.best_bound) else msol.objective
        lower = max(lower, bound)
        msol = polish(state.model, msol, params, duals=_dual_vars(state))
        first = _first_stage(state, msol, net)

        def sub(s):
            return solve_subproblem(net, mats, scenarios.W[:, s], first, params)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(sub, range(scenarios.n_scen)))
        else:
            results = [sub(s) for s in range(scenarios.n_scen)]
        costs = np.array([r.cost for r in results])
        first_cost = reserve_cost(net, first.r_up, first.r_dn) + energy_cost(net, first.p)
        upper = first_cost + float(scenarios.prob @ costs)
        theta_val = float(scenarios.prob @ msol.values(state.theta))
        gap_now = abs(theta_val - float(scenarios.prob @ costs))
        if best is None or upper < best[0]:
            best = (upper, msol, first, results)
        tol = eps if eps is not None else rel_eps * max(1.0, abs(best[0]))
        trace.append(iteration=it, lower=lower, upper=best[0], gap=max(0.0, best[0] - lower),
                     seconds=time.monotonic() - t0, master_objective=msol.objective,
                     recourse_gap=gap_now)
        logger.info("benders it %d: lower %.8g upper %.8g", it, lower, best[0])
        if gap_now <= tol or best[0] - lower <= tol:
            trace.converged = True
            break
        add_cuts(state, results, first.flat())
    outcome = _outcome(state, net, mats, scenarios, best, params, certify)
    outcome.info.update({"converged": trace.converged, "iterations": len(trace.rows),
                         "lower_bound": lower, "cuts": len(state.cuts)})
    return outcome, trace


def _dual_vars(state: MasterState) -> list[Var]:
    h = state.handles
    return [c.mu for c in h["reserve_kkt"].handles + h["day_ahead_kkt"].handles]


def _outcome(state: MasterState, net, mats, scenarios, best, params, certify) -> ZonalOutcome:
    upper, msol, first, results = best
    h = state.handles
    part = extract_partition(msol, h["partition"], net)
    violations = verify_partition(net, part, y_min=h["y_min"])
    if violations:
        raise CertificationError("partition check failed: " + "; ".join(violations))
    rv = h["reserve"]
    gz = part.zone_index[[g.bus - 1 for g in net.generators]]
    r_up, r_dn = np.clip(first.r_up, 0, None), np.clip(first.r_dn, 0, None)
    reserves = ReserveSchedule(r_up, r_dn, reserve_cost(net, r_up, r_dn), zone_of_gen=gz)
    gamma = np.clip(msol.values(h["capacity"].gamma), 0.0, None)
    da = DayAheadSchedule(first.p, first.w, expected_flows(net, mats, first.p, first.w),
                          energy_cost(net, first.p), margins=gamma)
    bal = _stack(net, [r.detail for r in results], scenarios.prob)
    costs = CostBreakdown(reserves.cost, da.cost, bal.expected_cost)
    out = ZonalOutcome(part, msol.values(rv.lam_up), msol.values(rv.lam_dn), reserves, da, bal,
                       gamma, costs, upper, gap=msol.gap, statistics=state.model.statistics())
    out.audit = audit_bigm(state.model, msol, h["reserve_kkt"].handles + h["day_ahead_kkt"].handles)
    _audit_equalities([h["reserve_kkt"], h["day_ahead_kkt"]], msol, out.audit)
    if certify:
        cert = certify_lower_levels(net, mats, part, out.lam_up, out.lam_dn, r_up, r_dn,
                                    first.p, gamma, params)
        out.certification = cert
        if not cert["ok"]:
            raise CertificationError("lower-level certification failed in the Benders master")
    if not out.audit.clean:
        raise CertificationError("big-M audit flagged: " + "; ".join(out.audit.flagged[:5]))
    return out


__all__ = [
    "BendersTrace", "Cut", "FirstStage", "MasterState", "SubproblemResult", "add_cuts",
    "build_master", "default_theta0", "run_benders", "solve_subproblem",
]
